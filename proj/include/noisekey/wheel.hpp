#pragma once

// Phase-wheel geometry: basis derivation, transmit positions, quantization
// and bit decisions. Everything here is pure arithmetic on angles; phases are
// doubles in radians, reduced into [0, 2*pi).

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "noisekey/errors.hpp"
#include "noisekey/params.hpp"

namespace noisekey {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;
inline constexpr double kHalfPi = 1.57079632679489661923;

// Reduce an angle into [0, 2*pi). fmod keeps |r| < 2*pi; the two fixups fold
// negative remainders up and absorb the rounding case where r + 2*pi lands
// exactly on 2*pi.
inline double wrap_two_pi(double x) {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

// Reduce an angle into (-pi, pi].
inline double wrap_pi(double x) {
    double r = wrap_two_pi(x);
    return r > kPi ? r - kTwoPi : r;
}

// An angle on the wheel, optionally snapped to one of the allowed transmit
// positions.
struct PhasePoint {
    double value = 0.0;       // angle in [0, 2*pi)
    std::uint16_t index = 0;  // allowed-position index (valid when quantized)
    bool quantized = false;
};

// Map a block of basis bits to a wheel index. The first bit carries the
// highest weight: bits (b_1, .., b_k) give sum b_j * 2^(k-j).
inline std::uint32_t basis_index(std::span<const std::uint8_t> block) {
    if (block.empty() || block.size() > 15) {
        throw UsageError("basis_index: block must hold 1..15 bits");
    }
    std::uint32_t k = 0;
    for (std::uint8_t b : block) {
        if (b > 1) throw UsageError("basis_index: block elements must be 0 or 1");
        k = (k << 1) | b;
    }
    return k;
}

// Phase of wheel basis k out of M: pi*(k/M) for even k, plus a half turn for
// odd k. Interleaving even and odd spreads the M basis phases so that the 2M
// transmit positions form a uniform grid of spacing pi/M.
inline double wheel_phase(std::uint32_t k, std::uint32_t m) {
    if (m < 2 || k >= m) throw UsageError("wheel_phase: need k < m, m >= 2");
    double odd = static_cast<double>(k & 1u);
    return wrap_two_pi(kPi * (static_cast<double>(k) / m + odd));
}

// Transmit phase for one bit on wheel basis k; bit 1 sits a half turn away.
inline double encode_mry(int bit, std::uint32_t k, std::uint32_t m) {
    if (bit != 0 && bit != 1) throw UsageError("encode_mry: bit must be 0 or 1");
    return wrap_two_pi(wheel_phase(k, m) + bit * kPi);
}

// Transmit phase of the two-sector scheme given the previous shared bit
// (basis) and the current fresh bit:
//   basis 0: bit 0 -> 0,        bit 1 -> pi
//   basis 1: bit 0 -> pi+dphi1, bit 1 -> dphi1
// On basis 1 the pair is rotated by dphi1 and the bit mapping is inverted,
// which is what hides the basis inside the phase noise.
inline double sector_phase(int basis_bit, int bit, double delta_phi1) {
    if ((basis_bit | bit) > 1 || basis_bit < 0 || bit < 0) {
        throw UsageError("sector_phase: bits must be 0 or 1");
    }
    double base = basis_bit ? (bit ? 0.0 : kPi) + delta_phi1  //
                            : (bit ? kPi : 0.0);
    return wrap_two_pi(base);
}

// Number of allowed transmit positions.
inline std::uint32_t position_count(Encoding encoding, std::uint32_t m) {
    if (encoding == Encoding::SectorM2) return 4;
    if (m < 2 || (m & (m - 1)) != 0) {
        throw UsageError("position_count: m must be a power of two, at least 2");
    }
    return 2 * m;
}

// Angle of an allowed position index.
inline double position_phase(Encoding encoding, std::uint32_t m, double delta_phi1,
                             std::uint32_t index) {
    if (index >= position_count(encoding, m)) {
        throw UsageError("position_phase: index out of range");
    }
    if (encoding == Encoding::UniformWheel) {
        return wrap_two_pi(index * (kPi / m));
    }
    switch (index) {
        case 0: return 0.0;
        case 1: return wrap_two_pi(delta_phi1);
        case 2: return kPi;
        default: return wrap_two_pi(kPi + delta_phi1);
    }
}

// All allowed positions in index order.
inline std::vector<double> allowed_positions(Encoding encoding, std::uint32_t m,
                                             double delta_phi1) {
    std::uint32_t n = position_count(encoding, m);
    std::vector<double> out(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        out[i] = position_phase(encoding, m, delta_phi1, i);
    }
    return out;
}

// Snap a raw angle to the nearest allowed position (circular distance).
// Ties break toward the lower position index; the linear scan with a strict
// comparison makes that deterministic, including across the 0/2*pi seam.
inline PhasePoint quantize(double raw, Encoding encoding, std::uint32_t m,
                           double delta_phi1) {
    double value = wrap_two_pi(raw);
    std::uint32_t n = position_count(encoding, m);
    std::uint32_t best = 0;
    double best_dist = std::abs(wrap_pi(value - position_phase(encoding, m, delta_phi1, 0)));
    for (std::uint32_t i = 1; i < n; ++i) {
        double d = std::abs(wrap_pi(value - position_phase(encoding, m, delta_phi1, i)));
        if (d < best_dist) {
            best_dist = d;
            best = i;
        }
    }
    return PhasePoint{position_phase(encoding, m, delta_phi1, best),
                      static_cast<std::uint16_t>(best), true};
}

// Bit decision for the two-sector scheme. Subtract the basis offset, reduce
// to (-pi, pi], and split the circle at +-pi/2; basis 1 inverts the mapping
// because its bit-1 position is the one near zero.
inline int decode_sector(double received_phase, int basis_bit, double delta_phi1) {
    if (basis_bit != 0 && basis_bit != 1) {
        throw UsageError("decode_sector: basis_bit must be 0 or 1");
    }
    double r = wrap_pi(received_phase - (basis_bit ? delta_phi1 : 0.0));
    int near_zero = (r > -kHalfPi && r <= kHalfPi) ? 1 : 0;
    int bit = near_zero ? 0 : 1;
    return basis_bit ? 1 - bit : bit;
}

// Bit decision on wheel basis k: subtract the basis phase and split the
// circle at +-pi/2; bit 1 always sits a half turn from bit 0.
inline int decode_wheel(double received_phase, std::uint32_t k, std::uint32_t m) {
    double r = wrap_pi(received_phase - wheel_phase(k, m));
    return (r > -kHalfPi && r <= kHalfPi) ? 0 : 1;
}

}  // namespace noisekey
