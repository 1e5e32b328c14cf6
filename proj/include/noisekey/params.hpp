#pragma once

// Shared parameter and sequence types for the noise-keyed protocol stack.

#include <cmath>
#include <cstdint>
#include <vector>

#include "noisekey/errors.hpp"

namespace noisekey {

// One bit per element, each 0 or 1. Kept unpacked: desk-scale runs are small
// and unpacked bits keep the protocol arithmetic obvious.
using BitSequence = std::vector<std::uint8_t>;

// Basis indices derived from a bit sequence; each value < M.
using BasisSequence = std::vector<std::uint32_t>;

enum class Encoding : std::uint8_t {
    UniformWheel = 0,  // M-ary phase wheel, 2M transmit positions
    SectorM2 = 1,      // two-sector scheme, positions {0, dphi1, pi, pi+dphi1}
};

// Phase-noise width of a recorded coherent signal, sqrt(2/<n>).
inline double sigma_phi(double mean_photons) {
    if (!(mean_photons > 0.0)) {
        throw UsageError("sigma_phi: mean photon number must be positive");
    }
    return std::sqrt(2.0 / mean_photons);
}

// Default phase-grid truncation: large enough that the photon-number tail
// beyond q is negligible for the requested intensity.
inline int recommended_q(double mean_photons) {
    if (!(mean_photons >= 0.0)) {
        throw UsageError("recommended_q: mean photon number must be >= 0");
    }
    double needed = std::ceil(mean_photons + 10.0 * std::sqrt(mean_photons));
    return needed > 300.0 ? static_cast<int>(needed) : 300;
}

// Static description of one protocol configuration. Both endpoints of a
// session must agree on every field.
struct ProtocolParams {
    Encoding encoding = Encoding::SectorM2;
    std::uint16_t m = 2;              // basis count on the wheel, power of two
    std::uint16_t bits_per_basis = 1; // bits consumed per basis index; m == 2^bits_per_basis
    double delta_phi1 = 0.01;         // separation angle of paired sectors (radians)
    double mean_photons = 25.0;       // <n> of each signal state
    std::size_t key_bits = 4096;      // L: bits per half cycle, also |K0|
    int q = 300;                      // phase-grid truncation for exact-noise work

    double noise_sigma() const { return sigma_phi(mean_photons); }

    static ProtocolParams sector(double mean_photons, double delta_phi1,
                                 std::size_t key_bits, int q = -1) {
        ProtocolParams p;
        p.encoding = Encoding::SectorM2;
        p.m = 2;
        p.bits_per_basis = 1;
        p.delta_phi1 = delta_phi1;
        p.mean_photons = mean_photons;
        p.key_bits = key_bits;
        p.q = q >= 0 ? q : recommended_q(mean_photons);
        p.validate();
        return p;
    }

    static ProtocolParams wheel(std::uint16_t m, double mean_photons,
                                std::size_t key_bits, int q = -1) {
        ProtocolParams p;
        p.encoding = Encoding::UniformWheel;
        p.m = m;
        p.bits_per_basis = 0;
        for (std::uint32_t v = m; v > 1; v >>= 1) ++p.bits_per_basis;
        // Wheel geometry does not use delta_phi1; carry the level spacing so
        // frames stay self-describing.
        p.delta_phi1 = 3.14159265358979323846 / m;
        p.mean_photons = mean_photons;
        p.key_bits = key_bits;
        p.q = q >= 0 ? q : recommended_q(mean_photons);
        p.validate();
        return p;
    }

    // Structural checks only. Attack analysis deliberately accepts
    // configurations the key-distribution path would refuse, so that an
    // insecure geometry can be demonstrated as insecure.
    void validate_geometry() const {
        if (m < 2 || (m & (m - 1)) != 0) {
            throw UsageError("params: m must be a power of two, at least 2");
        }
        if (m > 32768) {
            // 16-bit wire positions allow at most 2*32768 distinct indices.
            throw UsageError("params: m exceeds the 16-bit position budget");
        }
        if ((std::uint32_t{1} << bits_per_basis) != m) {
            throw UsageError("params: bits_per_basis inconsistent with m");
        }
        if (!(mean_photons > 0.0)) {
            throw UsageError("params: mean_photons must be positive");
        }
        if (key_bits < bits_per_basis) {
            // A shorter sequence cannot seed even one basis. Indivisible
            // lengths are fine: the session layer drops the trailing partial
            // block when deriving bases.
            throw UsageError("params: key_bits must cover at least one basis block");
        }
        if (q < 1) {
            throw UsageError("params: q must be at least 1");
        }
        if (!(delta_phi1 > 0.0)) {
            throw UsageError("params: delta_phi1 must be positive");
        }
        if (encoding == Encoding::SectorM2 && m != 2) {
            throw UsageError("params: sector encoding requires m == 2");
        }
    }

    // Structural checks plus the security margins a running session insists
    // on. Key distribution uses this; the attack toolkit uses the geometry
    // check alone.
    void validate() const {
        validate_geometry();
        if (encoding == Encoding::SectorM2) {
            double sigma = noise_sigma();
            // Security geometry: the sector pair must hide inside the noise
            // and the noise must stay inside a quadrant.
            if (!(delta_phi1 < sigma)) {
                throw UsageError("params: sector encoding requires delta_phi1 < sigma_phi");
            }
            if (!(sigma < 1.57079632679489661923)) {
                throw UsageError("params: sector encoding requires sigma_phi < pi/2");
            }
        }
    }
};

}  // namespace noisekey
