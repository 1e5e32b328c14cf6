#pragma once

// Randomness plumbing for the simulator: an entropy source abstraction with
// an OS-backed and a seeded deterministic variant, plus the phase noise
// models that stand in for the physical random generator. Two noise models
// are provided: a Gaussian with the shot-noise width sigma_phi = sqrt(2/<n>),
// and an exact sampler drawn from the discrete phase distribution of a
// coherent state, whose intrinsic width (~ 1/(2 alpha)) is the narrower,
// purely quantum part of the story.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "noisekey/errors.hpp"
#include "noisekey/params.hpp"
#include "noisekey/quantum.hpp"
#include "noisekey/wheel.hpp"

namespace noisekey {

// Uniform bit/real source. The seeded form is the reproducible workhorse of
// every simulation path; the OS form exists for the rare "give me a real
// key" use and throws EnvironmentError if the platform entropy pool fails.
class EntropySource {
  public:
    static EntropySource seeded(std::uint64_t seed) { return EntropySource(seed); }

    static EntropySource os_entropy() {
        try {
            std::random_device dev;
            std::uint64_t hi = dev();
            std::uint64_t lo = dev();
            return EntropySource((hi << 32) ^ lo);
        } catch (const std::exception& e) {
            throw EnvironmentError(std::string("os_entropy unavailable: ") + e.what());
        }
    }

    std::uint8_t bit() { return static_cast<std::uint8_t>(engine_() & 1u); }

    BitSequence bits(std::size_t count) {
        BitSequence out(count);
        for (auto& b : out) b = bit();
        return out;
    }

    double uniform01() {
        return std::generate_canonical<double, 53>(engine_);
    }

    double gaussian(double sigma) {
        return normal_(engine_) * sigma;
    }

    std::uint64_t integer() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

  private:
    explicit EntropySource(std::uint64_t seed) : engine_(seed) {}

    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline BitSequence fresh_bits(EntropySource& src, std::size_t count) {
    return src.bits(count);
}

// Phase noise model: produces the signed phase offset added to each emitted
// signal, and exposes the probability mass a given offset cell carries so
// the analysis side can integrate decision regions without sampling.
class NoiseModel {
  public:
    // Shot-noise-width Gaussian for the given mean photon number.
    static NoiseModel gaussian_for(double mean_photons) {
        return gaussian_sigma(sigma_phi(mean_photons));
    }

    // Gaussian with an explicit width; sigma == 0 degenerates to a noiseless
    // channel (every sample is exactly zero), which the protocol tests lean on.
    static NoiseModel gaussian_sigma(double sigma) {
        if (!(sigma >= 0.0)) throw UsageError("NoiseModel: sigma must be >= 0");
        NoiseModel m;
        m.kind_ = Kind::Gaussian;
        m.sigma_ = sigma;
        return m;
    }

    // Exact coherent-state phase statistics at the given intensity, sampled
    // by inverse CDF over the discrete grid of q+1 offsets in (-pi, pi].
    static NoiseModel pegg_barnett(double mean_photons, int q = -1) {
        if (!(mean_photons > 0.0)) {
            throw UsageError("NoiseModel: mean_photons must be positive");
        }
        if (q < 0) q = recommended_q(mean_photons);
        NoiseModel m;
        m.kind_ = Kind::PeggBarnettExact;
        double alpha = std::sqrt(mean_photons);
        std::vector<double> density = single_state_phase_density(alpha, 0.0, q);
        // Re-centre the grid: offset_m = wrap_pi(2 pi m / (q+1)), then sort
        // ascending so sampling and cell lookup can binary-search.
        std::size_t points = density.size();
        m.offsets_.resize(points);
        m.mass_.resize(points);
        std::vector<std::size_t> order(points);
        std::vector<double> raw(points);
        for (std::size_t i = 0; i < points; ++i) {
            raw[i] = wrap_pi(kTwoPi * static_cast<double>(i) / static_cast<double>(points));
            order[i] = i;
        }
        std::sort(order.begin(), order.end(),
                  [&raw](std::size_t a, std::size_t b) { return raw[a] < raw[b]; });
        for (std::size_t i = 0; i < points; ++i) {
            m.offsets_[i] = raw[order[i]];
            m.mass_[i] = density[order[i]];
        }
        m.cumulative_.resize(points);
        double acc = 0.0;
        for (std::size_t i = 0; i < points; ++i) {
            acc += m.mass_[i];
            m.cumulative_[i] = acc;
        }
        m.total_mass_ = acc;
        return m;
    }

    bool exact() const { return kind_ == Kind::PeggBarnettExact; }

    double sigma() const { return sigma_; }

    // One signed phase offset.
    double sample(EntropySource& src) const {
        if (kind_ == Kind::Gaussian) {
            return sigma_ == 0.0 ? 0.0 : src.gaussian(sigma_);
        }
        double u = src.uniform01() * total_mass_;
        auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t idx = it == cumulative_.end()
                              ? cumulative_.size() - 1
                              : static_cast<std::size_t>(it - cumulative_.begin());
        return offsets_[idx];
    }

    // Probability that the offset lands in [lo, hi) on the circle, with the
    // interval given in the frame of the emitted phase. Intervals may sit
    // anywhere (a likelihood evaluation shifts cells by the hypothesis
    // phase); anything spanning a full turn has mass one. Gaussian mass
    // wraps over k in [-3, 3] turns, which is exhaustive below sigma ~ 1.
    double cell_mass(double lo, double hi) const {
        if (!(hi > lo)) throw UsageError("cell_mass: empty interval");
        if (hi - lo >= kTwoPi) return 1.0;
        if (kind_ == Kind::Gaussian) {
            if (sigma_ == 0.0) {
                // All mass at offset 0: rebase the start into (-2 pi, 0] and
                // ask whether the half-open interval reaches past zero.
                double start = wrap_pi(lo);
                if (start > 0.0) start -= kTwoPi;
                return start + (hi - lo) > 0.0 ? 1.0 : 0.0;
            }
            double inv = 1.0 / (sigma_ * std::sqrt(2.0));
            double total = 0.0;
            for (int k = -3; k <= 3; ++k) {
                double shift = kTwoPi * k;
                total += 0.5 * (std::erf((hi + shift) * inv) - std::erf((lo + shift) * inv));
            }
            return total;
        }
        // Rebase so the interval starts inside (-pi, pi], then split at pi.
        double start = wrap_pi(lo);
        double width = hi - lo;
        double total = sorted_mass(start, std::min(start + width, kPi + 1e-30));
        if (start + width > kPi) {
            total += sorted_mass(-kPi, start + width - kTwoPi);
        }
        return total / total_mass_;
    }

  private:
    enum class Kind { Gaussian, PeggBarnettExact };

    NoiseModel() = default;

    // Mass of the sorted discrete offsets falling in [a, b).
    double sorted_mass(double a, double b) const {
        if (!(b > a)) return 0.0;
        auto first = std::lower_bound(offsets_.begin(), offsets_.end(), a);
        auto last = std::lower_bound(first, offsets_.end(), b);
        double total = 0.0;
        for (auto it = first; it != last; ++it) {
            total += mass_[static_cast<std::size_t>(it - offsets_.begin())];
        }
        return total;
    }

    Kind kind_ = Kind::Gaussian;
    double sigma_ = 0.0;
    std::vector<double> offsets_;
    std::vector<double> mass_;
    std::vector<double> cumulative_;
    double total_mass_ = 1.0;
};

// Emit one signal: pick the ideal constellation phase for (bit, basis), add
// one noise draw, and quantize the result to the nearest allowed transmit
// position. The wheel encoding treats `basis` as the wheel index k; the
// sector encoding as the basis bit.
inline PhasePoint emit_signal(std::uint8_t bit, std::uint32_t basis,
                              const ProtocolParams& params, const NoiseModel& model,
                              EntropySource& src) {
    if (bit > 1) throw UsageError("emit_signal: bit must be 0 or 1");
    double ideal;
    if (params.encoding == Encoding::SectorM2) {
        if (basis > 1) throw UsageError("emit_signal: sector basis must be 0 or 1");
        ideal = sector_phase(static_cast<std::uint8_t>(basis), bit, params.delta_phi1);
    } else {
        if (basis >= params.m) throw UsageError("emit_signal: wheel index out of range");
        ideal = encode_mry(bit, basis, params.m);
    }
    double noisy = ideal + model.sample(src);
    return quantize(noisy, params.encoding, params.m, params.delta_phi1);
}

}  // namespace noisekey
