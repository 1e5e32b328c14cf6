#pragma once

// Adversary models over the wiretap's perfect copies: a Bayes-optimal bit
// guesser that knows everything except the basis sequence, a correlation
// (XOR) attack demonstrator, and the brute-force key-search complexity
// calculator. All of them consume quantized positions only, because that is
// all the wire carries.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "noisekey/channel.hpp"
#include "noisekey/errors.hpp"
#include "noisekey/params.hpp"
#include "noisekey/phrg.hpp"
#include "noisekey/protocol.hpp"
#include "noisekey/wheel.hpp"

namespace noisekey {

// Two-sided 99% normal quantile, Phi^-1(0.995).
inline constexpr double kWilsonZ99 = 2.5758293035489004;

// Wilson score interval at 99% confidence. Always brackets the point rate.
inline std::pair<double, double> wilson_interval_99(std::size_t successes,
                                                    std::size_t trials) {
    if (trials == 0) throw UsageError("wilson_interval_99: zero trials");
    if (successes > trials) throw UsageError("wilson_interval_99: successes > trials");
    double n = static_cast<double>(trials);
    double p = static_cast<double>(successes) / n;
    double z2 = kWilsonZ99 * kWilsonZ99;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = kWilsonZ99 / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    return {center - half, center + half};
}

struct AttackResult {
    std::size_t trials = 0;
    std::size_t successes = 0;
    double success_rate = std::numeric_limits<double>::quiet_NaN();
    double wilson_lo = 0.0;
    double wilson_hi = 1.0;
    bool defined = false;  // false on zero trials; rate is NaN then
};

// Half-open Voronoi cell [lo, hi) of each allowed position, in absolute
// angle. Neighbouring positions split the circle at their midpoints.
inline std::vector<std::pair<double, double>> position_cells(Encoding encoding,
                                                             std::uint16_t m,
                                                             double delta_phi1) {
    std::vector<double> centers = allowed_positions(encoding, m, delta_phi1);
    std::size_t n = centers.size();
    std::vector<std::pair<double, double>> cells(n);
    for (std::size_t i = 0; i < n; ++i) {
        double prev = i == 0 ? centers[n - 1] - kTwoPi : centers[i - 1];
        double next = i + 1 == n ? centers[0] + kTwoPi : centers[i + 1];
        cells[i] = {0.5 * (prev + centers[i]), 0.5 * (centers[i] + next)};
    }
    return cells;
}

// P(position | emitted at `ideal`) over all position indices; the cell
// masses of one noise draw around the ideal phase. Sums to one.
inline std::vector<double> position_distribution(double ideal, const ProtocolParams& params,
                                                 const NoiseModel& model) {
    auto cells = position_cells(params.encoding, params.m, params.delta_phi1);
    std::vector<double> probs(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        probs[i] = model.cell_mass(cells[i].first - ideal, cells[i].second - ideal);
    }
    return probs;
}

// Maximum-posterior bit decision without basis knowledge: uniform prior over
// every (basis, bit) hypothesis, likelihood = the noise model's mass on the
// observed quantization cell given that hypothesis' ideal phase. Posteriors
// are precomputed per observable position.
class BayesGuesser {
  public:
    BayesGuesser(const ProtocolParams& params, const NoiseModel& model) : params_(params) {
        params.validate_geometry();
        std::uint32_t n_pos = position_count(params.encoding, params.m);
        std::uint32_t n_bases =
            params.encoding == Encoding::SectorM2 ? 2u : static_cast<std::uint32_t>(params.m);
        auto cells = position_cells(params.encoding, params.m, params.delta_phi1);

        // joint[h][pos], h enumerating (basis, bit) pairs at uniform prior.
        double prior = 1.0 / (2.0 * n_bases);
        std::vector<double> p1(n_pos, 0.0), total(n_pos, 0.0);
        correct_rate_ = 0.0;
        std::vector<std::vector<double>> likelihood(2 * n_bases,
                                                    std::vector<double>(n_pos));
        for (std::uint32_t basis = 0; basis < n_bases; ++basis) {
            for (std::uint8_t bit = 0; bit <= 1; ++bit) {
                double ideal =
                    params.encoding == Encoding::SectorM2
                        ? sector_phase(static_cast<std::uint8_t>(basis), bit, params.delta_phi1)
                        : encode_mry(bit, basis, params.m);
                auto& lik = likelihood[2 * basis + bit];
                for (std::uint32_t pos = 0; pos < n_pos; ++pos) {
                    lik[pos] =
                        model.cell_mass(cells[pos].first - ideal, cells[pos].second - ideal);
                    total[pos] += prior * lik[pos];
                    if (bit == 1) p1[pos] += prior * lik[pos];
                }
            }
        }
        posterior_one_.resize(n_pos);
        for (std::uint32_t pos = 0; pos < n_pos; ++pos) {
            posterior_one_[pos] = total[pos] > 0.0 ? p1[pos] / total[pos] : 0.5;
        }
        // Expected success of the MAP rule under the same generative model.
        for (std::uint32_t basis = 0; basis < n_bases; ++basis) {
            for (std::uint8_t bit = 0; bit <= 1; ++bit) {
                const auto& lik = likelihood[2 * basis + bit];
                for (std::uint32_t pos = 0; pos < n_pos; ++pos) {
                    if (guess(static_cast<std::uint16_t>(pos)) == bit) {
                        correct_rate_ += prior * lik[pos];
                    }
                }
            }
        }
    }

    double posterior_bit1(std::uint16_t position) const {
        if (position >= posterior_one_.size()) {
            throw UsageError("BayesGuesser: position out of range");
        }
        return posterior_one_[position];
    }

    std::uint8_t guess(std::uint16_t position) const {
        return posterior_bit1(position) > 0.5 ? 1 : 0;
    }

    // Analytic success probability of this rule when the data really come
    // from the configured model (uniform basis and bit).
    double expected_success_rate() const { return correct_rate_; }

    const ProtocolParams& params() const { return params_; }

  private:
    ProtocolParams params_;
    std::vector<double> posterior_one_;
    double correct_rate_ = 0.0;
};

// Score the guesser against ground truth over captured frames. The truth
// sequence is harness knowledge; a real attacker has no access to it.
inline AttackResult run_guessing_attack(std::span<const SignalFrame> frames,
                                        const BitSequence& truth,
                                        const ProtocolParams& params,
                                        const NoiseModel& model) {
    std::size_t total = 0;
    for (const auto& f : frames) total += f.positions.size();
    if (total != truth.size()) {
        throw UsageError("run_guessing_attack: truth length does not match frames");
    }
    AttackResult result;
    if (total == 0) return result;  // zero-trial: rate undefined, flagged

    BayesGuesser guesser(params, model);
    std::size_t at = 0;
    std::size_t hits = 0;
    for (const auto& f : frames) {
        for (std::uint16_t pos : f.positions) {
            if (guesser.guess(pos) == truth[at]) ++hits;
            ++at;
        }
    }
    result.trials = total;
    result.successes = hits;
    result.success_rate = static_cast<double>(hits) / static_cast<double>(total);
    auto [lo, hi] = wilson_interval_99(hits, total);
    result.wilson_lo = lo;
    result.wilson_hi = hi;
    result.defined = true;
    return result;
}

inline double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("binary_entropy: p outside [0, 1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

struct XorDemoResult {
    std::size_t xor_bits = 0;
    std::size_t ones = 0;
    double p_one = 0.0;
    double entropy_bits = 0.0;
};

// Correlation-attack demonstrator. The attacker hard-decides each position
// without basis knowledge (near-zero half of the circle is called 0) and
// XORs frame pairs elementwise, hoping repeated emissions of the same bits
// cancel. With noise the XOR stream carries the noise difference instead,
// and its entropy is what this measures; with zero noise it is exactly 0.
inline XorDemoResult xor_correlation_demo(std::span<const SignalFrame> frames) {
    if (frames.size() < 2) {
        throw UsageError("xor_correlation_demo: need at least two frames");
    }
    XorDemoResult out;
    for (std::size_t pair = 0; pair + 1 < frames.size(); pair += 2) {
        const SignalFrame& a = frames[pair];
        const SignalFrame& b = frames[pair + 1];
        if (a.positions.size() != b.positions.size()) {
            throw UsageError("xor_correlation_demo: frame length mismatch");
        }
        if (a.encoding != b.encoding || a.m != b.m) {
            throw UsageError("xor_correlation_demo: frame geometry mismatch");
        }
        for (std::size_t i = 0; i < a.positions.size(); ++i) {
            double pa = position_phase(a.encoding, a.m, a.delta_phi1, a.positions[i]);
            double pb = position_phase(b.encoding, b.m, b.delta_phi1, b.positions[i]);
            auto hard = [](double phase) -> std::uint8_t {
                double r = wrap_pi(phase);
                return (r > -kHalfPi && r <= kHalfPi) ? 0 : 1;
            };
            std::uint8_t x = hard(pa) ^ hard(pb);
            out.ones += x;
            out.xor_bits += 1;
        }
    }
    if (out.xor_bits > 0) {
        out.p_one = static_cast<double>(out.ones) / static_cast<double>(out.xor_bits);
        out.entropy_bits = binary_entropy(out.p_one);
    }
    return out;
}

struct ComplexityEstimate {
    std::size_t k0_bits = 0;
    std::uint32_t n_sigma = 1;
    int log2_n_sigma_used = 0;       // the integral log2 fed to the factorial
    bool n_sigma_power_of_two = true;  // false when the ceiling was taken
    double log2_combinations = 0.0;
};

// log2 of C = 2^{K0} * (log2 N_sigma)! * N_sigma, evaluated in log space so
// K0 in the hundreds stays finite. A non-power-of-two N_sigma has no
// integral log2; the ceiling is used and flagged.
inline ComplexityEstimate brute_force_complexity(std::size_t k0_bits,
                                                 std::uint32_t n_sigma) {
    if (n_sigma < 1) throw UsageError("brute_force_complexity: n_sigma must be >= 1");
    ComplexityEstimate est;
    est.k0_bits = k0_bits;
    est.n_sigma = n_sigma;
    est.n_sigma_power_of_two = (n_sigma & (n_sigma - 1)) == 0;
    int j = 0;
    while ((1u << j) < n_sigma) ++j;  // ceil(log2)
    est.log2_n_sigma_used = j;
    double log2_factorial = std::lgamma(static_cast<double>(j) + 1.0) / std::log(2.0);
    est.log2_combinations =
        static_cast<double>(k0_bits) + log2_factorial + std::log2(static_cast<double>(n_sigma));
    return est;
}

// Convention for N_sigma: how many allowed positions (including the
// reference itself) lie within +-2 sigma_phi of position 0.
inline std::uint32_t estimate_n_sigma(const ProtocolParams& params) {
    double reach = 2.0 * params.noise_sigma();
    std::uint32_t covered = 0;
    for (double angle : allowed_positions(params.encoding, params.m, params.delta_phi1)) {
        if (std::abs(wrap_pi(angle)) <= reach) ++covered;
    }
    return covered == 0 ? 1 : covered;
}

// Repeated emissions of one (bit, basis) pair collected into a frame; the
// raw material of the correlation attack demo.
inline SignalFrame emit_repeated(std::uint8_t bit, std::uint32_t basis, std::size_t count,
                                 const ProtocolParams& params, const NoiseModel& model,
                                 EntropySource& source) {
    SignalFrame frame;
    frame.encoding = params.encoding;
    frame.m = params.m;
    frame.delta_phi1 = params.delta_phi1;
    frame.positions.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        frame.positions.push_back(emit_signal(bit, basis, params, model, source).index);
    }
    return frame;
}

}  // namespace noisekey
