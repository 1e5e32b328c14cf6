// Acceptance gate for the noisekey library. Each criterion prints one
// PASS/FAIL line with its runtime; the process exit code is the number of
// failed criteria. Tolerances are pinned here, next to the checks they
// guard, so a regression shows up as a diff in this file or a FAIL line,
// never as a silently loosened bound.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "noisekey/attack.hpp"
#include "noisekey/channel.hpp"
#include "noisekey/params.hpp"
#include "noisekey/phrg.hpp"
#include "noisekey/protocol.hpp"
#include "noisekey/quantum.hpp"

using namespace noisekey;

namespace {

std::string g_detail;

bool fail(const char* message) {
    g_detail = message;
    return false;
}

template <typename... Args>
bool fail(const char* fmt, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, args...);
    g_detail = buf;
    return false;
}

// --------------------------------------------------------------------------
// 1. The two nonzero eigenvalues of the four-state mixture are an exact
//    complementary pair across the whole brightness range.

bool check_eigenvalue_identity() {
    constexpr int kPoints = 500;
    for (int i = 0; i < kPoints; ++i) {
        double alpha = 0.1 + (20.0 - 0.1) * i / (kPoints - 1);
        EigenSystem sys = eigensystem_analytic(alpha, 0.01);
        double sum = sys.eigenvalues[0] + sys.eigenvalues[1];
        if (std::abs(sum - 1.0) > 1e-12) {
            return fail("alpha=%.6f sum=%.17g", alpha, sum);
        }
    }
    return true;
}

// --------------------------------------------------------------------------
// 2. Diagonalizing the exact-overlap Gram construction reproduces the
//    closed-form pair up to a quadratic error in the basis separation. The
//    constant is fitted on the coarse decade (largest deviation across the
//    dominant pair and the residual eigenvalues) and must then cap the fine
//    decade as well; the factor 1.5 absorbs higher-order terms.

bool check_numeric_oracle_equivalence() {
    for (double alpha : {1.0, 2.0, 5.0}) {
        auto deviations = [&](double d) {
            std::array<double, 4> s = gram_sandwich_spectrum(alpha, d);
            EigenSystem an = eigensystem_analytic(alpha, d);
            double r = std::max(std::abs(s[0] - an.eigenvalues[0]),
                                std::abs(s[1] - an.eigenvalues[1]));
            return std::array<double, 3>{r, s[2], s[3]};
        };
        std::array<double, 3> coarse = deviations(1e-2);
        double c_fit = std::max({coarse[0], coarse[1], coarse[2]}) / 1e-4;
        if (!(c_fit < 1.0)) {
            return fail("alpha=%g unreasonable fit constant %.3g", alpha, c_fit);
        }
        std::array<double, 3> fine = deviations(1e-3);
        double bound = 1.5 * c_fit * 1e-6 + 1e-12;
        for (double value : fine) {
            if (value > bound) {
                return fail("alpha=%g fine-decade deviation %.3g > %.3g", alpha,
                            value, bound);
            }
        }
    }
    return true;
}

// --------------------------------------------------------------------------
// 3. Von Neumann entropy of the signal mixture rises monotonically from the
//    vacuum (rank-1, exactly zero) to one full bit per basis pair by alpha=3.

bool check_entropy_transition() {
    constexpr int kPoints = 60;
    auto entropy_at = [](double alpha) {
        // A zero-amplitude ensemble collapses to a single state; its entropy
        // is zero by rank, not by formula.
        if (alpha == 0.0) return 0.0;
        return von_neumann_entropy(eigensystem_analytic(alpha, 1e-3));
    };
    double prev = -1.0;
    for (int i = 0; i < kPoints; ++i) {
        double alpha = 3.0 * i / (kPoints - 1);
        double h = entropy_at(alpha);
        if (i == 0 && h != 0.0) return fail("H(0)=%.17g, want exact 0", h);
        if (h < prev - 1e-12) {
            return fail("alpha=%.4f entropy %.12g dips below %.12g", alpha, h, prev);
        }
        prev = h;
    }
    if (prev < 0.999) return fail("H(3)=%.12g < 0.999", prev);
    return true;
}

// --------------------------------------------------------------------------
// 4. The exact phase distribution stays normalized at the working photon
//    number, and its peaks merge pairwise as the bases close in.

bool check_phase_distribution() {
    // Strict circular maxima above a relative floor. The dead zones of the
    // distribution sit at the floating-point noise level (~1e-16) and ripple,
    // so an unfloored count picks up phantom peaks fourteen orders of
    // magnitude below the real ones.
    auto count_maxima = [](const std::vector<double>& p) {
        double top = *std::max_element(p.begin(), p.end());
        std::size_t n = p.size(), peaks = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i] > 1e-6 * top && p[i] > p[(i + n - 1) % n] &&
                p[i] > p[(i + 1) % n]) {
                ++peaks;
            }
        }
        return peaks;
    };
    for (double d : {0.5, 0.1, 0.01}) {
        PhaseDistribution dist = four_state_distribution(5.0, d, 300);
        double total = 0.0;
        for (double p : dist.total) total += p;
        if (std::abs(total - 1.0) > 1e-9) {
            return fail("dphi=%g total mass %.12g", d, total);
        }
        std::size_t peaks = count_maxima(dist.total);
        if (d == 0.5 && peaks != 4) {
            return fail("dphi=0.5: %zu peaks, want 4 resolved positions", peaks);
        }
        if (d == 0.01 && peaks != 2) {
            return fail("dphi=0.01: %zu peaks, want 2 merged pairs", peaks);
        }
    }
    return true;
}

// --------------------------------------------------------------------------
// 5. Phase-measurement SNR sweeps: brighter light resolves better at every
//    separation, each curve rises with the separation, both dip below the
//    unusable SNR=1 line at small separations, and the unity crossing moves
//    to smaller separations as the light gets brighter.

bool check_snr_curves() {
    constexpr int kPoints = 13;
    const double lo = 1e-3, hi = 1.0;
    std::array<std::vector<double>, 2> curves;
    std::array<double, 2> crossing{};
    std::array<double, 2> photon_numbers{25.0, 400.0};
    for (std::size_t which = 0; which < 2; ++which) {
        double n = photon_numbers[which];
        double alpha = std::sqrt(n);
        int q = recommended_q(n);
        auto snr_at = [&](double d) { return snr_phase(alpha, d, q); };
        for (int i = 0; i < kPoints; ++i) {
            double d = lo * std::pow(hi / lo, static_cast<double>(i) / (kPoints - 1));
            curves[which].push_back(snr_at(d));
        }
        for (int i = 1; i < kPoints; ++i) {
            if (curves[which][i] < curves[which][i - 1]) {
                return fail("n=%g snr not monotone at point %d", n, i);
            }
        }
        if (!(curves[which].front() < 1.0)) {
            return fail("n=%g has no SNR<=1 region at small separation", n);
        }
        if (!(curves[which].back() > 1.0)) {
            return fail("n=%g never leaves the SNR<=1 region", n);
        }
        double a = lo, b = hi;
        for (int iter = 0; iter < 80; ++iter) {
            double mid = 0.5 * (a + b);
            (snr_at(mid) < 1.0 ? a : b) = mid;
        }
        crossing[which] = 0.5 * (a + b);
    }
    for (int i = 0; i < kPoints; ++i) {
        if (curves[1][i] < curves[0][i]) {
            return fail("curves out of order at point %d: %.6g < %.6g", i,
                        curves[1][i], curves[0][i]);
        }
    }
    if (!(crossing[1] < crossing[0])) {
        return fail("crossing did not shrink: n=400 at %.6g vs n=25 at %.6g",
                    crossing[1], crossing[0]);
    }
    return true;
}

// --------------------------------------------------------------------------
// 6. With the noise switched off the protocol is lossless for the sector
//    scheme and for every supported wheel size, including one whose block
//    size does not divide the sequence length.

bool check_noiseless_completeness() {
    NoiseModel quiet = NoiseModel::gaussian_sigma(0.0);
    std::vector<ProtocolParams> configs;
    configs.push_back(ProtocolParams::sector(25.0, 0.01, 4096));
    for (std::uint16_t m : {2, 4, 8, 16}) {
        configs.push_back(ProtocolParams::wheel(m, 25.0, 4096));
    }
    std::uint64_t seed = 41;
    for (const ProtocolParams& params : configs) {
        auto key_src = EntropySource::seeded(seed);
        auto a_src = EntropySource::seeded(seed + 1);
        auto b_src = EntropySource::seeded(seed + 2);
        seed += 3;
        BitSequence k0 = key_src.bits(params.key_bits);
        SessionState alice = make_session(Role::Initiator, params, k0);
        SessionState bob = make_session(Role::Responder, params, k0);
        RunResult run = run_cycles(alice, bob, a_src, b_src, 4, quiet);
        for (const CycleStats& s : run.stats) {
            if (s.bit_errors != 0) {
                return fail("m=%u cycle %zu: %zu errors", params.m, s.cycle,
                            s.bit_errors);
            }
        }
        for (std::size_t i = 0; i < run.initiator_batches.size(); ++i) {
            if (run.initiator_batches[i].bits != run.responder_batches[i].bits) {
                return fail("m=%u batch %zu disagrees", params.m, i);
            }
        }
    }
    return true;
}

// --------------------------------------------------------------------------
// 7. At a deliberately dim operating point the measured error rate matches
//    the Gaussian tail prediction 2*Phi(-(pi/2)/sigma_phi). Each round uses
//    a fresh pair of synchronized sessions: in a continuous run decode
//    errors would seed the next basis sequence and compound toward 50%,
//    which is a lineage property of the protocol, not the per-decode channel
//    physics this criterion pins down.

bool check_ber_physics() {
    constexpr double kOracle = 0.0263210749;   // 2*Phi(-(pi/2)/sqrt(2/4))
    constexpr double kThreeSigma = 4.803e-4;   // 3*sqrt(p(1-p)/1e6)
    ProtocolParams params = ProtocolParams::sector(4.0, 0.01, 10000);
    NoiseModel model = NoiseModel::gaussian_for(params.mean_photons);
    auto key_src = EntropySource::seeded(51);
    auto bit_src = EntropySource::seeded(52);
    std::size_t bits = 0, errors = 0;
    for (int round = 0; round < 100; ++round) {
        BitSequence k0 = key_src.bits(params.key_bits);
        SessionState alice = make_session(Role::Initiator, params, k0);
        SessionState bob = make_session(Role::Responder, params, k0);
        HalfCycleSend sent = send_half_cycle(alice, bit_src, model);
        BitSequence decoded = receive_half_cycle(bob, sent.frame);
        errors += count_bit_errors(sent.sent, decoded);
        bits += decoded.size();
    }
    double ber = static_cast<double>(errors) / static_cast<double>(bits);
    if (bits != 1000000) return fail("expected 1e6 bits, got %zu", bits);
    if (std::abs(ber - kOracle) > kThreeSigma) {
        return fail("ber %.6g vs oracle %.6g +- %.3g", ber, kOracle, kThreeSigma);
    }
    return true;
}

// --------------------------------------------------------------------------
// 8. The security gap at the working point: the optimal single-shot
//    eavesdropper stays statistically indistinguishable from a coin flip
//    (99% Wilson interval inside 0.5 +- 0.02 and tighter than 0.01) while
//    the legitimate receiver decodes the very same frames essentially
//    error-free.

bool check_security_gap() {
    ProtocolParams params = ProtocolParams::sector(25.0, 0.01, 6250);
    auto key_src = EntropySource::seeded(71);
    auto a_src = EntropySource::seeded(72);
    auto b_src = EntropySource::seeded(73);
    BitSequence k0 = key_src.bits(params.key_bits);
    SessionState alice = make_session(Role::Initiator, params, k0);
    SessionState bob = make_session(Role::Responder, params, k0);
    NoiseModel model = NoiseModel::gaussian_for(params.mean_photons);
    RunResult run = run_cycles(alice, bob, a_src, b_src, 8, model);

    BitSequence truth;
    for (std::size_t i = 0; i < run.stats.size(); ++i) {
        const KeyBatch& sent = run.stats[i].sender == Role::Initiator
                                   ? run.initiator_batches[i]
                                   : run.responder_batches[i];
        truth.insert(truth.end(), sent.bits.begin(), sent.bits.end());
    }
    std::vector<SignalFrame> frames = run.tap->frames();
    AttackResult attack = run_guessing_attack(frames, truth, params, model);
    if (attack.trials != 100000) return fail("expected 1e5 trials, got %zu", attack.trials);
    if (attack.wilson_lo < 0.48 || attack.wilson_hi > 0.52) {
        return fail("wilson [%.5f, %.5f] outside [0.48, 0.52]", attack.wilson_lo,
                    attack.wilson_hi);
    }
    if (attack.wilson_hi - attack.wilson_lo > 0.01) {
        return fail("wilson width %.5f > 0.01", attack.wilson_hi - attack.wilson_lo);
    }

    std::size_t bits = 0, errors = 0;
    for (const CycleStats& s : run.stats) {
        bits += s.bits;
        errors += s.bit_errors;
    }
    double ber = static_cast<double>(errors) / static_cast<double>(bits);
    if (!(ber < 1e-5)) {
        return fail("receiver ber %.3g not < 1e-5 on the same frames", ber);
    }
    return true;
}

// --------------------------------------------------------------------------
// 9. The correlation attack's XOR stream: exactly zero entropy without
//    noise, and near the predicted residual entropy H2(2p(1-p)) with it.

bool check_xor_frustration() {
    auto src = EntropySource::seeded(81);

    ProtocolParams quiet_params = ProtocolParams::sector(25.0, 0.01, 64);
    NoiseModel quiet = NoiseModel::gaussian_sigma(0.0);
    std::vector<SignalFrame> quiet_frames;
    quiet_frames.push_back(emit_repeated(1, 1, 2000, quiet_params, quiet, src));
    quiet_frames.push_back(emit_repeated(1, 1, 2000, quiet_params, quiet, src));
    XorDemoResult silent = xor_correlation_demo(quiet_frames);
    if (silent.entropy_bits != 0.0 || silent.ones != 0) {
        return fail("noiseless xor: %zu ones, entropy %.6g", silent.ones,
                    silent.entropy_bits);
    }

    constexpr double kOracle = 0.29171091;    // H2(2p(1-p)), p = 0.0263210749
    constexpr double kThreeSigma = 8.8e-3;    // delta-method, 1e5 xor bits
    ProtocolParams noisy_params = ProtocolParams::sector(4.0, 0.01, 64);
    NoiseModel noisy = NoiseModel::gaussian_for(4.0);
    std::vector<SignalFrame> noisy_frames;
    noisy_frames.push_back(emit_repeated(1, 0, 100000, noisy_params, noisy, src));
    noisy_frames.push_back(emit_repeated(1, 0, 100000, noisy_params, noisy, src));
    XorDemoResult loud = xor_correlation_demo(noisy_frames);
    if (std::abs(loud.entropy_bits - kOracle) > kThreeSigma) {
        return fail("xor entropy %.6g vs oracle %.6g +- %.2g", loud.entropy_bits,
                    kOracle, kThreeSigma);
    }
    return true;
}

// --------------------------------------------------------------------------
// 10. Brute-force complexity, checked against hand-computed substitutions.

bool check_complexity_values() {
    struct Case {
        std::size_t k0;
        std::uint32_t n_sigma;
        double want;
    };
    // log2 C = K0 + log2((log2 N)!) + log2(N): 8+0+1, 256+1+2, 38+0+0.
    for (const Case& c : {Case{8, 2, 9.0}, Case{256, 4, 259.0}, Case{38, 1, 38.0}}) {
        double got = brute_force_complexity(c.k0, c.n_sigma).log2_combinations;
        if (got != c.want) {
            return fail("k0=%zu n_sigma=%u: %.17g != %.17g", c.k0, c.n_sigma, got,
                        c.want);
        }
    }
    return true;
}

// --------------------------------------------------------------------------
// 11. Wire-format stability: randomized round trips plus the golden byte
//     vector for a small sector frame.

bool check_frame_format() {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        SignalFrame frame;
        frame.encoding = (rng() & 1) ? Encoding::SectorM2 : Encoding::UniformWheel;
        frame.m = frame.encoding == Encoding::SectorM2
                      ? 2
                      : static_cast<std::uint16_t>(1u << (1 + rng() % 15));
        frame.delta_phi1 = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        std::uint32_t limit =
            frame.encoding == Encoding::SectorM2 ? 4 : 2u * frame.m;
        std::size_t count = rng() % 65;
        for (std::size_t i = 0; i < count; ++i) {
            frame.positions.push_back(static_cast<std::uint16_t>(rng() % limit));
        }
        SignalFrame back = deserialize_frame(serialize_frame(frame));
        if (back.encoding != frame.encoding || back.m != frame.m ||
            back.delta_phi1 != frame.delta_phi1 || back.positions != frame.positions) {
            return fail("round trip diverged at trial %d", trial);
        }
    }

    SignalFrame sample;
    sample.encoding = Encoding::SectorM2;
    sample.m = 2;
    sample.delta_phi1 = 0.01;
    sample.positions = {2, 1, 3, 0};
    const std::vector<std::uint8_t> golden{
        0x4e, 0x4b, 0x44, 0x46, 0x01, 0x01, 0x02, 0x00, 0x7b, 0x14,
        0xae, 0x47, 0xe1, 0x7a, 0x84, 0x3f, 0x04, 0x00, 0x00, 0x00,
        0x02, 0x00, 0x01, 0x00, 0x03, 0x00, 0x00, 0x00};
    if (serialize_frame(sample) != golden) return fail("golden bytes changed");
    return true;
}

struct Criterion {
    const char* name;
    bool (*check)();
};

}  // namespace

int main() {
    const Criterion criteria[] = {
        {"analytic eigenvalue pair sums to one", &check_eigenvalue_identity},
        {"numeric spectrum tracks closed form quadratically",
         &check_numeric_oracle_equivalence},
        {"entropy transition vacuum -> classical bit", &check_entropy_transition},
        {"phase distribution normalized, peaks merge 4 -> 2",
         &check_phase_distribution},
        {"snr curves ordered, unity crossing shrinks", &check_snr_curves},
        {"noiseless protocol round-trips every bit", &check_noiseless_completeness},
        {"receiver ber matches the gaussian tail", &check_ber_physics},
        {"eavesdropper at coin-flip while receiver is clean", &check_security_gap},
        {"xor stream: zero quiet entropy, predicted noisy entropy",
         &check_xor_frustration},
        {"brute-force complexity matches hand computation",
         &check_complexity_values},
        {"wire frames: random round trips and golden bytes", &check_frame_format},
    };

    int failures = 0;
    int index = 0;
    for (const Criterion& c : criteria) {
        ++index;
        g_detail.clear();
        auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = c.check();
        } catch (const std::exception& e) {
            g_detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                    start)
                          .count();
        std::printf("%s %2d/11 %-55s (%.2f s)%s%s\n", ok ? "PASS" : "FAIL", index,
                    c.name, secs, g_detail.empty() ? "" : " ", g_detail.c_str());
        if (!ok) ++failures;
    }
    std::printf("%d/11 criteria passed\n", 11 - failures);
    return failures;
}
