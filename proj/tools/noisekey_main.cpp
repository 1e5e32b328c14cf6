// noisekey: desk-scale simulator and analysis front end for a noise-keyed
// key-distribution scheme over non-orthogonal phase bases.
//
// Subcommands:
//   simulate      run initiator/responder cycles over a loopback link
//   entropy-scan  von Neumann entropy of the four-state mixture vs alpha
//   phase-dist    exact phase distribution of the signal constellation
//   snr-scan      attacker SNR vs separation angle, with SNR=1 crossings
//   attack        Bayes guessing attack, XOR demo, brute-force complexity
//   otp           one-time-pad demo over a persistent keystore
//
// Every CSV row repeats the run parameters and the tool version, so output
// files are self-describing. Fixed seeds give byte-identical reruns; the
// NOISEKEY_SEED environment variable overrides --seed everywhere.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "noisekey/noisekey.hpp"

namespace nk = noisekey;

namespace {

constexpr const char* kToolVersion = "0.1.0";

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string csv_quote(const std::string& raw) {
    if (raw.find_first_of(",\"\n") == std::string::npos) return raw;
    std::string out = "\"";
    for (char c : raw) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

std::uint64_t resolve_seed(std::uint64_t flag_seed) {
    const char* env = std::getenv("NOISEKEY_SEED");
    if (env == nullptr || *env == '\0') return flag_seed;
    std::uint64_t value = 0;
    const char* end = env + std::strlen(env);
    auto [ptr, ec] = std::from_chars(env, end, value, 10);
    if (ec != std::errc{} || ptr != end) {
        throw nk::UsageError("NOISEKEY_SEED must be an unsigned integer, got '" +
                             std::string(env) + "'");
    }
    return value;
}

// Stdout by default, a file when --out is given.
class Output {
  public:
    explicit Output(const std::string& path) : path_(path) {
        if (!path.empty()) {
            file_.open(path, std::ios::binary | std::ios::trunc);
            if (!file_) throw nk::EnvironmentError("cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
    void finish() {
        stream().flush();
        if (file_.is_open() && !file_) {
            throw nk::EnvironmentError("write failed for " + path_);
        }
    }

  private:
    std::string path_;
    std::ofstream file_;
};

std::vector<std::uint8_t> read_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw nk::EnvironmentError("cannot open " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void write_binary(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw nk::EnvironmentError("cannot open " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw nk::EnvironmentError("write failed for " + path);
}

// Truth files are plain text: the characters 0 and 1, whitespace ignored.
nk::BitSequence read_truth(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw nk::EnvironmentError("cannot open truth file " + path);
    nk::BitSequence bits;
    char c;
    while (f.get(c)) {
        if (c == '0' || c == '1') {
            bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (c != ' ' && c != '\n' && c != '\r' && c != '\t') {
            throw nk::UsageError(std::string("truth file: unexpected character '") + c +
                                 "' (want 0/1 text)");
        }
    }
    return bits;
}

nk::NoiseModel make_model(const std::string& name, double mean_photons, int q) {
    if (name == "gaussian") return nk::NoiseModel::gaussian_for(mean_photons);
    if (name == "exact") return nk::NoiseModel::pegg_barnett(mean_photons, q);
    throw nk::UsageError("unknown noise model '" + name + "' (want gaussian or exact)");
}

std::uint16_t bits_for_m(std::uint16_t m) {
    std::uint16_t b = 0;
    for (std::uint32_t v = m; v > 1; v >>= 1) ++b;
    return b;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateConfig {
    std::string encoding = "sector";
    double n = 25.0;
    double dphi = 0.01;
    std::uint16_t m = 4;
    std::size_t key_bits = 4096;
    std::size_t cycles = 4;
    std::uint64_t seed = 1;
    int q = -1;
    double amplify = 0.0;  // 0 = no distillation
    std::string out_path;
    std::string capture_path;
    std::string truth_path;
    std::string store_path;
    bool force = false;
};

int run_simulate(const SimulateConfig& c) {
    nk::ProtocolParams params;
    if (c.encoding == "sector") {
        params = nk::ProtocolParams::sector(c.n, c.dphi, c.key_bits, c.q);
        double ratio = params.noise_sigma() / params.delta_phi1;
        if (ratio < 3.0) {
            std::cerr << "warning: sigma_phi/delta_phi1 = " << fmt(ratio)
                      << " is a thin hiding margin (want >= 3); positions leak\n";
            if (!c.force) {
                std::cerr << "refusing to run; pass --force to proceed anyway\n";
                return 1;
            }
        }
    } else if (c.encoding == "wheel") {
        params = nk::ProtocolParams::wheel(c.m, c.n, c.key_bits, c.q);
    } else {
        throw nk::UsageError("unknown encoding '" + c.encoding + "' (want sector or wheel)");
    }

    std::uint64_t seed = resolve_seed(c.seed);
    auto key_src = nk::EntropySource::seeded(seed);
    auto init_src = nk::EntropySource::seeded(seed + 1);
    auto resp_src = nk::EntropySource::seeded(seed + 2);
    nk::BitSequence k0 = key_src.bits(params.key_bits);

    nk::SessionState initiator = nk::make_session(nk::Role::Initiator, params, k0);
    nk::SessionState responder = nk::make_session(nk::Role::Responder, params, k0);
    auto model = nk::NoiseModel::gaussian_for(params.mean_photons);
    nk::RunResult run =
        nk::run_cycles(initiator, responder, init_src, resp_src, c.cycles, model);

    // Cumulative wire bytes the tap had captured after each frame.
    std::vector<std::size_t> tap_bytes_after;
    std::size_t acc = 0;
    for (const auto& entry : run.tap->entries()) {
        acc += entry.bytes.size();
        tap_bytes_after.push_back(acc);
    }

    Output out(c.out_path);
    std::string echo = std::string(",") + c.encoding + ',' + std::to_string(params.m) +
                       ',' + fmt(params.mean_photons) + ',' + fmt(params.delta_phi1) +
                       ',' + std::to_string(params.key_bits) + ',' +
                       std::to_string(c.cycles) + ',' + std::to_string(seed) + ',' +
                       std::to_string(params.q) + ',' + kToolVersion;
    out.stream() << "cycle,direction,bits,bit_errors,ber,attacker_tap_frames,"
                    "attacker_tap_bytes,encoding,m,n,dphi,L,cycles,seed,q,tool_version\n";
    for (const auto& s : run.stats) {
        const char* direction = s.sender == nk::Role::Initiator
                                    ? "initiator->responder"
                                    : "responder->initiator";
        std::size_t bytes = s.tap_frames > 0 ? tap_bytes_after[s.tap_frames - 1] : 0;
        out.stream() << s.cycle << ',' << direction << ',' << s.bits << ','
                     << s.bit_errors << ',' << fmt(s.ber) << ',' << s.tap_frames << ','
                     << bytes << echo << '\n';
    }
    out.finish();

    if (!c.capture_path.empty()) {
        nk::write_frames(c.capture_path, run.tap->frames());
    }
    if (!c.truth_path.empty()) {
        // The sent R sequence per half cycle, i.e. what the wiretap's owner
        // would love to know. One line per frame, matching --capture order.
        std::ofstream truth(c.truth_path, std::ios::trunc);
        if (!truth) throw nk::EnvironmentError("cannot open " + c.truth_path);
        for (std::size_t i = 0; i < run.stats.size(); ++i) {
            const nk::KeyBatch& batch = run.stats[i].sender == nk::Role::Initiator
                                            ? run.initiator_batches[i]
                                            : run.responder_batches[i];
            for (std::uint8_t b : batch.bits) truth << static_cast<char>('0' + b);
            truth << '\n';
        }
        if (!truth) throw nk::EnvironmentError("write failed for " + c.truth_path);
    }
    if (!c.store_path.empty()) {
        nk::BitSequence pool;
        for (const auto& batch : run.initiator_batches) {
            if (c.amplify > 0.0) {
                nk::KeyBatch distilled = nk::privacy_amplify(batch, c.amplify);
                pool.insert(pool.end(), distilled.bits.begin(), distilled.bits.end());
            } else {
                pool.insert(pool.end(), batch.bits.begin(), batch.bits.end());
            }
        }
        nk::KeyStore::create(std::move(pool)).save(c.store_path);
    }
    return 0;
}

// ---------------------------------------------------------------------------
// entropy-scan

struct EntropyScanConfig {
    double alpha_min = 0.0;
    double alpha_max = 3.0;
    std::size_t points = 60;
    double dphi = 1e-3;
    bool numeric = false;
    std::string out_path;
};

int run_entropy_scan(const EntropyScanConfig& c) {
    if (c.points == 0) throw nk::UsageError("entropy-scan: need at least one point");
    if (c.alpha_max < c.alpha_min) {
        throw nk::UsageError("entropy-scan: alpha range is inverted");
    }

    Output out(c.out_path);
    std::string echo = std::string(",") + fmt(c.alpha_min) + ',' + fmt(c.alpha_max) +
                       ',' + std::to_string(c.points) + ',' + fmt(c.dphi) + ',' +
                       kToolVersion;
    out.stream() << "alpha,mean_photons,entropy_bits";
    if (c.numeric) out.stream() << ",entropy_numeric_bits";
    out.stream() << ",alpha_min,alpha_max,points,dphi,tool_version\n";

    for (std::size_t i = 0; i < c.points; ++i) {
        double alpha =
            c.points == 1
                ? c.alpha_min
                : c.alpha_min + (c.alpha_max - c.alpha_min) * static_cast<double>(i) /
                                    static_cast<double>(c.points - 1);
        // alpha == 0 is a rank-1 mixture (all four states coincide): zero
        // entropy by inspection, where the closed form would divide by zero.
        double h = alpha == 0.0
                       ? 0.0
                       : nk::von_neumann_entropy(nk::eigensystem_analytic(alpha, c.dphi));
        out.stream() << fmt(alpha) << ',' << fmt(alpha * alpha) << ',' << fmt(h);
        if (c.numeric) {
            auto spectrum = nk::gram_sandwich_spectrum(alpha, c.dphi);
            out.stream() << ','
                         << fmt(nk::von_neumann_entropy(
                                std::span<const double>(spectrum.data(), 4)));
        }
        out.stream() << echo << '\n';
    }
    out.finish();
    return 0;
}

// ---------------------------------------------------------------------------
// phase-dist

struct PhaseDistConfig {
    double n = 25.0;
    double dphi = 0.01;
    int q = -1;
    std::string out_path;
};

int run_phase_dist(const PhaseDistConfig& c) {
    if (c.n < 0.0) throw nk::UsageError("phase-dist: mean photon number must be >= 0");
    if (c.dphi < 0.0) throw nk::UsageError("phase-dist: dphi must be >= 0");
    int q = c.q >= 1 ? c.q : nk::recommended_q(c.n);
    nk::PhaseDistribution dist =
        nk::four_state_distribution(std::sqrt(c.n), c.dphi, q);

    Output out(c.out_path);
    std::string echo = std::string(",") + fmt(c.n) + ',' + fmt(c.dphi) + ',' +
                       std::to_string(q) + ',' + kToolVersion;
    out.stream() << "phi,p,p0,p1,p2,p3,n,dphi,q,tool_version\n";
    for (std::size_t i = 0; i < dist.grid.size(); ++i) {
        out.stream() << fmt(dist.grid[i]) << ',' << fmt(dist.total[i]);
        for (std::size_t j = 0; j < 4; ++j) {
            out.stream() << ',' << fmt(dist.components[j][i]);
        }
        out.stream() << echo << '\n';
    }
    out.finish();
    return 0;
}

// ---------------------------------------------------------------------------
// snr-scan

struct SnrScanConfig {
    std::vector<double> ns = {25.0, 400.0};
    double dphi_min = 1e-3;
    double dphi_max = 1.0;
    std::size_t points = 13;
    int q = -1;
    std::string out_path;
};

int run_snr_scan(const SnrScanConfig& c) {
    if (c.points < 2) throw nk::UsageError("snr-scan: need at least two points");
    if (!(c.dphi_min > 0.0) || !(c.dphi_max > c.dphi_min)) {
        throw nk::UsageError("snr-scan: need 0 < dphi-min < dphi-max");
    }
    if (c.ns.empty()) throw nk::UsageError("snr-scan: need at least one photon number");

    Output out(c.out_path);
    std::string echo = std::string(",") + fmt(c.dphi_min) + ',' + fmt(c.dphi_max) + ',' +
                       std::to_string(c.points) + ',' + kToolVersion;
    out.stream() << "delta_phi1,snr,mean_photons,q,flag,dphi_min,dphi_max,points,"
                    "tool_version\n";

    double log_lo = std::log(c.dphi_min);
    double log_hi = std::log(c.dphi_max);
    std::vector<std::string> crossings;
    for (double n : c.ns) {
        if (!(n > 0.0)) throw nk::UsageError("snr-scan: mean photon number must be > 0");
        double alpha = std::sqrt(n);
        int q = c.q >= 1 ? c.q : nk::recommended_q(n);
        auto snr_at = [&](double d) { return nk::snr_phase(alpha, d, q); };
        for (std::size_t i = 0; i < c.points; ++i) {
            double d = std::exp(log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                                             static_cast<double>(c.points - 1));
            std::string snr, flag = "ok";
            try {
                snr = fmt(snr_at(d));
            } catch (const nk::SingularityError&) {
                flag = "degenerate";
            }
            out.stream() << fmt(d) << ',' << snr << ',' << fmt(n) << ',' << q << ','
                         << flag << echo << '\n';
        }
        // SNR = 1 crossing by bisection, reported when the sweep brackets it.
        double lo = c.dphi_min, hi = c.dphi_max;
        double flo = snr_at(lo) - 1.0, fhi = snr_at(hi) - 1.0;
        if (flo < 0.0 && fhi > 0.0) {
            for (int iter = 0; iter < 80; ++iter) {
                double mid = 0.5 * (lo + hi);
                if (snr_at(mid) - 1.0 < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            crossings.push_back("# snr_crossing n=" + fmt(n) +
                                " delta_phi1=" + fmt(0.5 * (lo + hi)));
        }
    }
    out.finish();
    for (const auto& line : crossings) std::cout << line << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// attack

struct AttackConfig {
    std::string encoding = "sector";
    std::uint16_t m = 4;
    double n = 25.0;
    double dphi = 0.01;
    std::size_t bits = 100000;
    std::uint64_t seed = 1;
    int q = -1;
    std::string model = "gaussian";
    std::string guesser_model;  // empty: same as model
    std::string frames_path;
    std::string truth_path;
    std::string out_path;
    std::vector<std::size_t> k0s = {8, 256, 38};
    std::vector<std::uint32_t> nsigmas = {2, 4, 1};
};

int run_attack(const AttackConfig& c) {
    if (c.k0s.size() != c.nsigmas.size()) {
        throw nk::UsageError("attack: --k0 and --nsigma lists must pair up");
    }

    nk::ProtocolParams params;
    if (c.encoding == "sector") {
        params.encoding = nk::Encoding::SectorM2;
        params.m = 2;
    } else if (c.encoding == "wheel") {
        params.encoding = nk::Encoding::UniformWheel;
        params.m = c.m;
    } else {
        throw nk::UsageError("unknown encoding '" + c.encoding + "'");
    }
    params.bits_per_basis = bits_for_m(params.m);
    params.delta_phi1 = c.encoding == "wheel" ? nk::kPi / params.m : c.dphi;
    params.mean_photons = c.n;
    params.key_bits = std::max<std::size_t>(c.bits, 1) * params.bits_per_basis;
    params.q = c.q >= 1 ? c.q : nk::recommended_q(c.n);

    std::vector<nk::SignalFrame> frames;
    nk::BitSequence truth;
    bool live = c.frames_path.empty();
    if (!live) {
        if (c.truth_path.empty()) {
            throw nk::UsageError("attack: --truth is required with --frames");
        }
        frames = nk::read_frames(c.frames_path);
        truth = read_truth(c.truth_path);
        if (!frames.empty()) {
            // Frames are self-describing; --n still chooses the noise model.
            params.encoding = frames[0].encoding;
            params.m = frames[0].m;
            params.bits_per_basis = bits_for_m(params.m);
            params.delta_phi1 = frames[0].delta_phi1;
            params.key_bits = std::max<std::size_t>(truth.size(), 1);
        }
    }
    // Geometry check only: demonstrating an insecure configuration is this
    // subcommand's whole point, so the session-level margin rules stay out.
    params.validate_geometry();

    auto gen_model = make_model(c.model, params.mean_photons, params.q);
    std::string guesser_name = c.guesser_model.empty() ? c.model : c.guesser_model;
    auto guesser_model = make_model(guesser_name, params.mean_photons, params.q);

    std::optional<nk::XorDemoResult> xor_result;
    if (live) {
        auto src = nk::EntropySource::seeded(resolve_seed(c.seed) + 3);
        nk::SignalFrame a, b;
        a.encoding = b.encoding = params.encoding;
        a.m = b.m = params.m;
        a.delta_phi1 = b.delta_phi1 = params.delta_phi1;
        std::uint32_t n_bases = params.encoding == nk::Encoding::SectorM2 ? 2 : params.m;
        for (std::size_t i = 0; i < c.bits; ++i) {
            std::uint8_t bit = src.bit();
            std::uint32_t basis = 0;
            for (std::uint32_t k = 1; k < n_bases; k <<= 1) {
                basis = (basis << 1) | src.bit();
            }
            truth.push_back(bit);
            // Two independent emissions of the same plaintext: one frame for
            // the guesser, a repeat for the correlation demo.
            a.positions.push_back(nk::emit_signal(bit, basis, params, gen_model, src).index);
            b.positions.push_back(nk::emit_signal(bit, basis, params, gen_model, src).index);
        }
        frames = {a, b};
        if (c.bits > 0) {
            xor_result = nk::xor_correlation_demo({frames.data(), 2});
        }
    }

    std::span<const nk::SignalFrame> guess_span =
        live && !frames.empty() ? std::span<const nk::SignalFrame>(frames.data(), 1)
                                : std::span<const nk::SignalFrame>(frames);
    nk::AttackResult result = nk::run_guessing_attack(guess_span, truth, params, guesser_model);

    Output out(c.out_path);
    std::string source = live ? "live" : csv_quote(c.frames_path);
    std::string echo = std::string(",") + c.encoding + ',' + std::to_string(params.m) +
                       ',' + fmt(params.mean_photons) + ',' + fmt(params.delta_phi1) +
                       ',' + std::to_string(c.bits) + ',' + std::to_string(c.seed) + ',' +
                       std::to_string(params.q) + ',' + c.model + ',' + guesser_name +
                       ',' + source + ',' + kToolVersion;
    out.stream() << "kind,name,value,encoding,m,n,dphi,bits,seed,q,model,guesser_model,"
                    "source,tool_version\n";
    auto row = [&](const std::string& kind, const std::string& name,
                   const std::string& value) {
        out.stream() << kind << ',' << name << ',' << value << echo << '\n';
    };

    row("guessing", "trials", std::to_string(result.trials));
    row("guessing", "successes", std::to_string(result.successes));
    row("guessing", "defined", result.defined ? "1" : "0");
    if (result.defined) {
        row("guessing", "success_rate", fmt(result.success_rate));
        row("guessing", "wilson_lo", fmt(result.wilson_lo));
        row("guessing", "wilson_hi", fmt(result.wilson_hi));
    }
    row("guessing", "expected_success_rate",
        fmt(nk::BayesGuesser(params, guesser_model).expected_success_rate()));

    if (xor_result) {
        row("xor", "xor_bits", std::to_string(xor_result->xor_bits));
        row("xor", "ones", std::to_string(xor_result->ones));
        row("xor", "p_one", fmt(xor_result->p_one));
        row("xor", "entropy_bits", fmt(xor_result->entropy_bits));
    }

    row("complexity", "estimated_n_sigma", std::to_string(nk::estimate_n_sigma(params)));
    for (std::size_t i = 0; i < c.k0s.size(); ++i) {
        nk::ComplexityEstimate est = nk::brute_force_complexity(c.k0s[i], c.nsigmas[i]);
        std::string tag = "(k0=" + std::to_string(est.k0_bits) +
                          ";nsigma=" + std::to_string(est.n_sigma) + ")";
        row("complexity", "log2_C" + tag, fmt(est.log2_combinations));
        if (!est.n_sigma_power_of_two) {
            row("complexity", "nsigma_rounded_up" + tag,
                std::to_string(est.log2_n_sigma_used));
        }
    }
    out.finish();
    return 0;
}

// ---------------------------------------------------------------------------
// otp

struct OtpConfig {
    std::string store_path;
    std::string in_path;
    std::string out_path;
    std::size_t bits = 4096;
    std::uint64_t seed = 1;
};

int run_otp_init(const OtpConfig& c) {
    if (c.bits == 0) throw nk::UsageError("otp init: need a positive bit count");
    auto src = nk::EntropySource::seeded(resolve_seed(c.seed));
    nk::KeyStore::create(src.bits(c.bits)).save(c.store_path);
    return 0;
}

int run_otp_encrypt(const OtpConfig& c) {
    nk::KeyStore store = nk::KeyStore::load(c.store_path);
    std::vector<std::uint8_t> plaintext = read_binary(c.in_path);
    nk::OtpMessage msg = nk::otp_encrypt(store, plaintext);
    // Persist the watermark before the ciphertext leaves the machine; a key
    // region must never be handed out twice.
    store.save(c.store_path);
    nk::write_otp(c.out_path, msg);
    std::cerr << "spent " << plaintext.size() * 8 << " key bits at offset "
              << msg.key_offset_bits << "; " << store.available_bits() << " remain\n";
    return 0;
}

int run_otp_decrypt(const OtpConfig& c) {
    nk::KeyStore store = nk::KeyStore::load(c.store_path);
    nk::OtpMessage msg = nk::read_otp(c.in_path);
    write_binary(c.out_path, nk::otp_decrypt(store, msg));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noise-keyed key distribution: simulator and analysis toolkit"};
    app.set_version_flag("--version", std::string("noisekey ") + kToolVersion);
    app.require_subcommand(1);
    int status = 0;

    SimulateConfig sim;
    auto* simulate = app.add_subcommand("simulate", "run protocol cycles over loopback");
    simulate->add_option("--encoding", sim.encoding, "sector or wheel");
    simulate->add_option("--n", sim.n, "mean photon number per signal");
    simulate->add_option("--dphi", sim.dphi, "sector separation angle (radians)");
    simulate->add_option("--M", sim.m, "wheel basis count (power of two)");
    simulate->add_option("--L", sim.key_bits, "bits per half cycle");
    simulate->add_option("--cycles", sim.cycles, "full cycles to run");
    simulate->add_option("--seed", sim.seed, "master seed (see also NOISEKEY_SEED)");
    simulate->add_option("--q", sim.q, "phase-grid truncation; -1 = auto");
    simulate->add_option("--amplify", sim.amplify,
                         "privacy-amplification ratio in (0,1) for --store");
    simulate->add_option("--out", sim.out_path, "stats CSV path (default stdout)");
    simulate->add_option("--capture", sim.capture_path, "write tapped frames (.nkdf)");
    simulate->add_option("--truth-out", sim.truth_path, "write sent bits as 0/1 text");
    simulate->add_option("--store", sim.store_path, "write shared bits as keystore (.nkks)");
    simulate->add_flag("--force", sim.force, "proceed despite a thin hiding margin");
    simulate->callback([&] { status = run_simulate(sim); });

    EntropyScanConfig ent;
    auto* entropy = app.add_subcommand("entropy-scan", "mixture entropy vs alpha");
    entropy->add_option("--alpha-min", ent.alpha_min, "grid start");
    entropy->add_option("--alpha-max", ent.alpha_max, "grid end");
    entropy->add_option("--points", ent.points, "grid size");
    entropy->add_option("--dphi", ent.dphi, "separation angle for the numeric oracle");
    entropy->add_flag("--numeric", ent.numeric, "add the numeric-diagonalization column");
    entropy->add_option("--out", ent.out_path, "CSV path (default stdout)");
    entropy->callback([&] { status = run_entropy_scan(ent); });

    PhaseDistConfig pd;
    auto* phase = app.add_subcommand("phase-dist", "constellation phase distribution");
    phase->add_option("--n", pd.n, "mean photon number");
    phase->add_option("--dphi", pd.dphi, "sector separation angle");
    phase->add_option("--q", pd.q, "phase-grid truncation; -1 = auto");
    phase->add_option("--out", pd.out_path, "CSV path (default stdout)");
    phase->callback([&] { status = run_phase_dist(pd); });

    SnrScanConfig snr;
    auto* snrs = app.add_subcommand("snr-scan", "attacker SNR vs separation angle");
    snrs->add_option("--n", snr.ns, "mean photon numbers (repeatable)");
    snrs->add_option("--dphi-min", snr.dphi_min, "sweep start");
    snrs->add_option("--dphi-max", snr.dphi_max, "sweep end");
    snrs->add_option("--points", snr.points, "log-spaced grid size");
    snrs->add_option("--q", snr.q, "phase-grid truncation; -1 = auto");
    snrs->add_option("--out", snr.out_path, "CSV path (default stdout)");
    snrs->callback([&] { status = run_snr_scan(snr); });

    AttackConfig atk;
    auto* attack = app.add_subcommand("attack", "run adversary models and complexity table");
    attack->add_option("--encoding", atk.encoding, "sector or wheel (live mode)");
    attack->add_option("--M", atk.m, "wheel basis count (live mode)");
    attack->add_option("--n", atk.n, "mean photon number for the noise model");
    attack->add_option("--dphi", atk.dphi, "sector separation angle (live mode)");
    attack->add_option("--bits", atk.bits, "emissions to simulate (live mode)");
    attack->add_option("--seed", atk.seed, "master seed (see also NOISEKEY_SEED)");
    attack->add_option("--q", atk.q, "phase-grid truncation; -1 = auto");
    attack->add_option("--model", atk.model, "generation noise: gaussian or exact");
    attack->add_option("--guesser-model", atk.guesser_model,
                       "mismatched attacker model (default: same as --model)");
    attack->add_option("--frames", atk.frames_path, "captured .nkdf instead of live run");
    attack->add_option("--truth", atk.truth_path, "0/1 text of the sent bits");
    attack->add_option("--k0", atk.k0s, "K0 lengths for the complexity table");
    attack->add_option("--nsigma", atk.nsigmas, "noise coverage paired with --k0");
    attack->add_option("--out", atk.out_path, "CSV path (default stdout)");
    attack->callback([&] { status = run_attack(atk); });

    OtpConfig otp;
    auto* otp_cmd = app.add_subcommand("otp", "one-time-pad demo over a keystore");
    otp_cmd->require_subcommand(1);
    auto* otp_init = otp_cmd->add_subcommand("init", "create a keystore from seeded bits");
    otp_init->add_option("--store", otp.store_path, "keystore path (.nkks)")->required();
    otp_init->add_option("--bits", otp.bits, "key bits to generate");
    otp_init->add_option("--seed", otp.seed, "generator seed");
    otp_init->callback([&] { status = run_otp_init(otp); });
    auto* otp_enc = otp_cmd->add_subcommand("encrypt", "encrypt a file, spending key bits");
    otp_enc->add_option("--store", otp.store_path, "keystore path (.nkks)")->required();
    otp_enc->add_option("--in", otp.in_path, "plaintext file")->required();
    otp_enc->add_option("--out", otp.out_path, "message file (.nkot)")->required();
    otp_enc->callback([&] { status = run_otp_encrypt(otp); });
    auto* otp_dec = otp_cmd->add_subcommand("decrypt", "decrypt a message file");
    otp_dec->add_option("--store", otp.store_path, "keystore path (.nkks)")->required();
    otp_dec->add_option("--in", otp.in_path, "message file (.nkot)")->required();
    otp_dec->add_option("--out", otp.out_path, "plaintext destination")->required();
    otp_dec->callback([&] { status = run_otp_decrypt(otp); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const nk::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const nk::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return status;
}
