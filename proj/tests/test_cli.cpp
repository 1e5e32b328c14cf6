#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "noisekey/keystore.hpp"

namespace fs = std::filesystem;

namespace {

// Path of the built tool, injected by the build system.
const std::string kTool = NOISEKEY_TOOL_PATH;

struct ToolRun {
    int status = -1;
    std::string out;
    std::string err;
};

const fs::path& scratch_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "noisekey_cli_scratch";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string scratch(const std::string& name) {
    return (scratch_dir() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    REQUIRE(f.good());
}

// Runs the tool through the shell, capturing stdout/stderr to files.
// NOISEKEY_SEED is scrubbed from the inherited environment so a polluted
// shell cannot skew the determinism checks; tests that want the override
// pass their own assignment through `env`.
ToolRun run_tool(const std::string& args, const std::string& env = "") {
    static int counter = 0;
    std::string out_file = scratch("run" + std::to_string(counter) + ".out");
    std::string err_file = scratch("run" + std::to_string(counter) + ".err");
    ++counter;
    std::string cmd = "env -u NOISEKEY_SEED " + (env.empty() ? "" : env + " ") + "\"" +
                      kTool + "\" " + args + " > \"" + out_file + "\" 2> \"" +
                      err_file + "\"";
    int rc = std::system(cmd.c_str());
    ToolRun r;
    r.status = (rc >= 0 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : text) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    parts.push_back(cur);
    return parts;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        FAIL("no column named " + name);
        return 0;
    }

    const std::string& at(std::size_t row, const std::string& name) const {
        return rows.at(row).at(col(name));
    }

    double num(std::size_t row, const std::string& name) const {
        return std::stod(at(row, name));
    }
};

// Comment lines (the snr-scan crossing markers) and blank lines are skipped;
// none of the tool's fields contain embedded commas.
Csv parse_csv(const std::string& text) {
    Csv csv;
    for (const std::string& line : split(text, '\n')) {
        if (line.empty() || line[0] == '#') continue;
        if (csv.header.empty()) {
            csv.header = split(line, ',');
        } else {
            auto row = split(line, ',');
            REQUIRE(row.size() == csv.header.size());
            csv.rows.push_back(std::move(row));
        }
    }
    return csv;
}

// The attack report is a kind,name,value table.
std::string report_value(const Csv& csv, const std::string& kind,
                         const std::string& name) {
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        if (csv.at(i, "kind") == kind && csv.at(i, "name") == name) {
            return csv.at(i, "value");
        }
    }
    FAIL("no report row " + kind + "/" + name);
    return {};
}

}  // namespace

TEST_CASE("simulate emits deterministic per-cycle stats") {
    std::string args =
        "simulate --encoding sector --n 25 --dphi 0.01 --L 4096 --cycles 4 --seed 7";
    ToolRun first = run_tool(args + " --capture " + scratch("det_a.nkdf"));
    REQUIRE(first.status == 0);
    CHECK(first.err.empty());

    Csv csv = parse_csv(first.out);
    REQUIRE(csv.rows.size() == 8);
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        CHECK(csv.num(i, "ber") < 1e-5);
        CHECK(csv.at(i, "bits") == "4096");
        CHECK(csv.at(i, "cycle") == std::to_string(i / 2));
        CHECK(csv.at(i, "direction") == (i % 2 == 0 ? "initiator->responder"
                                                    : "responder->initiator"));
        CHECK(csv.at(i, "tool_version") == "0.1.0");
    }
    // The attacker's transcript grows by one frame per half cycle.
    CHECK(csv.at(7, "attacker_tap_frames") == "8");

    SECTION("same command, same bytes") {
        ToolRun again = run_tool(args + " --capture " + scratch("det_b.nkdf"));
        REQUIRE(again.status == 0);
        CHECK(again.out == first.out);
        CHECK(slurp(scratch("det_b.nkdf")) == slurp(scratch("det_a.nkdf")));
    }

    SECTION("NOISEKEY_SEED overrides the flag") {
        ToolRun env_run = run_tool(args + " --capture " + scratch("det_env.nkdf"),
                                   "NOISEKEY_SEED=99");
        std::string flag_args =
            "simulate --encoding sector --n 25 --dphi 0.01 --L 4096 --cycles 4 "
            "--seed 99 --capture " +
            scratch("det_flag.nkdf");
        ToolRun flag_run = run_tool(flag_args);
        REQUIRE(env_run.status == 0);
        REQUIRE(flag_run.status == 0);
        CHECK(slurp(scratch("det_env.nkdf")) == slurp(scratch("det_flag.nkdf")));
        CHECK(slurp(scratch("det_env.nkdf")) != slurp(scratch("det_a.nkdf")));
    }
}

TEST_CASE("simulate enforces the hiding margin") {
    SECTION("thin margin is refused without --force") {
        ToolRun r = run_tool(
            "simulate --encoding sector --n 4 --dphi 0.5 --L 256 --cycles 1 --seed 3");
        CHECK(r.status == 1);
        CHECK(r.out.empty());
        CHECK(r.err.find("thin hiding margin") != std::string::npos);
        CHECK(r.err.find("--force") != std::string::npos);
    }

    SECTION("--force proceeds, warning intact") {
        ToolRun r = run_tool(
            "simulate --encoding sector --n 4 --dphi 0.5 --L 256 --cycles 1 --seed 3 "
            "--force");
        REQUIRE(r.status == 0);
        CHECK(r.err.find("thin hiding margin") != std::string::npos);
        CHECK(parse_csv(r.out).rows.size() == 2);
    }

    SECTION("a hard parameter violation is fatal even with --force") {
        // sigma_phi(25) < 0.5, so the positions would be cleanly resolvable.
        ToolRun r = run_tool(
            "simulate --encoding sector --n 25 --dphi 0.5 --L 256 --cycles 1 --force");
        CHECK(r.status != 0);
        CHECK(r.err.find("delta_phi1") != std::string::npos);
    }

    SECTION("wheel encoding carries no sector margin rule") {
        ToolRun r = run_tool(
            "simulate --encoding wheel --M 4 --n 25 --L 256 --cycles 1 --seed 3");
        CHECK(r.status == 0);
        CHECK(parse_csv(r.out).rows.size() == 2);
    }
}

TEST_CASE("simulate writes captures, truth files, and key stores") {
    std::string cap = scratch("session.nkdf");
    std::string truth = scratch("session_truth.txt");
    std::string store = scratch("session.nkks");
    ToolRun r = run_tool(
        "simulate --encoding sector --n 25 --dphi 0.01 --L 512 --cycles 2 --seed 3 "
        "--capture " +
        cap + " --truth-out " + truth + " --store " + store);
    REQUIRE(r.status == 0);

    CHECK(slurp(cap).substr(0, 4) == "NKDF");

    std::vector<std::string> truth_lines = split(slurp(truth), '\n');
    REQUIRE(truth_lines.size() == 5);  // four frames plus trailing newline
    CHECK(truth_lines.back().empty());
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(truth_lines[i].size() == 512);
        CHECK(truth_lines[i].find_first_not_of("01") == std::string::npos);
    }

    // The store must load through the library and hold one undistilled batch
    // per half cycle: both directions contribute shared key material.
    noisekey::KeyStore ks = noisekey::KeyStore::load(store);
    CHECK(ks.bit_count() == 2048);
    CHECK(ks.spent_bits() == 0);

    SECTION("--amplify distills each batch before pooling") {
        std::string small = scratch("session_amp.nkks");
        ToolRun amp = run_tool(
            "simulate --encoding sector --n 25 --dphi 0.01 --L 512 --cycles 2 "
            "--seed 3 --amplify 0.25 --store " +
            small);
        REQUIRE(amp.status == 0);
        CHECK(noisekey::KeyStore::load(small).bit_count() == 512);
    }
}

TEST_CASE("entropy scan reproduces the quantum-to-classical transition") {
    ToolRun r = run_tool(
        "entropy-scan --alpha-min 0 --alpha-max 3 --points 60 --numeric --dphi 0.001");
    REQUIRE(r.status == 0);
    Csv csv = parse_csv(r.out);
    REQUIRE(csv.rows.size() == 60);

    CHECK(csv.at(0, "alpha") == "0");
    CHECK(csv.at(0, "entropy_bits") == "0");
    CHECK(csv.num(59, "alpha") == Catch::Approx(3.0));
    CHECK(csv.num(59, "entropy_bits") >= 0.999);

    double prev = -1.0;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        double h = csv.num(i, "entropy_bits");
        CHECK(h >= prev - 1e-12);
        prev = h;
        // The numeric cross-check column must track the closed form.
        CHECK(std::abs(h - csv.num(i, "entropy_numeric_bits")) <= 1e-4);
    }
}

TEST_CASE("phase distribution rows are normalized") {
    ToolRun r = run_tool("phase-dist --n 25 --dphi 0.01");
    REQUIRE(r.status == 0);
    Csv csv = parse_csv(r.out);
    REQUIRE(csv.rows.size() == 301);  // default q = 300 gives a q+1 point grid
    CHECK(csv.at(0, "q") == "300");

    double total = 0.0;
    for (std::size_t i = 0; i < csv.rows.size(); ++i) {
        total += csv.num(i, "p");
    }
    CHECK(std::abs(total - 1.0) <= 1e-9);

    // The component columns carry their 1/4 ensemble weight, so they add up
    // to the mixture column directly.
    for (std::size_t i : {std::size_t{0}, std::size_t{150}, std::size_t{300}}) {
        double mix = csv.num(i, "p0") + csv.num(i, "p1") + csv.num(i, "p2") +
                     csv.num(i, "p3");
        CHECK(csv.num(i, "p") == Catch::Approx(mix).margin(1e-12));
    }

    SECTION("vacuum input gives the flat distribution") {
        ToolRun flat = run_tool("phase-dist --n 0 --dphi 0.01 --q 300");
        REQUIRE(flat.status == 0);
        Csv fcsv = parse_csv(flat.out);
        REQUIRE(fcsv.rows.size() == 301);
        for (std::size_t i = 0; i < fcsv.rows.size(); ++i) {
            CHECK(fcsv.num(i, "p") == Catch::Approx(1.0 / 301.0).margin(1e-12));
        }
    }
}

TEST_CASE("snr scan orders curves and reports crossings") {
    ToolRun r = run_tool("snr-scan");
    REQUIRE(r.status == 0);
    Csv csv = parse_csv(r.out);
    REQUIRE(csv.rows.size() == 26);  // two default photon numbers, 13 points each

    auto curve = [&](const std::string& n) {
        std::vector<double> snr;
        for (std::size_t i = 0; i < csv.rows.size(); ++i) {
            if (csv.at(i, "mean_photons") == n) {
                CHECK(csv.at(i, "flag") == "ok");
                snr.push_back(csv.num(i, "snr"));
            }
        }
        return snr;
    };
    std::vector<double> low = curve("25");
    std::vector<double> high = curve("400");
    REQUIRE(low.size() == 13);
    REQUIRE(high.size() == 13);

    for (std::size_t i = 0; i < 13; ++i) {
        CHECK(high[i] >= low[i]);                      // brighter light leaks more
        if (i > 0) CHECK(low[i] >= low[i - 1]);        // monotone in delta_phi1
        if (i > 0) CHECK(high[i] >= high[i - 1]);
    }
    // Each curve starts in the unusable SNR <= 1 region and leaves it.
    CHECK(low.front() < 1.0);
    CHECK(high.front() < 1.0);
    CHECK(low.back() > 1.0);
    CHECK(high.back() > 1.0);

    // Bisection markers land on the frozen crossing values, and the crossing
    // moves toward smaller separations as the light gets brighter.
    CHECK(r.out.find("# snr_crossing n=25 delta_phi1=0.101053331087") !=
          std::string::npos);
    CHECK(r.out.find("# snr_crossing n=400 delta_phi1=0.0250156724661") !=
          std::string::npos);
    CHECK(0.0250156724661 < 0.101053331087);
}

TEST_CASE("attack reports guessing, xor, and complexity results") {
    SECTION("secure operating point stays near a coin flip") {
        ToolRun r = run_tool("attack --n 25 --dphi 0.01 --bits 20000 --seed 5");
        REQUIRE(r.status == 0);
        Csv csv = parse_csv(r.out);

        CHECK(report_value(csv, "guessing", "trials") == "20000");
        CHECK(report_value(csv, "guessing", "defined") == "1");
        double rate = std::stod(report_value(csv, "guessing", "success_rate"));
        CHECK(rate > 0.48);
        CHECK(rate < 0.535);
        double lo = std::stod(report_value(csv, "guessing", "wilson_lo"));
        double hi = std::stod(report_value(csv, "guessing", "wilson_hi"));
        CHECK(lo < rate);
        CHECK(rate < hi);
        CHECK(report_value(csv, "guessing", "expected_success_rate") ==
              "0.507052002501");

        // Same-bit XOR cancels the signal; at n=25 the residual channel noise
        // essentially never flips a hard decision.
        CHECK(std::stod(report_value(csv, "xor", "entropy_bits")) < 1e-4);

        CHECK(report_value(csv, "complexity", "estimated_n_sigma") == "2");
        CHECK(report_value(csv, "complexity", "log2_C(k0=8;nsigma=2)") == "9");
        CHECK(report_value(csv, "complexity", "log2_C(k0=256;nsigma=4)") == "259");
        CHECK(report_value(csv, "complexity", "log2_C(k0=38;nsigma=1)") == "38");
    }

    SECTION("insecure operating point is read off the wire") {
        ToolRun r = run_tool("attack --n 400 --dphi 1.0 --bits 5000 --seed 5");
        REQUIRE(r.status == 0);
        Csv csv = parse_csv(r.out);
        CHECK(std::stod(report_value(csv, "guessing", "success_rate")) > 0.99);
        CHECK(report_value(csv, "guessing", "expected_success_rate") ==
              "0.999999999999");
    }

    SECTION("noisy xor stream keeps residual entropy") {
        ToolRun r = run_tool("attack --n 4 --dphi 0.01 --bits 50000 --seed 7");
        REQUIRE(r.status == 0);
        Csv csv = parse_csv(r.out);
        double entropy = std::stod(report_value(csv, "xor", "entropy_bits"));
        CHECK(entropy == Catch::Approx(0.29171091).margin(0.013));
    }
}

TEST_CASE("attack replays captured frames against a truth file") {
    std::string cap = scratch("replay.nkdf");
    std::string truth = scratch("replay_truth.txt");
    ToolRun sim = run_tool(
        "simulate --encoding sector --n 25 --dphi 0.01 --L 4096 --cycles 2 --seed 3 "
        "--capture " +
        cap + " --truth-out " + truth);
    REQUIRE(sim.status == 0);

    SECTION("replay matches the live operating point") {
        ToolRun r = run_tool("attack --frames " + cap + " --truth " + truth);
        REQUIRE(r.status == 0);
        Csv csv = parse_csv(r.out);
        CHECK(report_value(csv, "guessing", "trials") == "16384");
        double rate = std::stod(report_value(csv, "guessing", "success_rate"));
        CHECK(rate > 0.49);
        CHECK(rate < 0.525);
    }

    SECTION("frames without truth is a usage error") {
        ToolRun r = run_tool("attack --frames " + cap);
        CHECK(r.status == 2);
        CHECK(r.err.find("usage error") != std::string::npos);
        CHECK(r.err.find("--truth") != std::string::npos);
    }

    SECTION("a truth file of the wrong length is rejected") {
        std::string bad = scratch("replay_bad_truth.txt");
        spit(bad, "0101010101\n");
        ToolRun r = run_tool("attack --frames " + cap + " --truth " + bad);
        CHECK(r.status != 0);
        CHECK(r.out.empty());
    }
}

TEST_CASE("otp subcommands manage the spent watermark") {
    std::string store = scratch("pad.nkks");
    std::string plain = scratch("plain.bin");
    std::string cipher1 = scratch("msg1.nkot");
    std::string cipher2 = scratch("msg2.nkot");
    std::string output = scratch("decrypted.bin");

    std::string message = "attack at dawn\n";
    spit(plain, message);

    ToolRun init = run_tool("otp init --store " + store + " --bits 4096 --seed 11");
    REQUIRE(init.status == 0);
    CHECK(noisekey::KeyStore::load(store).bit_count() == 4096);

    ToolRun enc = run_tool("otp encrypt --store " + store + " --in " + plain +
                           " --out " + cipher1);
    REQUIRE(enc.status == 0);
    CHECK(enc.err.find("spent 120 key bits at offset 0") != std::string::npos);
    CHECK(noisekey::KeyStore::load(store).spent_bits() == 120);

    std::string wire = slurp(cipher1);
    CHECK(wire.substr(0, 4) == "NKOT");
    CHECK(wire.substr(wire.size() - message.size()) != message);

    ToolRun dec = run_tool("otp decrypt --store " + store + " --in " + cipher1 +
                           " --out " + output);
    REQUIRE(dec.status == 0);
    CHECK(slurp(output) == message);
    // Decryption reads the offset from the message header and spends nothing.
    CHECK(noisekey::KeyStore::load(store).spent_bits() == 120);

    SECTION("the next message draws fresh key material") {
        ToolRun enc2 = run_tool("otp encrypt --store " + store + " --in " + plain +
                                " --out " + cipher2);
        REQUIRE(enc2.status == 0);
        CHECK(enc2.err.find("offset 120") != std::string::npos);
        std::string wire2 = slurp(cipher2);
        CHECK(wire2.substr(21) != wire.substr(21));  // same plaintext, new pad

        ToolRun dec2 = run_tool("otp decrypt --store " + store + " --in " + cipher2 +
                                " --out " + output);
        REQUIRE(dec2.status == 0);
        CHECK(slurp(output) == message);
    }

    SECTION("exhaustion refuses and leaves the store untouched") {
        std::string tiny = scratch("tiny.nkks");
        std::string refused = scratch("refused.nkot");
        REQUIRE(run_tool("otp init --store " + tiny + " --bits 64 --seed 11").status ==
                0);
        ToolRun r = run_tool("otp encrypt --store " + tiny + " --in " + plain +
                             " --out " + refused);
        CHECK(r.status != 0);
        CHECK(r.err.find("120") != std::string::npos);
        CHECK(noisekey::KeyStore::load(tiny).spent_bits() == 0);
        CHECK(!fs::exists(refused));
    }
}

TEST_CASE("top-level flag handling") {
    SECTION("--version prints the tool version") {
        ToolRun r = run_tool("--version");
        CHECK(r.status == 0);
        CHECK(r.out.find("0.1.0") != std::string::npos);
    }

    SECTION("an unknown subcommand fails") {
        CHECK(run_tool("frobnicate").status != 0);
    }

    SECTION("mismatched complexity lists are a usage error") {
        ToolRun r = run_tool(
            "attack --bits 128 --k0 8 --nsigma 2 --nsigma 4");
        CHECK(r.status == 2);
        CHECK(r.err.find("usage error") != std::string::npos);
    }
}
