#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "noisekey/channel.hpp"

using namespace noisekey;

namespace {

SignalFrame sample_frame() {
    SignalFrame f;
    f.encoding = Encoding::SectorM2;
    f.m = 2;
    f.delta_phi1 = 0.01;
    f.positions = {2, 1, 3, 0};
    return f;
}

bool frames_equal(const SignalFrame& a, const SignalFrame& b) {
    return a.encoding == b.encoding && a.m == b.m && a.delta_phi1 == b.delta_phi1 &&
           a.positions == b.positions;
}

std::string temp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() / stem).string();
}

}  // namespace

TEST_CASE("serialized frame layout is frozen") {
    const std::vector<std::uint8_t> golden{
        0x4e, 0x4b, 0x44, 0x46, 0x01, 0x01, 0x02, 0x00, 0x7b, 0x14, 0xae, 0x47, 0xe1, 0x7a,
        0x84, 0x3f, 0x04, 0x00, 0x00, 0x00, 0x02, 0x00, 0x01, 0x00, 0x03, 0x00, 0x00, 0x00};
    CHECK(serialize_frame(sample_frame()) == golden);
    CHECK(frames_equal(deserialize_frame(golden), sample_frame()));

    SECTION("header arithmetic") {
        SignalFrame empty = sample_frame();
        empty.positions.clear();
        CHECK(serialize_frame(empty).size() == 20);
        CHECK(serialize_frame(sample_frame()).size() == 28);
    }
}

TEST_CASE("round trip over randomized frames") {
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<int> enc_pick(0, 1);
    std::uniform_int_distribution<int> exp_pick(1, 6);
    std::uniform_int_distribution<std::size_t> len_pick(0, 64);
    std::uniform_real_distribution<double> d_pick(0.0, 3.0);
    for (int trial = 0; trial < 1000; ++trial) {
        SignalFrame f;
        if (enc_pick(rng) == 0) {
            f.encoding = Encoding::UniformWheel;
            f.m = static_cast<std::uint16_t>(1 << exp_pick(rng));
        } else {
            f.encoding = Encoding::SectorM2;
            f.m = 2;
        }
        f.delta_phi1 = d_pick(rng);
        std::uniform_int_distribution<std::uint16_t> pos_pick(
            0, static_cast<std::uint16_t>(position_count(f.encoding, f.m) - 1));
        f.positions.resize(len_pick(rng));
        for (auto& p : f.positions) p = pos_pick(rng);

        auto bytes = serialize_frame(f);
        REQUIRE(frames_equal(deserialize_frame(bytes), f));
        CHECK(serialize_frame(deserialize_frame(bytes)) == bytes);
    }
}

TEST_CASE("deserialize rejects malformed bytes with typed errors") {
    auto bytes = serialize_frame(sample_frame());

    SECTION("bad magic") {
        auto bad = bytes;
        bad[0] = 'X';
        try {
            deserialize_frame(bad);
            FAIL("expected FrameError");
        } catch (const FrameError& e) {
            CHECK(e.kind() == FrameError::Kind::BadMagic);
        }
    }

    SECTION("bad version") {
        auto bad = bytes;
        bad[4] = 9;
        try {
            deserialize_frame(bad);
            FAIL("expected FrameError");
        } catch (const FrameError& e) {
            CHECK(e.kind() == FrameError::Kind::BadVersion);
            CHECK(e.expected() == kFrameVersion);
            CHECK(e.actual() == 9);
        }
    }

    SECTION("bad encoding") {
        auto bad = bytes;
        bad[5] = 7;
        try {
            deserialize_frame(bad);
            FAIL("expected FrameError");
        } catch (const FrameError& e) {
            CHECK(e.kind() == FrameError::Kind::BadEncoding);
        }
    }

    SECTION("bad geometry") {
        auto bad = bytes;
        bad[6] = 12;  // m = 12, not a power of two
        bad[7] = 0;
        try {
            deserialize_frame(bad);
            FAIL("expected FrameError");
        } catch (const FrameError& e) {
            CHECK(e.kind() == FrameError::Kind::BadGeometry);
        }
    }

    SECTION("short header reports expected/actual byte counts") {
        std::vector<std::uint8_t> stub(bytes.begin(), bytes.begin() + 10);
        try {
            deserialize_frame(stub);
            FAIL("expected FrameError");
        } catch (const FrameError& e) {
            CHECK(e.kind() == FrameError::Kind::Truncated);
            CHECK(e.expected() == kFrameHeaderSize);
            CHECK(e.actual() == 10);
        }
    }

    SECTION("short payload reports expected/actual byte counts") {
        std::vector<std::uint8_t> cut(bytes.begin(), bytes.end() - 3);
        try {
            deserialize_frame(cut);
            FAIL("expected FrameError");
        } catch (const FrameError& e) {
            CHECK(e.kind() == FrameError::Kind::Truncated);
            CHECK(e.expected() == 28);
            CHECK(e.actual() == 25);
        }
    }

    SECTION("out-of-range position index") {
        auto bad = bytes;
        bad[20] = 0x04;  // position 4 with only 4 allowed positions (0..3)
        try {
            deserialize_frame(bad);
            FAIL("expected FrameError");
        } catch (const FrameError& e) {
            CHECK(e.kind() == FrameError::Kind::PositionRange);
            CHECK(e.expected() == 4);
            CHECK(e.actual() == 4);
        }
    }

    SECTION("trailing bytes are refused by the whole-buffer overload") {
        auto padded = bytes;
        padded.push_back(0);
        CHECK_THROWS_AS(deserialize_frame(padded), FrameError);
    }

    SECTION("serialize validates too") {
        SignalFrame f = sample_frame();
        f.positions.push_back(9);
        CHECK_THROWS_AS(serialize_frame(f), FrameError);
        f = sample_frame();
        f.m = 3;
        CHECK_THROWS_AS(serialize_frame(f), FrameError);
    }
}

TEST_CASE("frame files hold concatenated frames") {
    std::string path = temp_path("frames_roundtrip.nkdf");
    SignalFrame a = sample_frame();
    SignalFrame b = sample_frame();
    b.positions = {0, 0, 1};
    SignalFrame c;
    c.encoding = Encoding::UniformWheel;
    c.m = 8;
    c.delta_phi1 = kPi / 8.0;
    c.positions = {15, 0, 7};
    std::vector<SignalFrame> frames{a, b, c};

    write_frames(path, frames);
    auto loaded = read_frames(path);
    REQUIRE(loaded.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(frames_equal(loaded[i], frames[i]));
    std::remove(path.c_str());

    CHECK_THROWS_AS(read_frames(temp_path("does_not_exist.nkdf")), EnvironmentError);
}

TEST_CASE("loopback delivers in order and the tap sees everything") {
    LoopbackPair link = loopback_pair();

    SECTION("one hundred frames, in order, byte-identical on the tap") {
        std::vector<SignalFrame> sent;
        for (int i = 0; i < 100; ++i) {
            SignalFrame f = sample_frame();
            f.positions = {static_cast<std::uint16_t>(i % 4)};
            link.a.send(f);
            sent.push_back(f);
        }
        CHECK(link.b.pending() == 100);
        for (int i = 0; i < 100; ++i) {
            CHECK(frames_equal(link.b.receive(), sent[static_cast<std::size_t>(i)]));
        }
        REQUIRE(link.tap->frame_count() == 100);
        auto copies = link.tap->frames();
        for (int i = 0; i < 100; ++i) {
            CHECK(frames_equal(copies[static_cast<std::size_t>(i)],
                               sent[static_cast<std::size_t>(i)]));
            CHECK(link.tap->entries()[static_cast<std::size_t>(i)].bytes ==
                  serialize_frame(sent[static_cast<std::size_t>(i)]));
        }
    }

    SECTION("bidirectional traffic keeps per-direction FIFO order") {
        SignalFrame f = sample_frame();
        f.positions = {0};
        link.a.send(f);
        f.positions = {1};
        link.b.send(f);
        f.positions = {2};
        link.a.send(f);
        CHECK(link.b.receive().positions == std::vector<std::uint16_t>{0});
        CHECK(link.a.receive().positions == std::vector<std::uint16_t>{1});
        CHECK(link.b.receive().positions == std::vector<std::uint16_t>{2});
        CHECK(link.tap->frame_count() == 3);
    }

    SECTION("errors: empty receive, closed channel") {
        CHECK_THROWS_AS(link.a.receive(), ChannelError);
        link.b.close();
        CHECK_THROWS_AS(link.a.send(sample_frame()), ChannelError);
        CHECK_THROWS_AS(link.b.receive(), ChannelError);
    }
}
