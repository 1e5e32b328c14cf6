#pragma once

// Classical transport for quantized signal frames. A frame carries the
// geometry needed to interpret its positions (encoding, M, dphi1) plus the
// position indices themselves. Wire layout, little-endian throughout:
//
//   offset  size  field
//   0       4     magic "NKDF"
//   4       1     format version (1)
//   5       1     encoding (0 wheel, 1 sector)
//   6       2     M
//   8       8     delta_phi1, IEEE-754 binary64
//   16      4     position count
//   20      2*N   positions, u16 each
//
// The loopback channel used by the simulator pushes every frame through this
// byte format, and a tap object retains the raw bytes of both directions so
// an eavesdropper sees exactly what the wire carries.

#include <bit>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "noisekey/errors.hpp"
#include "noisekey/params.hpp"
#include "noisekey/wheel.hpp"

namespace noisekey {

struct SignalFrame {
    Encoding encoding = Encoding::SectorM2;
    std::uint16_t m = 2;
    double delta_phi1 = 0.0;
    std::vector<std::uint16_t> positions;
};

inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 20;

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

inline bool valid_m(std::uint32_t m) {
    return m >= 2 && m <= 32768 && (m & (m - 1)) == 0;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_frame(const SignalFrame& frame) {
    if (!detail::valid_m(frame.m)) {
        throw FrameError(FrameError::Kind::BadGeometry,
                         "serialize_frame: M must be a power of two in [2, 32768]", 0,
                         frame.m);
    }
    if (!std::isfinite(frame.delta_phi1) || frame.delta_phi1 < 0.0) {
        throw FrameError(FrameError::Kind::BadGeometry,
                         "serialize_frame: delta_phi1 must be finite and >= 0");
    }
    std::uint32_t limit = position_count(frame.encoding, frame.m);
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderSize + 2 * frame.positions.size());
    for (char c : {'N', 'K', 'D', 'F'}) out.push_back(static_cast<std::uint8_t>(c));
    out.push_back(kFrameVersion);
    out.push_back(static_cast<std::uint8_t>(frame.encoding));
    detail::put_u16(out, frame.m);
    detail::put_u64(out, std::bit_cast<std::uint64_t>(frame.delta_phi1));
    detail::put_u32(out, static_cast<std::uint32_t>(frame.positions.size()));
    for (std::uint16_t pos : frame.positions) {
        if (pos >= limit) {
            throw FrameError(FrameError::Kind::PositionRange,
                             "serialize_frame: position index out of range", limit, pos);
        }
        detail::put_u16(out, pos);
    }
    return out;
}

// Decode one frame from the front of `bytes`; `consumed` reports how many
// bytes it occupied so concatenated streams can be walked.
inline SignalFrame deserialize_frame(std::span<const std::uint8_t> bytes,
                                     std::size_t& consumed) {
    if (bytes.size() < kFrameHeaderSize) {
        throw FrameError(FrameError::Kind::Truncated, "deserialize_frame: short header",
                         kFrameHeaderSize, bytes.size());
    }
    if (std::memcmp(bytes.data(), "NKDF", 4) != 0) {
        throw FrameError(FrameError::Kind::BadMagic, "deserialize_frame: bad magic");
    }
    if (bytes[4] != kFrameVersion) {
        throw FrameError(FrameError::Kind::BadVersion,
                         "deserialize_frame: unsupported version", kFrameVersion, bytes[4]);
    }
    if (bytes[5] > 1) {
        throw FrameError(FrameError::Kind::BadEncoding,
                         "deserialize_frame: unknown encoding", 1, bytes[5]);
    }
    SignalFrame frame;
    frame.encoding = static_cast<Encoding>(bytes[5]);
    frame.m = detail::get_u16(bytes.data() + 6);
    if (!detail::valid_m(frame.m)) {
        throw FrameError(FrameError::Kind::BadGeometry,
                         "deserialize_frame: M must be a power of two in [2, 32768]", 0,
                         frame.m);
    }
    frame.delta_phi1 = std::bit_cast<double>(detail::get_u64(bytes.data() + 8));
    if (!std::isfinite(frame.delta_phi1) || frame.delta_phi1 < 0.0) {
        throw FrameError(FrameError::Kind::BadGeometry,
                         "deserialize_frame: delta_phi1 must be finite and >= 0");
    }
    std::uint32_t count = detail::get_u32(bytes.data() + 16);
    std::size_t need = kFrameHeaderSize + 2 * static_cast<std::size_t>(count);
    if (bytes.size() < need) {
        throw FrameError(FrameError::Kind::Truncated, "deserialize_frame: short payload",
                         need, bytes.size());
    }
    std::uint32_t limit = position_count(frame.encoding, frame.m);
    frame.positions.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t pos = detail::get_u16(bytes.data() + kFrameHeaderSize + 2 * i);
        if (pos >= limit) {
            throw FrameError(FrameError::Kind::PositionRange,
                             "deserialize_frame: position index out of range", limit, pos);
        }
        frame.positions[i] = pos;
    }
    consumed = need;
    return frame;
}

inline SignalFrame deserialize_frame(std::span<const std::uint8_t> bytes) {
    std::size_t consumed = 0;
    SignalFrame frame = deserialize_frame(bytes, consumed);
    if (consumed != bytes.size()) {
        throw FrameError(FrameError::Kind::Truncated,
                         "deserialize_frame: trailing bytes after frame", consumed,
                         bytes.size());
    }
    return frame;
}

// Concatenated frames on disk (.nkdf).
inline void write_frames(const std::string& path, std::span<const SignalFrame> frames) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw EnvironmentError("write_frames: cannot open " + path);
    for (const auto& frame : frames) {
        auto bytes = serialize_frame(frame);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw EnvironmentError("write_frames: write failed for " + path);
}

inline std::vector<SignalFrame> read_frames(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EnvironmentError("read_frames: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    std::vector<SignalFrame> frames;
    std::size_t at = 0;
    while (at < bytes.size()) {
        std::size_t consumed = 0;
        frames.push_back(deserialize_frame(
            std::span<const std::uint8_t>(bytes.data() + at, bytes.size() - at), consumed));
        at += consumed;
    }
    return frames;
}

// Passive wiretap: byte-exact copies of every frame in transit, in order,
// with the direction it travelled.
class ChannelTap {
  public:
    struct Entry {
        bool from_first;  // true when endpoint a sent it
        std::vector<std::uint8_t> bytes;
    };

    const std::vector<Entry>& entries() const { return entries_; }

    std::size_t frame_count() const { return entries_.size(); }

    std::vector<SignalFrame> frames() const {
        std::vector<SignalFrame> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) {
            out.push_back(deserialize_frame(
                std::span<const std::uint8_t>(e.bytes.data(), e.bytes.size())));
        }
        return out;
    }

    void record(bool from_first, std::vector<std::uint8_t> bytes) {
        entries_.push_back(Entry{from_first, std::move(bytes)});
    }

  private:
    std::vector<Entry> entries_;
};

namespace detail {
struct LoopbackShared {
    std::deque<std::vector<std::uint8_t>> to_first;
    std::deque<std::vector<std::uint8_t>> to_second;
    std::shared_ptr<ChannelTap> tap = std::make_shared<ChannelTap>();
    bool closed = false;
};
}  // namespace detail

struct LoopbackPair;
inline LoopbackPair loopback_pair();

// One side of an in-process duplex channel. Frames are serialized on send
// and parsed on receive, so the wire format is exercised on every hop.
class LoopbackEndpoint {
  public:
    LoopbackEndpoint() = default;

    void send(const SignalFrame& frame) {
        require_open("send");
        auto bytes = serialize_frame(frame);
        shared_->tap->record(first_, bytes);
        (first_ ? shared_->to_second : shared_->to_first).push_back(std::move(bytes));
    }

    SignalFrame receive() {
        require_open("receive");
        auto& queue = first_ ? shared_->to_first : shared_->to_second;
        if (queue.empty()) throw ChannelError("receive: no frame pending");
        auto bytes = std::move(queue.front());
        queue.pop_front();
        return deserialize_frame(std::span<const std::uint8_t>(bytes.data(), bytes.size()));
    }

    std::size_t pending() const {
        return shared_ ? (first_ ? shared_->to_first.size() : shared_->to_second.size()) : 0;
    }

    void close() {
        if (shared_) shared_->closed = true;
    }

    bool closed() const { return !shared_ || shared_->closed; }

  private:
    friend LoopbackPair loopback_pair();
    LoopbackEndpoint(std::shared_ptr<detail::LoopbackShared> shared, bool first)
        : shared_(std::move(shared)), first_(first) {}

    void require_open(const char* op) const {
        if (!shared_) throw ChannelError(std::string(op) + ": endpoint not connected");
        if (shared_->closed) throw ChannelError(std::string(op) + ": channel is closed");
    }

    std::shared_ptr<detail::LoopbackShared> shared_;
    bool first_ = true;
};

struct LoopbackPair {
    LoopbackEndpoint a;
    LoopbackEndpoint b;
    std::shared_ptr<ChannelTap> tap;
};

inline LoopbackPair loopback_pair() {
    auto shared = std::make_shared<detail::LoopbackShared>();
    LoopbackPair pair;
    pair.tap = shared->tap;
    pair.a = LoopbackEndpoint(shared, true);
    pair.b = LoopbackEndpoint(shared, false);
    return pair;
}

}  // namespace noisekey
