#pragma once

// Demo-grade persistence for distilled key material and the one-time-pad
// container built on it. A key store is a flat pool of bits with a spent
// watermark that only ever moves forward: encryption consumes bits at the
// watermark and advances it, decryption addresses the recorded region
// without touching it, so no bit can ever pad two messages.
//
// Store file (.nkks), little-endian:  "NKKS" v:u8  bit_count:u64  spent:u64
// followed by ceil(bit_count/8) bytes of bits packed LSB-first.
// Message file (.nkot):  "NKOT" v:u8  key_offset_bits:u64  byte_length:u64
// followed by the payload bytes.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "noisekey/channel.hpp"
#include "noisekey/errors.hpp"
#include "noisekey/params.hpp"

namespace noisekey {

inline constexpr std::uint8_t kKeyStoreVersion = 1;
inline constexpr std::uint8_t kOtpVersion = 1;

class KeyStore {
  public:
    KeyStore() = default;

    static KeyStore create(BitSequence bits) {
        for (std::uint8_t b : bits) {
            if (b > 1) throw UsageError("KeyStore: bits must be 0 or 1");
        }
        KeyStore store;
        store.bits_ = std::move(bits);
        return store;
    }

    void append(const BitSequence& bits) {
        for (std::uint8_t b : bits) {
            if (b > 1) throw UsageError("KeyStore: bits must be 0 or 1");
            bits_.push_back(b);
        }
    }

    std::size_t bit_count() const { return bits_.size(); }
    std::size_t spent_bits() const { return spent_; }
    std::size_t available_bits() const { return bits_.size() - spent_; }

    // Consume bits at the watermark. The watermark never rewinds; asking for
    // more than remains is refused outright rather than partially served.
    BitSequence take(std::size_t count) {
        if (count > available_bits()) {
            throw UsageError("KeyStore: exhausted, need " + std::to_string(count) +
                             " bits but only " + std::to_string(available_bits()) +
                             " remain unspent");
        }
        BitSequence out(bits_.begin() + static_cast<std::ptrdiff_t>(spent_),
                        bits_.begin() + static_cast<std::ptrdiff_t>(spent_ + count));
        spent_ += count;
        return out;
    }

    // Read-only access to an absolute region, for decryption. Does not move
    // the watermark.
    BitSequence peek(std::size_t offset_bits, std::size_t count) const {
        if (offset_bits + count > bits_.size()) {
            throw UsageError("KeyStore: region outside stored key material");
        }
        return BitSequence(bits_.begin() + static_cast<std::ptrdiff_t>(offset_bits),
                           bits_.begin() + static_cast<std::ptrdiff_t>(offset_bits + count));
    }

    void save(const std::string& path) const {
        std::vector<std::uint8_t> out;
        out.reserve(21 + bits_.size() / 8 + 1);
        for (char c : {'N', 'K', 'K', 'S'}) out.push_back(static_cast<std::uint8_t>(c));
        out.push_back(kKeyStoreVersion);
        detail::put_u64(out, bits_.size());
        detail::put_u64(out, spent_);
        std::uint8_t acc = 0;
        for (std::size_t i = 0; i < bits_.size(); ++i) {
            acc |= static_cast<std::uint8_t>(bits_[i] << (i % 8));
            if (i % 8 == 7) {
                out.push_back(acc);
                acc = 0;
            }
        }
        if (bits_.size() % 8 != 0) out.push_back(acc);
        std::ofstream file(path, std::ios::binary | std::ios::trunc);
        if (!file) throw EnvironmentError("KeyStore::save: cannot open " + path);
        file.write(reinterpret_cast<const char*>(out.data()),
                   static_cast<std::streamsize>(out.size()));
        if (!file) throw EnvironmentError("KeyStore::save: write failed for " + path);
    }

    static KeyStore load(const std::string& path) {
        std::ifstream file(path, std::ios::binary);
        if (!file) throw EnvironmentError("KeyStore::load: cannot open " + path);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                        std::istreambuf_iterator<char>());
        if (bytes.size() < 21) {
            throw FrameError(FrameError::Kind::Truncated, "KeyStore::load: short header",
                             21, bytes.size());
        }
        if (std::memcmp(bytes.data(), "NKKS", 4) != 0) {
            throw FrameError(FrameError::Kind::BadMagic, "KeyStore::load: bad magic");
        }
        if (bytes[4] != kKeyStoreVersion) {
            throw FrameError(FrameError::Kind::BadVersion,
                             "KeyStore::load: unsupported version", kKeyStoreVersion,
                             bytes[4]);
        }
        std::uint64_t bit_count = detail::get_u64(bytes.data() + 5);
        std::uint64_t spent = detail::get_u64(bytes.data() + 13);
        std::size_t need = 21 + static_cast<std::size_t>((bit_count + 7) / 8);
        if (bytes.size() < need) {
            throw FrameError(FrameError::Kind::Truncated, "KeyStore::load: short payload",
                             need, bytes.size());
        }
        if (spent > bit_count) {
            throw FrameError(FrameError::Kind::BadGeometry,
                             "KeyStore::load: watermark beyond stored bits",
                             bit_count, spent);
        }
        KeyStore store;
        store.bits_.resize(static_cast<std::size_t>(bit_count));
        for (std::size_t i = 0; i < store.bits_.size(); ++i) {
            store.bits_[i] = (bytes[21 + i / 8] >> (i % 8)) & 1u;
        }
        store.spent_ = static_cast<std::size_t>(spent);
        return store;
    }

  private:
    BitSequence bits_;
    std::size_t spent_ = 0;
};

struct OtpMessage {
    std::uint64_t key_offset_bits = 0;
    std::vector<std::uint8_t> payload;
};

// XOR the plaintext against fresh key bits (8 per byte, LSB-first) taken at
// the store's watermark. The consumed region is recorded in the message so
// decryption can find it; save the store afterwards or the spend is lost.
inline OtpMessage otp_encrypt(KeyStore& store, std::span<const std::uint8_t> plaintext) {
    OtpMessage msg;
    msg.key_offset_bits = store.spent_bits();
    BitSequence key = store.take(plaintext.size() * 8);
    msg.payload.resize(plaintext.size());
    for (std::size_t i = 0; i < plaintext.size(); ++i) {
        std::uint8_t pad = 0;
        for (int j = 0; j < 8; ++j) {
            pad |= static_cast<std::uint8_t>(key[8 * i + static_cast<std::size_t>(j)] << j);
        }
        msg.payload[i] = plaintext[i] ^ pad;
    }
    return msg;
}

inline std::vector<std::uint8_t> otp_decrypt(const KeyStore& store, const OtpMessage& msg) {
    BitSequence key =
        store.peek(static_cast<std::size_t>(msg.key_offset_bits), msg.payload.size() * 8);
    std::vector<std::uint8_t> plain(msg.payload.size());
    for (std::size_t i = 0; i < plain.size(); ++i) {
        std::uint8_t pad = 0;
        for (int j = 0; j < 8; ++j) {
            pad |= static_cast<std::uint8_t>(key[8 * i + static_cast<std::size_t>(j)] << j);
        }
        plain[i] = msg.payload[i] ^ pad;
    }
    return plain;
}

inline void write_otp(const std::string& path, const OtpMessage& msg) {
    std::vector<std::uint8_t> out;
    out.reserve(21 + msg.payload.size());
    for (char c : {'N', 'K', 'O', 'T'}) out.push_back(static_cast<std::uint8_t>(c));
    out.push_back(kOtpVersion);
    detail::put_u64(out, msg.key_offset_bits);
    detail::put_u64(out, msg.payload.size());
    out.insert(out.end(), msg.payload.begin(), msg.payload.end());
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw EnvironmentError("write_otp: cannot open " + path);
    file.write(reinterpret_cast<const char*>(out.data()),
               static_cast<std::streamsize>(out.size()));
    if (!file) throw EnvironmentError("write_otp: write failed for " + path);
}

inline OtpMessage read_otp(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw EnvironmentError("read_otp: cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 21) {
        throw FrameError(FrameError::Kind::Truncated, "read_otp: short header", 21,
                         bytes.size());
    }
    if (std::memcmp(bytes.data(), "NKOT", 4) != 0) {
        throw FrameError(FrameError::Kind::BadMagic, "read_otp: bad magic");
    }
    if (bytes[4] != kOtpVersion) {
        throw FrameError(FrameError::Kind::BadVersion, "read_otp: unsupported version",
                         kOtpVersion, bytes[4]);
    }
    OtpMessage msg;
    msg.key_offset_bits = detail::get_u64(bytes.data() + 5);
    std::uint64_t length = detail::get_u64(bytes.data() + 13);
    if (bytes.size() < 21 + length) {
        throw FrameError(FrameError::Kind::Truncated, "read_otp: short payload",
                         21 + length, bytes.size());
    }
    msg.payload.assign(bytes.begin() + 21,
                       bytes.begin() + 21 + static_cast<std::ptrdiff_t>(length));
    return msg;
}

}  // namespace noisekey
