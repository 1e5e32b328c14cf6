#pragma once

// Session state machines for the two-party key-growing cycle. Each half
// cycle one party derives bases from the sequence both sides agreed on last
// time, emits L fresh bits under those bases, and the peer decodes with its
// own copy of the bases; the decoded sequence then becomes the basis source
// for the next half cycle. Neither side reconciles bit errors here; the
// simulation tracks the divergence between the two local beliefs as BER.

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "noisekey/channel.hpp"
#include "noisekey/errors.hpp"
#include "noisekey/params.hpp"
#include "noisekey/phrg.hpp"
#include "noisekey/wheel.hpp"

namespace noisekey {

enum class Role { Initiator, Responder };

inline const char* role_name(Role role) {
    return role == Role::Initiator ? "initiator" : "responder";
}

struct KeyBatch {
    BitSequence bits;
    std::vector<std::uint32_t> cycles;  // provenance: cycle indices folded in
    bool distilled = false;
};

// Best-effort scrub of retired key material. The buffers live on the heap of
// a simulator, so this is hygiene rather than a hardened guarantee; the
// volatile qualifier keeps the stores from being optimized away.
inline void zeroize(BitSequence& bits) {
    volatile std::uint8_t* p = bits.data();
    for (std::size_t i = 0; i < bits.size(); ++i) p[i] = 0;
}

struct SessionState {
    Role role = Role::Initiator;
    ProtocolParams params;
    // The sequence bases are currently derived from. Starts life as the
    // pre-shared key and is replaced (old copy zeroized) after every half
    // cycle by that half cycle's locally believed R sequence.
    BitSequence current_basis_bits;
    std::vector<BitSequence> shared_batches;
    std::uint32_t cycle = 0;        // completed full cycles
    std::uint32_t half_cycles = 0;  // half cycles this session took part in
    bool initial_key_retired = false;
};

inline SessionState make_session(Role role, const ProtocolParams& params,
                                 BitSequence initial_key) {
    params.validate();
    if (initial_key.size() != params.key_bits) {
        throw UsageError("make_session: initial key must have key_bits bits");
    }
    for (std::uint8_t b : initial_key) {
        if (b > 1) throw UsageError("make_session: initial key elements must be 0 or 1");
    }
    SessionState state;
    state.role = role;
    state.params = params;
    state.current_basis_bits = std::move(initial_key);
    return state;
}

// Split a shared sequence into k_M-bit blocks, one basis index per block.
// For the sector encoding k_M = 1, so the basis bits are the sequence itself.
inline BasisSequence derive_bases(const BitSequence& bits, const ProtocolParams& params) {
    std::size_t block = params.bits_per_basis;
    if (block == 0 || bits.size() % block != 0) {
        throw UsageError("derive_bases: sequence length not divisible by block size");
    }
    BasisSequence bases;
    bases.reserve(bits.size() / block);
    for (std::size_t at = 0; at < bits.size(); at += block) {
        bases.push_back(basis_index(std::span<const std::uint8_t>(bits.data() + at, block)));
    }
    return bases;
}

namespace detail {
// Old basis material is scrubbed before the replacement lands.
inline void refresh_bases(SessionState& state, const BitSequence& agreed) {
    zeroize(state.current_basis_bits);
    state.current_basis_bits = agreed;
    if (!state.initial_key_retired) state.initial_key_retired = true;
}

// The shared sequence need not divide evenly into basis blocks; a trailing
// partial block carries too few bits to name a basis and is dropped. Both
// parties truncate identically, so their derived bases still agree.
inline BasisSequence session_bases(const SessionState& state) {
    const BitSequence& bits = state.current_basis_bits;
    std::size_t block = state.params.bits_per_basis;
    std::size_t usable = block ? bits.size() - bits.size() % block : 0;
    if (usable == bits.size()) return derive_bases(bits, state.params);
    BitSequence head(bits.begin(), bits.begin() + static_cast<std::ptrdiff_t>(usable));
    return derive_bases(head, state.params);
}
}  // namespace detail

struct HalfCycleSend {
    SignalFrame frame;
    BitSequence sent;  // the plaintext R, never transmitted
};

// Emit one half cycle: L fresh bits, each encoded under the basis drawn from
// the current shared sequence. A wheel basis covers k_M source bits but each
// emission carries one fresh bit, so the L/k_M bases are recycled cyclically
// across the half cycle; the sector encoding is positional (basis i = bit i).
inline HalfCycleSend send_half_cycle(SessionState& state, EntropySource& source,
                                     const NoiseModel& model) {
    BasisSequence bases = detail::session_bases(state);
    if (bases.empty()) {
        throw ProtocolError("send_half_cycle: no bases available", state.cycle);
    }
    HalfCycleSend out;
    out.sent = fresh_bits(source, state.params.key_bits);
    out.frame.encoding = state.params.encoding;
    out.frame.m = state.params.m;
    out.frame.delta_phi1 = state.params.delta_phi1;
    out.frame.positions.reserve(out.sent.size());
    for (std::size_t i = 0; i < out.sent.size(); ++i) {
        std::uint32_t basis = bases[i % bases.size()];
        out.frame.positions.push_back(
            emit_signal(out.sent[i], basis, state.params, model, source).index);
    }
    state.shared_batches.push_back(out.sent);
    detail::refresh_bases(state, out.sent);
    state.half_cycles += 1;
    return out;
}

// Decode one half cycle with the local copy of the bases. Geometry or length
// mismatches mean the two sessions no longer agree on where they are in the
// cycle, which is unrecoverable here and surfaces as ProtocolError.
inline BitSequence receive_half_cycle(SessionState& state, const SignalFrame& frame) {
    const ProtocolParams& p = state.params;
    if (frame.encoding != p.encoding || frame.m != p.m) {
        throw ProtocolError("receive_half_cycle: frame geometry mismatch", state.cycle);
    }
    if (frame.delta_phi1 != p.delta_phi1) {
        throw ProtocolError("receive_half_cycle: frame delta_phi1 mismatch", state.cycle);
    }
    if (frame.positions.size() != p.key_bits) {
        throw ProtocolError("receive_half_cycle: frame length mismatch", state.cycle);
    }
    BasisSequence bases = detail::session_bases(state);
    BitSequence decoded;
    decoded.reserve(frame.positions.size());
    for (std::size_t i = 0; i < frame.positions.size(); ++i) {
        double received = position_phase(p.encoding, p.m, p.delta_phi1, frame.positions[i]);
        std::uint32_t basis = bases[i % bases.size()];
        std::uint8_t bit;
        if (p.encoding == Encoding::SectorM2) {
            bit = decode_sector(received, static_cast<std::uint8_t>(basis), p.delta_phi1);
        } else {
            bit = decode_wheel(received, basis, p.m);
        }
        decoded.push_back(bit);
    }
    state.shared_batches.push_back(decoded);
    detail::refresh_bases(state, decoded);
    state.half_cycles += 1;
    return decoded;
}

inline std::size_t count_bit_errors(const BitSequence& a, const BitSequence& b) {
    if (a.size() != b.size()) throw UsageError("count_bit_errors: length mismatch");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) ++errors;
    }
    return errors;
}

struct CycleStats {
    std::uint32_t cycle = 0;  // 0-based
    Role sender = Role::Initiator;
    std::size_t bits = 0;
    std::size_t bit_errors = 0;  // sender's R vs receiver's decoded R
    double ber = 0.0;
    std::size_t tap_frames = 0;  // frames the wiretap had seen by then
};

struct RunResult {
    std::vector<KeyBatch> initiator_batches;  // initiator's local beliefs, in order
    std::vector<KeyBatch> responder_batches;
    std::vector<CycleStats> stats;  // two entries per cycle
    std::shared_ptr<ChannelTap> tap;
};

// Drive both sessions through n_cycles full cycles over an in-process
// loopback: initiator sends first each cycle, then the responder answers.
// The returned batches are each party's local beliefs; where they diverge
// the stats already say so, reconciliation being out of scope.
inline RunResult run_cycles(SessionState& initiator, SessionState& responder,
                            EntropySource& initiator_source,
                            EntropySource& responder_source, std::size_t n_cycles,
                            const NoiseModel& model) {
    if (initiator.role != Role::Initiator || responder.role != Role::Responder) {
        throw UsageError("run_cycles: sessions must be one initiator and one responder");
    }
    LoopbackPair link = loopback_pair();
    RunResult result;
    result.tap = link.tap;

    auto half = [&](SessionState& tx, SessionState& rx, LoopbackEndpoint& tx_end,
                    LoopbackEndpoint& rx_end, EntropySource& tx_source,
                    std::uint32_t cycle) {
        HalfCycleSend sent = send_half_cycle(tx, tx_source, model);
        tx_end.send(sent.frame);
        BitSequence decoded = receive_half_cycle(rx, rx_end.receive());
        CycleStats cs;
        cs.cycle = cycle;
        cs.sender = tx.role;
        cs.bits = sent.sent.size();
        cs.bit_errors = count_bit_errors(sent.sent, decoded);
        cs.ber = cs.bits == 0 ? 0.0
                              : static_cast<double>(cs.bit_errors) / static_cast<double>(cs.bits);
        cs.tap_frames = link.tap->frame_count();
        result.stats.push_back(cs);
        std::uint32_t batch_cycle = cycle;
        result.initiator_batches.push_back(
            KeyBatch{tx.role == Role::Initiator ? sent.sent : decoded, {batch_cycle}, false});
        result.responder_batches.push_back(
            KeyBatch{tx.role == Role::Responder ? sent.sent : decoded, {batch_cycle}, false});
    };

    for (std::size_t s = 0; s < n_cycles; ++s) {
        std::uint32_t cycle = static_cast<std::uint32_t>(s);
        half(initiator, responder, link.a, link.b, initiator_source, cycle);
        half(responder, initiator, link.b, link.a, responder_source, cycle);
        initiator.cycle = cycle + 1;
        responder.cycle = cycle + 1;
    }
    return result;
}

// Placeholder privacy amplification: XOR of disjoint bit pairs halves the
// length; the pass count is ceil(log2(1/ratio)). Not a universal-hash
// distillation, just the interface seat for one.
inline KeyBatch privacy_amplify(const KeyBatch& batch, double ratio) {
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw UsageError("privacy_amplify: ratio must lie in (0, 1)");
    }
    if (batch.bits.size() < 2) {
        throw UsageError("privacy_amplify: batch too short");
    }
    int passes = static_cast<int>(std::ceil(std::log2(1.0 / ratio) - 1e-9));
    if (passes < 1) passes = 1;
    BitSequence bits = batch.bits;
    for (int pass = 0; pass < passes; ++pass) {
        if (bits.size() < 2) {
            throw UsageError("privacy_amplify: batch too short for requested ratio");
        }
        BitSequence next;
        next.reserve(bits.size() / 2);
        for (std::size_t i = 0; i + 1 < bits.size(); i += 2) {
            next.push_back(bits[i] ^ bits[i + 1]);
        }
        bits = std::move(next);
    }
    KeyBatch out;
    out.bits = std::move(bits);
    out.cycles = batch.cycles;
    out.distilled = true;
    return out;
}

}  // namespace noisekey
