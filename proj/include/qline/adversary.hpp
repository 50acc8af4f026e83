#pragma once

// Adversarial behaviour in two layers: quantum attacks on a wire segment
// (phase flips, intercept-resend, arbitrary single-qubit gates, random
// rotation offsets that the measuring node later compensates by
// relabeling), and classical misbehaviour by corrupted players at the
// announcement, syndrome and check stages.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bitvec.hpp"
#include "channel.hpp"
#include "params.hpp"

namespace qline {

enum class AttackKind : std::uint8_t {
    none = 0,
    phase_flip,          // flip the wire phase (two quarter turns) with some probability
    intercept_resend,    // measure the flying qubit and forward the eigenstate
    custom_unitary,      // apply a fixed single-qubit gate on the wire
    measurement_offset,  // random quarter rotations on the wire, announced to the
                         // measuring node, which relabels its records to compensate
};

// How an intercepting eavesdropper picks its measurement basis.
enum class BasisPolicy : std::uint8_t { uniform = 0, hadamard_only, circular_only, scripted };

// Classical misbehaviour of a corrupted player.
enum class DishonestStrategy : std::uint8_t {
    mirror = 0,          // follow the protocol exactly (honest-but-renamed)
    flip_values,         // commit the complement of the true value string
    flip_syndrome_bit,   // announce the true syndrome with its first bit flipped
    scripted,            // commit externally supplied basis/value strings
};

struct DishonestSpec {
    std::size_t player = 0;
    DishonestStrategy strategy = DishonestStrategy::mirror;
    BitVec scripted_basis;  // used by `scripted`, length N
    BitVec scripted_value;  // used by `scripted`, length N
};

// Per-round rotation offsets applied on the attacked wire segment; the
// quarter index in round n is basis.get(n) + 2*value.get(n).
struct WireOffsets {
    BitVec basis;
    BitVec value;
};

// What an intercept-resend eavesdropper learns: one (basis, outcome) pair
// per attacked round.
struct EveRecord {
    BitVec bases;
    BitVec outcomes;
};

struct AttackSpec {
    AttackKind kind = AttackKind::none;
    std::size_t link = 0;    // wire segment between node `link` and node `link`+1
    double rate = 1.0;       // phase_flip application probability per round
    BasisPolicy policy = BasisPolicy::uniform;
    BitVec scripted_bases;   // policy == scripted, length N
    std::array<std::complex<double>, 4> unitary = {
        std::complex<double>(1.0, 0.0), std::complex<double>(0.0, 0.0),
        std::complex<double>(0.0, 0.0), std::complex<double>(1.0, 0.0)};

    std::vector<DishonestSpec> dishonest;

    // Environment failures: refuse one broadcast stage, or make the
    // coin-flip functionality abort.
    std::string blocked_stage;
    bool coin_abort = false;

    // QKD-style two-party embedding: the measuring node broadcasts its own
    // syndrome as well (the other players' syndromes are broadcast always).
    bool announce_last_syndrome = false;

    void validate(const ProtocolParams& params) const {
        if (kind != AttackKind::none && link + 1 >= params.players) {
            throw std::invalid_argument("attack: link index beyond the last wire segment");
        }
        if (kind == AttackKind::phase_flip && !(rate >= 0.0 && rate <= 1.0)) {
            throw std::invalid_argument("attack: phase-flip rate out of range");
        }
        if (kind == AttackKind::intercept_resend && policy == BasisPolicy::scripted &&
            scripted_bases.size() != params.rounds) {
            throw std::invalid_argument("attack: scripted basis string has the wrong length");
        }
        for (const auto& d : dishonest) {
            if (d.player >= params.players) {
                throw std::invalid_argument("attack: dishonest id out of range");
            }
            if (params.is_honest(d.player)) {
                throw std::invalid_argument("attack: dishonest id listed as honest");
            }
            if (d.strategy == DishonestStrategy::scripted &&
                (d.scripted_basis.size() != params.rounds ||
                 d.scripted_value.size() != params.rounds)) {
                throw std::invalid_argument("attack: scripted announcement has the wrong length");
            }
        }
    }

    const DishonestSpec* spec_for(std::size_t player) const {
        for (const auto& d : dishonest) {
            if (d.player == player) return &d;
        }
        return nullptr;
    }
};

// The measuring node's record relabeling under announced wire offsets
// (basis_offset, value_offset): the effective basis is the XOR, and the
// value compensation carries an OR term from the quarter arithmetic.
// `raw` must be labeled so that outcome 0 names the +i eigenstate of the
// circular basis; the state-vector layer's convention labels that state 1,
// so its outcomes enter here XORed with the measurement basis bit.
inline std::pair<bool, bool> apply_offset(bool basis, bool basis_offset, bool value_offset,
                                          bool raw) {
    const bool basis_hat = basis ^ basis_offset;
    const bool value_hat = raw ^ value_offset ^ (basis || basis_offset);
    return {basis_hat, value_hat};
}

// What a corrupted player may see when it has to produce an announcement:
// the public transcript so far and its own private record. Keeping the
// interface this narrow is what guarantees announcements cannot depend on
// honest values that were never revealed.
struct AnnouncementView {
    const Transcript& transcript;
    const BitVec& own_basis;
    const BitVec& own_value;
};

inline BitVec dishonest_basis_announcement(const DishonestSpec& spec,
                                           const AnnouncementView& view) {
    switch (spec.strategy) {
        case DishonestStrategy::scripted: return spec.scripted_basis;
        default: return view.own_basis;
    }
}

inline BitVec dishonest_value_announcement(const DishonestSpec& spec,
                                           const AnnouncementView& view) {
    switch (spec.strategy) {
        case DishonestStrategy::flip_values: {
            BitVec flipped = view.own_value;
            for (std::size_t n = 0; n < flipped.size(); ++n) flipped.flip(n);
            return flipped;
        }
        case DishonestStrategy::scripted: return spec.scripted_value;
        default: return view.own_value;
    }
}

inline BitVec dishonest_syndrome(const DishonestSpec& spec, const BitVec& true_syndrome) {
    if (spec.strategy == DishonestStrategy::flip_syndrome_bit && true_syndrome.size() > 0) {
        BitVec out = true_syndrome;
        out.flip(0);
        return out;
    }
    return true_syndrome;
}

inline BitVec dishonest_check_value(const DishonestSpec& spec, const BitVec& true_check) {
    (void)spec;
    return true_check;
}

// Convenience constructor for the two-party offset embedding: random wire
// rotations on `link` plus record relabeling at the measuring node.
inline AttackSpec make_measurement_offset_attack(std::size_t link) {
    AttackSpec spec;
    spec.kind = AttackKind::measurement_offset;
    spec.link = link;
    spec.announce_last_syndrome = true;
    return spec;
}

} // namespace qline
