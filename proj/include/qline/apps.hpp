#pragma once

// The three primitives built from shares of zero plus the authenticated
// broadcast channel: one-time-pad publication of a secret, an anonymous
// veto, and pairwise key establishment. All of them consume finished
// session outputs and never re-enter the quantum layer; their announced
// strings go through the channel so the transcript shows the exchange.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bitvec.hpp"
#include "channel.hpp"
#include "engine.hpp"
#include "rng.hpp"

namespace qline {

// Per-player shares from one successful session. A player whose share is
// unknown — corrupted during the session, or withholding it now — holds
// nullopt; each operation below states which entries it needs. Except
// with the correctness failure probability (2^-eta per session), the
// present shares of an honest run XOR to the zero string.
struct ShareSet {
    std::uint64_t session_id = 0;
    std::vector<std::optional<BitVec>> shares;

    std::size_t players() const { return shares.size(); }

    // Share length, read from the first present entry.
    std::size_t width() const {
        for (const auto& s : shares) {
            if (s) return s->size();
        }
        throw std::runtime_error("share set: no shares present");
    }

    const BitVec& share_of(std::size_t player) const {
        if (player >= shares.size()) {
            throw std::invalid_argument("share set: no such player");
        }
        if (!shares[player]) {
            throw std::runtime_error("share set: share missing for player " +
                                     std::to_string(player));
        }
        return *shares[player];
    }
};

inline ShareSet make_share_set(const SessionOutcome& outcome, std::uint64_t session_id) {
    if (!outcome.success() || outcome.shares.empty()) {
        throw std::invalid_argument("share set: session did not produce shares");
    }
    return ShareSet{session_id, outcome.shares};
}

// One-time-pad publication: the dealer broadcasts its secret masked with
// its own share. Because the shares cancel, anyone holding every other
// share unmasks the secret; anyone missing even one sees a uniform string.
inline BitVec share_message(std::size_t dealer, const BitVec& secret, const ShareSet& set,
                            Channel& channel) {
    const BitVec& pad = set.share_of(dealer);
    if (secret.size() != pad.size()) {
        throw std::invalid_argument("one-time pad: secret length differs from share length");
    }
    BitVec ciphertext = secret ^ pad;
    if (!channel.broadcast(static_cast<unsigned>(dealer) + 1, "ciphertext", ciphertext)) {
        throw std::runtime_error("one-time pad: channel suppressed the publication");
    }
    return ciphertext;
}

// Unmask a published ciphertext with every non-dealer share. Throws when
// any of those shares is missing; a strict subset cannot reconstruct.
inline BitVec reconstruct_message(std::size_t dealer, const BitVec& ciphertext,
                                  const ShareSet& set) {
    if (dealer >= set.players()) throw std::invalid_argument("one-time pad: no such dealer");
    BitVec message = ciphertext;
    for (std::size_t j = 0; j < set.players(); ++j) {
        if (j != dealer) message ^= set.share_of(j);
    }
    return message;
}

// Anonymous veto over J announcement rounds, one fresh share set per
// round. Round r runs in rotated order so that player r speaks last; a
// vetoing player announces a fresh uniform string instead of its share.
// A veto shows up as a round whose announcements no longer cancel, and
// uniformity of both honest shares and substituted strings keeps the
// votes unattributable. The result is the OR of the flags, up to a
// 2^-width collision chance per vetoed round.
inline bool anonymous_veto(const std::vector<ShareSet>& sessions, const std::vector<bool>& veto,
                           Channel& channel, Rng& rng) {
    const std::size_t players = veto.size();
    if (players == 0) throw std::invalid_argument("veto: no players");
    if (sessions.size() < players) {
        throw std::invalid_argument("veto: need one share set per announcement round");
    }
    bool vetoed = false;
    for (std::size_t r = 0; r < players; ++r) {
        const ShareSet& set = sessions[r];
        if (set.players() != players) {
            throw std::invalid_argument("veto: share set has the wrong player count");
        }
        const std::string stage = "veto_" + std::to_string(r);
        BitVec sum(set.width());
        for (std::size_t p = 0; p < players; ++p) {
            const std::size_t player = (r + 1 + p) % players; // player r speaks last
            const BitVec announced = veto[player] ? rng.bits(set.width()) : set.share_of(player);
            if (!channel.broadcast(static_cast<unsigned>(player) + 1, stage, announced)) {
                throw std::runtime_error("veto: channel suppressed an announcement");
            }
            sum ^= announced;
        }
        if (sum.any()) vetoed = true;
    }
    return vetoed;
}

// The same symmetric key as computed by each endpoint of the pair.
struct KeyPair {
    BitVec at_a;
    BitVec at_b;

    bool matched() const { return at_a == at_b; }
};

// Pairwise key establishment: everyone except the two endpoints reveals
// its share. Endpoint a cancels the reveals against its own share;
// endpoint b's share already equals that value whenever the full set
// XORs to zero, so the two sides agree up to the correctness failure
// probability of the session that produced the set.
inline KeyPair establish_key(const ShareSet& set, std::size_t a, std::size_t b,
                             Channel& channel) {
    if (a >= set.players() || b >= set.players() || a == b) {
        throw std::invalid_argument("key establishment: endpoints must be two distinct players");
    }
    BitVec at_a = set.share_of(a);
    for (std::size_t j = 0; j < set.players(); ++j) {
        if (j == a || j == b) continue;
        const BitVec& revealed = set.share_of(j);
        if (!channel.broadcast(static_cast<unsigned>(j) + 1, "reveal_share", revealed)) {
            throw std::runtime_error("key establishment: channel suppressed a reveal");
        }
        at_a ^= revealed;
    }
    return KeyPair{std::move(at_a), set.share_of(b)};
}

} // namespace qline
