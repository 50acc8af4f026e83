#pragma once

// Session-level configuration: player counts, round budget, abort
// thresholds, hash lengths and the embedded error-correction settings.
// Everything here is agreed before a session starts; the only quantities
// fixed during a session are the realized subset sizes and the code
// instance, which depends on the realized key-block length.

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "coding.hpp"
#include "quantum.hpp"

namespace qline {

// Which state-distribution variant a session runs: the source prepares
// rotated |+> states measured by the last node, or a shared GHZ-type
// state measured by everyone.
enum class Variant : std::uint8_t { prepare_measure = 0, entangled = 1 };

// How the two announcement sessions bind values before the subset is
// drawn: `ideal` trusts the channel functionality, `commitment` runs
// hash-based commit/reveal over the same channel.
enum class ChannelMode : std::uint8_t { ideal = 0, commitment = 1 };

struct ProtocolParams {
    std::size_t players = 2;          // J: source, intermediates, measuring node
    std::vector<std::size_t> honest;  // honest player ids; empty means "all honest"
    std::size_t rounds = 0;           // N: qubits sent per session
    std::size_t tau_prime = 0;        // check positions the channel will draw
    double delta = 0.0;               // error-rate abort threshold
    double nu = 0.0;                  // correction margin on top of delta
    std::size_t eta = 32;             // correctness-check hash length
    std::size_t key_length = 1;       // K: final share length
    double noise = 0.0;               // per-round phase-flip probability
    ChannelMode channel_mode = ChannelMode::ideal;
    CodeConfig code;                  // error-correction configuration

    // The code corrects up to a (delta+nu) fraction of the key block: the
    // worst error rate that can pass estimation, plus the agreed margin.
    double correction_rate() const { return delta + nu; }

    // Sorted honest ids, with the empty shorthand expanded.
    std::vector<std::size_t> honest_players() const {
        if (honest.empty()) {
            std::vector<std::size_t> all(players);
            for (std::size_t j = 0; j < players; ++j) all[j] = j;
            return all;
        }
        std::vector<std::size_t> out = honest;
        std::sort(out.begin(), out.end());
        return out;
    }

    bool is_honest(std::size_t j) const {
        if (honest.empty()) return true;
        return std::find(honest.begin(), honest.end(), j) != honest.end();
    }

    std::size_t honest_count() const { return honest.empty() ? players : honest.size(); }

    void validate(Variant variant) const {
        if (players < 2) throw std::invalid_argument("params: need at least two players");
        if (variant == Variant::entangled && players > QuantumRegister::kMaxQubits) {
            throw std::invalid_argument("params: entangled variant exceeds the register limit");
        }
        const auto hp = honest_players();
        if (hp.size() < 2) throw std::invalid_argument("params: need at least two honest players");
        for (std::size_t k = 0; k < hp.size(); ++k) {
            if (hp[k] >= players) throw std::invalid_argument("params: honest id out of range");
            if (k > 0 && hp[k] == hp[k - 1]) {
                throw std::invalid_argument("params: duplicate honest id");
            }
        }
        if (rounds < 2) throw std::invalid_argument("params: need at least two rounds");
        if (tau_prime == 0 || tau_prime >= rounds) {
            throw std::invalid_argument("params: check-set size must be in (0, rounds)");
        }
        if (!(delta >= 0.0 && delta < 0.5)) {
            throw std::invalid_argument("params: abort threshold must be in [0, 1/2)");
        }
        if (nu < 0.0) throw std::invalid_argument("params: correction margin must be nonnegative");
        if (delta + nu > 0.49) {
            throw std::invalid_argument("params: delta+nu too close to 1/2 for syndrome coding");
        }
        if (!(noise >= 0.0 && noise <= 1.0)) {
            throw std::invalid_argument("params: noise probability out of range");
        }
        if (eta == 0) throw std::invalid_argument("params: correctness hash length must be positive");
        if (key_length == 0) throw std::invalid_argument("params: share length must be positive");
    }
};

} // namespace qline
