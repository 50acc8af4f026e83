#pragma once

// Hash-based instantiation of the subset-broadcast session: per-value
// SHA-256 commitments, opened on the revealed subset and verified by
// everyone. Interchangeable with the ideal session — under the same
// channel seed and the same committed vectors both produce the same
// subset and the same revealed bits.

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>

#include <openssl/evp.h>

#include "channel.hpp"

namespace qline {

inline std::array<std::uint8_t, 32> sha256(const std::uint8_t* data, std::size_t len) {
    std::array<std::uint8_t, 32> out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 || out_len != 32) {
        throw std::runtime_error("sha256: digest failed");
    }
    return out;
}

// Byte <-> bit packing used for transcript payloads: byte k carries bits
// [8k, 8k+8), least significant bit first (matches BitVec::to_hex).
inline void pack_bytes(BitVec& v, std::size_t bit_offset, const std::uint8_t* data, std::size_t len) {
    for (std::size_t k = 0; k < len; ++k) {
        for (unsigned b = 0; b < 8; ++b) {
            v.set(bit_offset + 8 * k + b, (data[k] >> b) & 1);
        }
    }
}

// Commitment to one bit: SHA-256 over a fixed-layout buffer of the
// committing player, the value index, the bit, and 32 bytes of private
// randomness. Binding player and index into the preimage stops replaying
// one opening for another slot.
inline std::array<std::uint8_t, 32> commit_digest(std::uint32_t player, std::uint32_t index,
                                                  bool bit, const std::array<std::uint8_t, 32>& randomness) {
    std::uint8_t buf[4 + 4 + 1 + 32];
    for (unsigned k = 0; k < 4; ++k) buf[k] = static_cast<std::uint8_t>(player >> (8 * k));
    for (unsigned k = 0; k < 4; ++k) buf[4 + k] = static_cast<std::uint8_t>(index >> (8 * k));
    buf[8] = bit ? 1 : 0;
    std::memcpy(buf + 9, randomness.data(), 32);
    return sha256(buf, sizeof buf);
}

class CommitRevealSubsetBroadcast final : public SubsetBroadcastBase {
public:
    // `randomness_seed` feeds per-player private commitment randomness;
    // players derive independent streams from it by player number.
    CommitRevealSubsetBroadcast(Channel& channel, std::string label, std::uint32_t n,
                                unsigned players, std::uint64_t randomness_seed)
        : SubsetBroadcastBase(channel, std::move(label), n, players),
          randomness_seed_(randomness_seed),
          openings_(players),
          digests_(players) {}

    // Tamper levers for dishonest-behaviour tests: make `player` open slot
    // `index` with a flipped bit, or with randomness that does not match
    // the commitment. Either way verification must fail and abort.
    void corrupt_opened_bit(unsigned player, std::uint32_t index) {
        corrupt_bit_.push_back({player, index});
    }
    void corrupt_opened_randomness(unsigned player, std::uint32_t index) {
        corrupt_rand_.push_back({player, index});
    }

    bool commit(unsigned player, const BitVec& values) override {
        check_commit(player, values);
        Rng rng(derive_seed(randomness_seed_, player));
        auto& opens = openings_[player - 1];
        auto& digs = digests_[player - 1];
        opens.resize(n_);
        digs.resize(n_);
        BitVec payload(std::size_t{n_} * 256);
        for (std::uint32_t i = 0; i < n_; ++i) {
            for (auto& byte : opens[i]) byte = static_cast<std::uint8_t>(rng.word() & 0xff);
            digs[i] = commit_digest(player, i, values.get(i), opens[i]);
            pack_bytes(payload, std::size_t{i} * 256, digs[i].data(), 32);
        }
        if (!channel_.broadcast(player, "commit_" + label_, payload)) return false;
        slot_for(player) = values;
        return true;
    }

    std::optional<Reveal> reveal(std::uint32_t subset_size) override {
        require_all_committed();
        auto subset = draw_subset(subset_size);
        if (!subset) return std::nullopt;
        Reveal out;
        out.subset = std::move(*subset);
        for (unsigned p = 1; p <= player_count(); ++p) {
            // Opening payload: per subset position, the bit followed by the
            // 256 randomness bits.
            BitVec payload(out.subset.size() * 257);
            BitVec restricted(out.subset.size());
            for (std::size_t k = 0; k < out.subset.size(); ++k) {
                const std::uint32_t i = out.subset[k];
                bool bit = committed_[p - 1]->get(i);
                std::array<std::uint8_t, 32> rand = openings_[p - 1][i];
                if (is_marked(corrupt_bit_, p, i)) bit = !bit;
                if (is_marked(corrupt_rand_, p, i)) rand.fill(0);
                payload.set(k * 257, bit);
                pack_bytes(payload, k * 257 + 1, rand.data(), 32);
                restricted.set(k, bit);
            }
            if (!channel_.broadcast(p, "reveal_" + label_, payload)) return std::nullopt;
            // Every player checks every opening against the committed
            // digests; any mismatch kills the session.
            for (std::size_t k = 0; k < out.subset.size(); ++k) {
                const std::uint32_t i = out.subset[k];
                std::array<std::uint8_t, 32> rand{};
                for (unsigned byte = 0; byte < 32; ++byte) {
                    std::uint8_t v = 0;
                    for (unsigned b = 0; b < 8; ++b) {
                        v |= static_cast<std::uint8_t>(payload.get(k * 257 + 1 + 8 * byte + b)) << b;
                    }
                    rand[byte] = v;
                }
                const auto expect = commit_digest(p, i, restricted.get(k), rand);
                if (expect != digests_[p - 1][i]) return std::nullopt;
            }
            out.values.push_back(std::move(restricted));
        }
        return out;
    }

private:
    static bool is_marked(const std::vector<std::pair<unsigned, std::uint32_t>>& marks,
                          unsigned player, std::uint32_t index) {
        for (const auto& m : marks) {
            if (m.first == player && m.second == index) return true;
        }
        return false;
    }

    std::uint64_t randomness_seed_;
    std::vector<std::vector<std::array<std::uint8_t, 32>>> openings_;
    std::vector<std::vector<std::array<std::uint8_t, 32>>> digests_;
    std::vector<std::pair<unsigned, std::uint32_t>> corrupt_bit_;
    std::vector<std::pair<unsigned, std::uint32_t>> corrupt_rand_;
};

} // namespace qline
