#pragma once

// Authenticated classical channel shared by all players, plus the two
// broadcast-with-delayed-subset-reveal sessions the protocol runs on it.
//
// The channel is authenticated but not private and not robust: an
// adversary cannot forge a sender, but it can suppress an entire stage
// (blocking) or abort a coin flip. Suppression is surfaced to the caller
// as a failed broadcast, which the session layer turns into an abort.
//
// Everything a player announces lands in an append-only transcript, which
// doubles as the replay/inspection record for the CLI trace command.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "bitvec.hpp"
#include "rng.hpp"

namespace qline {

struct TranscriptEntry {
    unsigned sender = 0; // 1-based player number; 0 marks the channel itself
    std::string stage;
    BitVec payload;
};

class Transcript {
public:
    void append(unsigned sender, std::string stage, BitVec payload) {
        entries_.push_back({sender, std::move(stage), std::move(payload)});
    }

    const std::vector<TranscriptEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    // One line per entry: "sender stage bit-length hex".
    std::string to_text() const {
        std::string out;
        for (const auto& e : entries_) {
            out += std::to_string(e.sender);
            out += ' ';
            out += e.stage;
            out += ' ';
            out += std::to_string(e.payload.size());
            out += ' ';
            out += e.payload.empty() ? std::string("-") : e.payload.to_hex();
            out += '\n';
        }
        return out;
    }

private:
    std::vector<TranscriptEntry> entries_;
};

class Channel {
public:
    explicit Channel(std::uint64_t seed) : rng_(seed) {}

    Transcript& transcript() { return transcript_; }
    const Transcript& transcript() const { return transcript_; }

    // Adversary levers.
    void block_stage(const std::string& stage) { blocked_.insert(stage); }
    bool stage_blocked(const std::string& stage) const { return blocked_.count(stage) != 0; }
    void set_coin_abort(bool abort) { coin_abort_ = abort; }

    // Authenticated broadcast. Returns false when the stage is suppressed;
    // nothing is recorded in that case.
    bool broadcast(unsigned sender, const std::string& stage, const BitVec& payload) {
        if (stage_blocked(stage)) return false;
        transcript_.append(sender, stage, payload);
        return true;
    }

    // Multiparty coin flip with abort: every player learns the same uniform
    // bits, or the flip fails (adversarial abort / suppressed stage).
    std::optional<BitVec> coin_flip_bits(std::size_t n, const std::string& stage) {
        if (coin_abort_ || stage_blocked(stage)) return std::nullopt;
        BitVec bits = rng_.bits(n);
        transcript_.append(0, stage, bits);
        return bits;
    }

    // 64-bit variant used for seeding subset selection.
    std::optional<std::uint64_t> coin_flip_word(const std::string& stage) {
        auto bits = coin_flip_bits(64, stage);
        if (!bits) return std::nullopt;
        return bits->words()[0];
    }

private:
    Rng rng_;
    Transcript transcript_;
    std::unordered_set<std::string> blocked_;
    bool coin_abort_ = false;
};

// Result of a subset-broadcast session: the revealed subset (sorted) and,
// per player, the committed bits restricted to that subset in subset order.
struct Reveal {
    std::vector<std::uint32_t> subset;
    std::vector<BitVec> values; // index 0 holds player 1's bits
};

// Session interface: every player first commits a length-n bit vector;
// afterwards a jointly random subset of a requested size is drawn and all
// committed bits on that subset become public. Nothing about the committed
// vectors leaks before the reveal.
class SubsetBroadcast {
public:
    virtual ~SubsetBroadcast() = default;
    virtual bool commit(unsigned player, const BitVec& values) = 0;
    virtual std::optional<Reveal> reveal(std::uint32_t subset_size) = 0;
};

// Shared bookkeeping for both session implementations: commitment slots,
// the joint subset draw, and restriction of a committed vector to a subset.
class SubsetBroadcastBase : public SubsetBroadcast {
public:
    SubsetBroadcastBase(Channel& channel, std::string label, std::uint32_t n, unsigned players)
        : channel_(channel), label_(std::move(label)), n_(n), committed_(players) {}

    std::uint32_t value_count() const { return n_; }
    unsigned player_count() const { return static_cast<unsigned>(committed_.size()); }

protected:
    std::optional<BitVec>& slot_for(unsigned player) {
        if (player < 1 || player > committed_.size()) {
            throw std::out_of_range("subset broadcast: bad player number");
        }
        return committed_[player - 1];
    }

    void check_commit(unsigned player, const BitVec& values) {
        if (slot_for(player).has_value()) {
            throw std::logic_error("subset broadcast: player committed twice");
        }
        if (values.size() != n_) throw std::invalid_argument("subset broadcast: wrong vector length");
    }

    void require_all_committed() const {
        for (const auto& c : committed_) {
            if (!c.has_value()) throw std::logic_error("subset broadcast: reveal before all commits");
        }
    }

    std::optional<std::vector<std::uint32_t>> draw_subset(std::uint32_t subset_size) {
        const auto seed = channel_.coin_flip_word("subset_" + label_);
        if (!seed) return std::nullopt;
        return sample_subset(*seed, n_, subset_size);
    }

    BitVec restrict_to(unsigned player, const std::vector<std::uint32_t>& subset) const {
        const BitVec& full = *committed_[player - 1];
        BitVec out(subset.size());
        for (std::size_t k = 0; k < subset.size(); ++k) out.set(k, full.get(subset[k]));
        return out;
    }

    Channel& channel_;
    std::string label_;
    std::uint32_t n_;
    std::vector<std::optional<BitVec>> committed_;
};

// Ideal-functionality model: commitments are held by a trusted box, so the
// transcript records only that each player committed (empty payload).
class IdealSubsetBroadcast final : public SubsetBroadcastBase {
public:
    using SubsetBroadcastBase::SubsetBroadcastBase;

    bool commit(unsigned player, const BitVec& values) override {
        check_commit(player, values);
        if (!channel_.broadcast(player, "commit_" + label_, BitVec())) return false;
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
            BitVec restricted = restrict_to(p, out.subset);
            if (!channel_.broadcast(p, "reveal_" + label_, restricted)) return std::nullopt;
            out.values.push_back(std::move(restricted));
        }
        return out;
    }
};

} // namespace qline
