#pragma once

// Session orchestration: state distribution over the quantum line (either
// variant), the two announcement sessions, sifting, error estimation,
// syndrome correction, the correctness check and privacy amplification.
// A session is a deterministic state machine over its seed; attack and
// misbehaviour hooks sit at the wire segments and the classical stages.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "adversary.hpp"
#include "bitvec.hpp"
#include "channel.hpp"
#include "coding.hpp"
#include "commitment.hpp"
#include "params.hpp"
#include "quantum.hpp"
#include "rng.hpp"
#include "toeplitz.hpp"

namespace qline {

enum class AbortStage : std::uint8_t { none = 0, channel, sifting, estimation, correctness };

inline const char* abort_stage_name(AbortStage s) {
    switch (s) {
        case AbortStage::none: return "none";
        case AbortStage::channel: return "channel";
        case AbortStage::sifting: return "sifting";
        case AbortStage::estimation: return "estimation";
        case AbortStage::correctness: return "correctness";
    }
    return "unknown";
}

struct SessionStats {
    std::size_t inconclusive = 0;  // rounds whose basis bits XOR to one
    std::size_t sifted = 0;        // conclusive rounds kept after sifting
    std::size_t checked = 0;       // conclusive check rounds actually compared
    double qber = std::numeric_limits<double>::quiet_NaN();
    std::size_t key_rounds = 0;    // block length fed to correction and hashing
    std::size_t syndrome_bits = 0; // syndrome length of the session code
    bool decode_failed = false;    // decoder gave up; errors flow to the check
    AbortStage abort = AbortStage::none;
};

struct PlayerRecord {
    std::size_t id = 0;
    BitVec basis;    // chosen (or offset-compensated) basis bits, length N
    BitVec value;    // chosen rotation bits or measured outcomes, length N
    BitVec working;  // key-block values once estimation has passed
    std::optional<BitVec> share;
};

struct SessionOutcome {
    SessionStats stats;
    // Indexed by player id; corrupted players and aborted sessions hold
    // nullopt, so "all shares absent" and "abort recorded" coincide.
    std::vector<std::optional<BitVec>> shares;
    Transcript transcript;

    bool success() const { return stats.abort == AbortStage::none; }
};

// ---- exact per-round oracles -------------------------------------------

// Outcome distribution {P(0), P(1)} of the measuring node in a
// prepare-measure round: `bases` holds every player's basis bit, `values`
// the first J-1 players' rotation bits.
inline std::array<double, 2> pm_outcome_distribution(const std::vector<bool>& bases,
                                                     const std::vector<bool>& values) {
    if (bases.size() < 2 || values.size() + 1 != bases.size()) {
        throw std::invalid_argument("pm_outcome_distribution: need J bases and J-1 values");
    }
    QuantumRegister reg;
    reg.prepare_plus(PhaseExponent::from_bits(bases[0], values[0]));
    for (std::size_t j = 1; j + 1 < bases.size(); ++j) {
        reg.apply_phase(0, PhaseExponent::from_bits(bases[j], values[j]));
    }
    const Basis basis = bases.back() ? Basis::circular : Basis::hadamard;
    return {reg.outcome_probability(0, basis, false), reg.outcome_probability(0, basis, true)};
}

// Probability that an entangled round measured with `bases` yields exactly
// `values`, by walking the measurement chain.
inline double eb_joint_probability(const std::vector<bool>& bases, const std::vector<bool>& values) {
    const std::size_t players = bases.size();
    if (players < 2 || values.size() != players) {
        throw std::invalid_argument("eb_joint_probability: need matching bases and values");
    }
    if (players > QuantumRegister::kMaxQubits) {
        throw std::invalid_argument("eb_joint_probability: too many players for the register");
    }
    QuantumRegister reg;
    reg.prepare_plus(PhaseExponent(0));
    reg.append_zero_qubits(static_cast<unsigned>(players - 1));
    const auto carrier = static_cast<unsigned>(players - 1);
    reg.apply_cnot(0, carrier);
    for (unsigned j = 1; j < carrier; ++j) reg.apply_cnot(carrier, j);
    double p = 1.0;
    for (unsigned j = 0; j < players; ++j) {
        const Basis basis = bases[j] ? Basis::circular : Basis::hadamard;
        const double pj = reg.outcome_probability(j, basis, values[j]);
        if (pj < 1e-12) return 0.0;
        p *= pj;
        reg.collapse(j, basis, values[j]);
    }
    return p;
}

// The pass condition of the correctness check as a standalone predicate:
// hash every input and test whether the outputs XOR to zero.
inline bool linear_hash_check(const ToeplitzHash& f, const std::vector<BitVec>& inputs) {
    if (inputs.empty()) throw std::invalid_argument("linear_hash_check: no inputs");
    BitVec parity = f.eval(inputs[0]);
    for (std::size_t k = 1; k < inputs.size(); ++k) parity ^= f.eval(inputs[k]);
    return parity.weight() == 0;
}

// ---- the session state machine -------------------------------------------

class Session {
public:
    Session(ProtocolParams params, Variant variant, AttackSpec attack, std::uint64_t seed)
        : params_(std::move(params)),
          variant_(variant),
          attack_(std::move(attack)),
          seed_(seed),
          channel_(derive_seed(seed, stream::channel)),
          noise_rng_(derive_seed(seed, stream::noise)),
          attack_rng_(derive_seed(seed, stream::attack)) {
        params_.validate(variant_);
        attack_.validate(params_);
        player_rng_.reserve(params_.players);
        for (std::size_t j = 0; j < params_.players; ++j) {
            player_rng_.emplace_back(derive_seed(seed, j + 1));
        }
        if (!attack_.blocked_stage.empty()) channel_.block_stage(attack_.blocked_stage);
        channel_.set_coin_abort(attack_.coin_abort);
    }

    // ---- stages, in protocol order ----

    // Send N qubits down the line and record everyone's bits.
    void distribute() {
        require_phase(0);
        const std::size_t players = params_.players;
        const std::size_t n_rounds = params_.rounds;
        records_.assign(players, PlayerRecord{});
        for (std::size_t j = 0; j < players; ++j) {
            records_[j].id = j;
            // Each player draws its basis string first, then (when it
            // chooses rotations rather than measuring) its value string.
            records_[j].basis = player_rng_[j].bits(n_rounds);
            if (variant_ == Variant::prepare_measure && j + 1 < players) {
                records_[j].value = player_rng_[j].bits(n_rounds);
            } else {
                records_[j].value = BitVec(n_rounds);
            }
        }
        if (attack_.kind == AttackKind::measurement_offset) {
            offsets_.emplace();
            offsets_->basis = attack_rng_.bits(n_rounds);
            offsets_->value = attack_rng_.bits(n_rounds);
        }
        if (attack_.kind == AttackKind::intercept_resend) {
            eve_.emplace();
            eve_->bases = BitVec(n_rounds);
            eve_->outcomes = BitVec(n_rounds);
        }
        for (std::size_t n = 0; n < n_rounds; ++n) {
            if (variant_ == Variant::prepare_measure) {
                pm_round(n);
            } else {
                eb_round(n);
            }
        }
        if (attack_.kind == AttackKind::measurement_offset) relabel_measuring_node();
        phase_ = 1;
    }

    // Two announcement sessions: commit basis strings, commit value
    // strings, reveal all bases, then reveal values on a fresh subset.
    bool announce() {
        require_phase(1);
        const std::size_t players = params_.players;
        auto basis_session = make_subset_session("b", stream::commit_basis);
        auto value_session = make_subset_session("v", stream::commit_value);

        // Announcements are fixed against the transcript as it stands when
        // the stage opens; nothing revealed later can influence them.
        std::vector<BitVec> commit_b(players);
        for (std::size_t j = 0; j < players; ++j) {
            const DishonestSpec* d = attack_.spec_for(j);
            AnnouncementView view{channel_.transcript(), records_[j].basis, records_[j].value};
            commit_b[j] = d ? dishonest_basis_announcement(*d, view) : records_[j].basis;
        }
        for (std::size_t j = 0; j < players; ++j) {
            if (!basis_session->commit(static_cast<unsigned>(j + 1), commit_b[j])) {
                return abort_channel();
            }
        }
        std::vector<BitVec> commit_v(players);
        for (std::size_t j = 0; j < players; ++j) {
            const DishonestSpec* d = attack_.spec_for(j);
            AnnouncementView view{channel_.transcript(), records_[j].basis, records_[j].value};
            commit_v[j] = d ? dishonest_value_announcement(*d, view) : records_[j].value;
        }
        for (std::size_t j = 0; j < players; ++j) {
            if (!value_session->commit(static_cast<unsigned>(j + 1), commit_v[j])) {
                return abort_channel();
            }
        }
        auto basis_reveal = basis_session->reveal(static_cast<std::uint32_t>(params_.rounds));
        if (!basis_reveal) return abort_channel();
        announced_b_ = std::move(basis_reveal->values);
        auto value_reveal = value_session->reveal(static_cast<std::uint32_t>(params_.tau_prime));
        if (!value_reveal) return abort_channel();
        check_subset_ = std::move(value_reveal->subset);
        announced_v_ = std::move(value_reveal->values);
        phase_ = 2;
        return true;
    }

    // Drop the rounds whose announced basis bits XOR to one; abort when
    // too few check positions survive for the estimate to mean anything.
    bool sift() {
        require_phase(2);
        const std::size_t n_rounds = params_.rounds;
        std::vector<bool> conclusive(n_rounds, false);
        live_.clear();
        for (std::size_t n = 0; n < n_rounds; ++n) {
            bool x = false;
            for (std::size_t j = 0; j < params_.players; ++j) x ^= announced_b_[j].get(n);
            if (!x) {
                conclusive[n] = true;
                live_.push_back(static_cast<std::uint32_t>(n));
            }
        }
        stats_.sifted = live_.size();
        stats_.inconclusive = n_rounds - live_.size();
        check_.clear();
        check_pos_.clear();
        for (std::size_t k = 0; k < check_subset_.size(); ++k) {
            if (conclusive[check_subset_[k]]) {
                check_.push_back(check_subset_[k]);
                check_pos_.push_back(static_cast<std::uint32_t>(k));
            }
        }
        stats_.checked = check_.size();
        if (4 * check_.size() < params_.tau_prime) {
            stats_.abort = AbortStage::sifting;
            return false;
        }
        phase_ = 3;
        return true;
    }

    // Compare announced values on the surviving check rounds, abort above
    // the threshold, then retire the check rounds from the key block.
    bool estimate() {
        require_phase(3);
        std::size_t errors = 0;
        for (std::size_t t = 0; t < check_.size(); ++t) {
            const std::uint32_t n = check_[t];
            const std::uint32_t k = check_pos_[t];
            unsigned sum = 0;
            for (std::size_t j = 0; j < params_.players; ++j) {
                sum += 2u * announced_v_[j].get(k) + announced_b_[j].get(n);
            }
            if ((sum & 3u) == 2u) ++errors;
        }
        stats_.qber = static_cast<double>(errors) / static_cast<double>(check_.size());
        if (static_cast<double>(errors) > params_.delta * static_cast<double>(check_.size())) {
            stats_.abort = AbortStage::estimation;
            return false;
        }
        std::vector<std::uint32_t> key_rounds;
        key_rounds.reserve(live_.size() - check_.size());
        std::set_difference(live_.begin(), live_.end(), check_.begin(), check_.end(),
                            std::back_inserter(key_rounds));
        live_ = std::move(key_rounds);
        stats_.key_rounds = live_.size();
        // The share must be strictly shorter than the block it is hashed
        // from; a session without that much material cannot continue.
        if (live_.size() <= params_.key_length) {
            stats_.abort = AbortStage::estimation;
            return false;
        }
        for (auto& rec : records_) {
            rec.working = BitVec(live_.size());
            for (std::size_t i = 0; i < live_.size(); ++i) {
                rec.working.set(i, rec.value.get(live_[i]));
            }
        }
        phase_ = 4;
        return true;
    }

    // Parity compensation from the announced bases, syndrome broadcast,
    // and syndrome decoding at the measuring node.
    bool correct() {
        require_phase(4);
        const std::size_t players = params_.players;
        const auto block = static_cast<std::uint32_t>(live_.size());
        code_.emplace(LinearCode::make_default(block, params_.correction_rate(), params_.code));
        stats_.syndrome_bits = code_->syndrome_length();
        BitVec& last = records_[players - 1].working;
        for (std::size_t i = 0; i < live_.size(); ++i) {
            unsigned bsum = 0;
            for (std::size_t j = 0; j < players; ++j) bsum += announced_b_[j].get(live_[i]);
            // Conclusive rounds have an even basis sum; its residue mod 4
            // is either 0 or 2, and the latter flips the measured value.
            if (bsum & 2u) last.flip(i);
        }
        announced_syndromes_.assign(players, BitVec(code_->syndrome_length()));
        BitVec total(code_->syndrome_length());
        for (std::size_t j = 0; j + 1 < players; ++j) {
            BitVec w = code_->syndrome(records_[j].working);
            if (const DishonestSpec* d = attack_.spec_for(j)) w = dishonest_syndrome(*d, w);
            if (!channel_.broadcast(static_cast<unsigned>(j + 1), "syndrome", w)) {
                return abort_channel();
            }
            announced_syndromes_[j] = w;
            total ^= announced_syndromes_[j];
        }
        BitVec own = code_->syndrome(last);
        if (attack_.announce_last_syndrome) {
            if (!channel_.broadcast(static_cast<unsigned>(players), "syndrome", own)) {
                return abort_channel();
            }
        }
        announced_syndromes_[players - 1] = own;
        total ^= own;
        if (auto err = code_->decode_error(total)) {
            last ^= *err;
        } else {
            stats_.decode_failed = true;  // leftover errors reach the check
        }
        phase_ = 5;
        return true;
    }

    // Coin-flip a hash seed, broadcast everyone's hash, pass on zero XOR.
    bool check_correctness() {
        require_phase(5);
        const std::size_t players = params_.players;
        const std::size_t block = live_.size();
        auto seed_bits =
            channel_.coin_flip_bits(ToeplitzHash::seed_length(block, params_.eta), "coin_cc");
        if (!seed_bits) return abort_channel();
        const ToeplitzHash f(block, params_.eta, std::move(*seed_bits));
        announced_checks_.assign(players, BitVec(params_.eta));
        BitVec parity(params_.eta);
        for (std::size_t j = 0; j < players; ++j) {
            BitVec c = f.eval(records_[j].working);
            if (const DishonestSpec* d = attack_.spec_for(j)) c = dishonest_check_value(*d, c);
            if (!channel_.broadcast(static_cast<unsigned>(j + 1), "check_cc", c)) {
                return abort_channel();
            }
            announced_checks_[j] = c;
            parity ^= announced_checks_[j];
        }
        if (parity.weight() != 0) {
            stats_.abort = AbortStage::correctness;
            return false;
        }
        phase_ = 6;
        return true;
    }

    // Coin-flip a second hash seed and compress every block to a share.
    bool amplify() {
        require_phase(6);
        const std::size_t block = live_.size();
        auto seed_bits = channel_.coin_flip_bits(
            ToeplitzHash::seed_length(block, params_.key_length), "coin_pa");
        if (!seed_bits) return abort_channel();
        const ToeplitzHash f(block, params_.key_length, std::move(*seed_bits));
        for (auto& rec : records_) rec.share = f.eval(rec.working);
        phase_ = 7;
        return true;
    }

    // Drive all stages and package the result.
    SessionOutcome run() {
        distribute();
        if (announce() && sift() && estimate() && correct() && check_correctness()) {
            amplify();
        }
        return outcome();
    }

    SessionOutcome outcome() const {
        SessionOutcome out;
        out.stats = stats_;
        out.transcript = channel_.transcript();
        out.shares.assign(params_.players, std::nullopt);
        if (stats_.abort == AbortStage::none && phase_ >= 7) {
            for (std::size_t j = 0; j < params_.players; ++j) {
                if (params_.is_honest(j)) out.shares[j] = records_[j].share;
            }
        }
        return out;
    }

    // ---- state inspection ----

    const ProtocolParams& params() const { return params_; }
    Variant variant() const { return variant_; }
    Channel& channel() { return channel_; }
    const Channel& channel() const { return channel_; }
    const std::vector<PlayerRecord>& records() const { return records_; }
    PlayerRecord& record(std::size_t j) { return records_.at(j); }
    const std::vector<BitVec>& announced_bases() const { return announced_b_; }
    const std::vector<BitVec>& announced_values() const { return announced_v_; }
    const std::vector<std::uint32_t>& check_subset() const { return check_subset_; }
    const std::vector<std::uint32_t>& live() const { return live_; }
    const std::vector<std::uint32_t>& check_set() const { return check_; }
    const std::vector<BitVec>& announced_syndromes() const { return announced_syndromes_; }
    const std::vector<BitVec>& announced_checks() const { return announced_checks_; }
    const LinearCode* code() const { return code_ ? &*code_ : nullptr; }
    const WireOffsets* offsets() const { return offsets_ ? &*offsets_ : nullptr; }
    const EveRecord* eve() const { return eve_ ? &*eve_ : nullptr; }
    const SessionStats& stats() const { return stats_; }

private:
    void require_phase(int expected) const {
        if (phase_ != expected) throw std::logic_error("session: stage called out of order");
        if (stats_.abort != AbortStage::none) {
            throw std::logic_error("session: stage called after abort");
        }
    }

    bool abort_channel() {
        stats_.abort = AbortStage::channel;
        return false;
    }

    std::unique_ptr<SubsetBroadcast> make_subset_session(const std::string& label,
                                                         std::uint64_t randomness_stream) {
        const auto n = static_cast<std::uint32_t>(params_.rounds);
        const auto players = static_cast<unsigned>(params_.players);
        if (params_.channel_mode == ChannelMode::commitment) {
            return std::make_unique<CommitRevealSubsetBroadcast>(
                channel_, label, n, players, derive_seed(seed_, randomness_stream));
        }
        return std::make_unique<IdealSubsetBroadcast>(channel_, label, n, players);
    }

    void attack_wire(QuantumRegister& reg, unsigned qubit, std::size_t n) {
        switch (attack_.kind) {
            case AttackKind::none:
                return;
            case AttackKind::phase_flip:
                if (attack_rng_.uniform() < attack_.rate) reg.apply_phase(qubit, PhaseExponent(2));
                return;
            case AttackKind::intercept_resend: {
                bool basis_bit = false;
                switch (attack_.policy) {
                    case BasisPolicy::uniform: basis_bit = attack_rng_.bit(); break;
                    case BasisPolicy::hadamard_only: basis_bit = false; break;
                    case BasisPolicy::circular_only: basis_bit = true; break;
                    case BasisPolicy::scripted: basis_bit = attack_.scripted_bases.get(n); break;
                }
                const Basis basis = basis_bit ? Basis::circular : Basis::hadamard;
                const bool outcome = reg.measure(qubit, basis, attack_rng_);
                eve_->bases.set(n, basis_bit);
                eve_->outcomes.set(n, outcome);
                return;
            }
            case AttackKind::custom_unitary:
                reg.apply_single_qubit(qubit, attack_.unitary);
                return;
            case AttackKind::measurement_offset:
                reg.apply_phase(qubit, PhaseExponent::from_bits(offsets_->basis.get(n),
                                                                offsets_->value.get(n)));
                return;
        }
    }

    void pm_round(std::size_t n) {
        const std::size_t players = params_.players;
        QuantumRegister reg;
        reg.prepare_plus(
            PhaseExponent::from_bits(records_[0].basis.get(n), records_[0].value.get(n)));
        for (std::size_t j = 1; j < players; ++j) {
            if (attack_.kind != AttackKind::none && attack_.link == j - 1) {
                attack_wire(reg, 0, n);
            }
            if (j + 1 < players) {
                reg.apply_phase(
                    0, PhaseExponent::from_bits(records_[j].basis.get(n), records_[j].value.get(n)));
            }
        }
        reg.apply_phase_flip_noise(0, params_.noise, noise_rng_);
        const Basis basis = records_[players - 1].basis.get(n) ? Basis::circular : Basis::hadamard;
        records_[players - 1].value.set(n, reg.measure(0, basis, player_rng_[players - 1]));
    }

    void eb_round(std::size_t n) {
        const std::size_t players = params_.players;
        QuantumRegister reg;
        reg.prepare_plus(PhaseExponent(0));
        reg.append_zero_qubits(static_cast<unsigned>(players - 1));
        // The source keeps qubit 0 and sends the carrier (the last qubit)
        // down the line; every intermediate node entangles a fresh qubit.
        const auto carrier = static_cast<unsigned>(players - 1);
        reg.apply_cnot(0, carrier);
        for (std::size_t j = 1; j < players; ++j) {
            if (attack_.kind != AttackKind::none && attack_.link == j - 1) {
                attack_wire(reg, carrier, n);
            }
            if (j + 1 < players) reg.apply_cnot(carrier, static_cast<unsigned>(j));
        }
        reg.apply_phase_flip_noise(carrier, params_.noise, noise_rng_);
        for (std::size_t j = 0; j < players; ++j) {
            const Basis basis = records_[j].basis.get(n) ? Basis::circular : Basis::hadamard;
            records_[j].value.set(
                n, reg.measure(static_cast<unsigned>(j), basis, player_rng_[j]));
        }
    }

    // Under the offset attack the measuring node, told the per-round
    // offsets, records the effective basis and the compensated value; on
    // conclusive rounds this restores the usual parity relation exactly.
    void relabel_measuring_node() {
        PlayerRecord& last = records_[params_.players - 1];
        for (std::size_t n = 0; n < params_.rounds; ++n) {
            const auto [basis_hat, value_hat] =
                apply_offset(last.basis.get(n), offsets_->basis.get(n), offsets_->value.get(n),
                             last.value.get(n));
            last.basis.set(n, basis_hat);
            last.value.set(n, value_hat ^ basis_hat);
        }
    }

    ProtocolParams params_;
    Variant variant_;
    AttackSpec attack_;
    std::uint64_t seed_;
    Channel channel_;
    Rng noise_rng_;
    Rng attack_rng_;
    std::vector<Rng> player_rng_;
    std::vector<PlayerRecord> records_;
    std::optional<WireOffsets> offsets_;
    std::optional<EveRecord> eve_;
    std::vector<BitVec> announced_b_;            // full basis strings, per player
    std::vector<BitVec> announced_v_;            // values on the check subset, per player
    std::vector<std::uint32_t> check_subset_;    // drawn check positions
    std::vector<std::uint32_t> live_;            // conclusive, later key, round indices
    std::vector<std::uint32_t> check_;           // conclusive check rounds
    std::vector<std::uint32_t> check_pos_;       // their positions inside the drawn subset
    std::vector<BitVec> announced_syndromes_;
    std::vector<BitVec> announced_checks_;
    std::optional<LinearCode> code_;
    SessionStats stats_;
    int phase_ = 0;
};

inline SessionOutcome run_session(const ProtocolParams& params, Variant variant,
                                  const AttackSpec& attack, std::uint64_t seed) {
    Session session(params, variant, attack, seed);
    return session.run();
}

} // namespace qline
