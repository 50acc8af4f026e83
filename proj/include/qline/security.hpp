#pragma once

// Closed-form evaluation of the protocol's security and robustness bounds,
// and the two solvers that invert them: the largest share length a session
// can support at a target distinguishing advantage, and the smallest round
// count whose expected session shape supports a requested share length.
//
// Everything here is a pure function of its inputs; bound components are
// returned individually so reports can show them next to empirical values,
// and regimes where a bound degenerates (no margin, no smoothing, exponent
// on the wrong side) are flagged rather than silently clamped.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>

#include "math.hpp"

namespace qline {

// Session shape and rates a bound evaluation runs on. Counts may be a real
// session's realized values or an expected shape from the planner; the
// observed error fraction defaults to the configured noise so expected-value
// evaluations and measured evaluations share one code path.
struct BoundInputs {
    std::uint64_t rounds = 0;       // qubits sent
    std::uint64_t sifted = 0;       // conclusive rounds
    std::uint64_t key_rounds = 0;   // block length after the check set is removed
    std::uint64_t checked = 0;      // conclusive check rounds actually compared
    std::uint64_t check_drawn = 0;  // check positions drawn by the coin flip
    double delta = 0.0;             // estimation abort threshold
    double nu = 0.0;                // correction margin on top of delta
    double noise = 0.0;             // physical per-round flip probability
    double observed_q = std::numeric_limits<double>::quiet_NaN(); // NaN: use noise
    std::uint64_t eta = 0;          // correctness hash length
    std::uint64_t chi = 0;          // syndrome bits leaked by correction
    std::uint64_t key_length = 0;   // share length
    std::uint64_t honest_count = 2;
    double p_ec = 0.0;              // decoder failure rate, measured or configured

    double q() const { return std::isnan(observed_q) ? noise : observed_q; }

    void validate() const {
        if (!(delta >= 0.0 && delta <= 1.0) || !(nu >= 0.0 && nu <= 1.0) ||
            !(noise >= 0.0 && noise <= 1.0) || !(p_ec >= 0.0 && p_ec <= 1.0)) {
            throw std::invalid_argument("bounds: probabilities must lie in [0, 1]");
        }
        if (!std::isnan(observed_q) && !(observed_q >= 0.0 && observed_q <= 1.0)) {
            throw std::invalid_argument("bounds: observed error fraction outside [0, 1]");
        }
        if (!(delta + nu < 0.5)) {
            throw std::invalid_argument("bounds: delta + nu must stay below one half");
        }
        if (honest_count < 2) {
            throw std::invalid_argument("bounds: fewer than two honest players");
        }
    }
};

// Components of the honest-abort (robustness) bound: too few conclusive
// check rounds, an estimation overshoot, residual errors beyond the
// correction margin, and the decoder's own failure rate.
struct AbortBound {
    double p1 = 0.0;
    double p2 = 0.0;
    double p3 = 0.0;
    double p_ec = 0.0;
    double total = 0.0;
    bool estimation_vacuous = false;  // noise >= delta: no gap to estimate into
    bool correction_vacuous = false;  // noise >= q + nu: no correction margin
};

inline AbortBound abort_bound(const BoundInputs& in) {
    in.validate();
    if (in.rounds == 0 || in.check_drawn == 0 || in.check_drawn > in.rounds) {
        throw std::invalid_argument("abort_bound: need 0 < check_drawn <= rounds");
    }
    AbortBound out;
    const auto tau_prime = static_cast<double>(in.check_drawn);
    const auto rest = static_cast<double>(in.rounds - in.check_drawn);
    out.p1 = std::exp(-tau_prime / 8.0) + std::exp(-rest / 8.0);

    const double est_gap = in.delta - in.noise;
    if (est_gap > 0.0) {
        out.p2 = std::exp(-2.0 * static_cast<double>(in.checked) * est_gap * est_gap);
    } else {
        out.p2 = 1.0;
        out.estimation_vacuous = true;
    }

    const double cor_gap = in.q() + in.nu - in.noise;
    if (cor_gap > 0.0) {
        out.p3 = std::exp(-2.0 * static_cast<double>(in.key_rounds) * cor_gap * cor_gap);
    } else {
        out.p3 = 1.0;
        out.correction_vacuous = true;
    }

    out.p_ec = in.p_ec;
    out.total = out.p1 + out.p2 + out.p3 + out.p_ec;
    return out;
}

// The per-pair secrecy bound: a smoothing term governed by the check-set
// size and the margin nu, plus a hashing term whose exponent weighs the
// block's min-entropy against everything announced about it.
struct KeyEpsilon {
    double smoothing = 0.0;
    double hashing = 0.0;
    double value = 0.0;
    bool smoothing_vacuous = false;  // nu == 0: the smoothing term is 2
    bool key_vacuous = false;        // exponent >= 0: the hashing term is >= 1/2
};

inline KeyEpsilon eps_qkd_prime(const BoundInputs& in) {
    in.validate();
    if (in.key_rounds == 0 || in.sifted == 0 || in.checked == 0) {
        throw std::invalid_argument("eps_qkd_prime: block, sifted and check counts must be positive");
    }
    KeyEpsilon out;
    const auto m = static_cast<double>(in.key_rounds);
    const auto l = static_cast<double>(in.sifted);
    const auto tau = static_cast<double>(in.checked);
    const double coeff = m * tau * tau / (l * (tau + 1.0));
    out.smoothing = 2.0 * std::exp(-coeff * in.nu * in.nu);
    out.smoothing_vacuous = in.nu == 0.0;

    const double exponent = -m * (1.0 - binary_entropy(in.delta + in.nu)) +
                            static_cast<double>(in.eta) + static_cast<double>(in.chi) +
                            static_cast<double>(in.key_length);
    out.hashing = 0.5 * std::exp2(0.5 * exponent);
    out.key_vacuous = exponent >= 0.0;

    out.value = out.smoothing + out.hashing;
    return out;
}

// Total advantage against the shared secret: the correctness failure plus
// one secrecy term per honest player beyond the first.
inline double eps_total(std::uint64_t honest_count, double eps_prime_value, std::uint64_t eta) {
    if (honest_count < 2) throw std::invalid_argument("eps_total: fewer than two honest players");
    return std::exp2(-static_cast<double>(eta)) +
           static_cast<double>(honest_count - 1) * eps_prime_value;
}

inline double eps_total(const BoundInputs& in) {
    return eps_total(in.honest_count, eps_qkd_prime(in).value, in.eta);
}

// Syndrome-length estimate when no concrete code is configured: the
// entropy of the correction rate with a fixed 20% margin, capped at the
// block length. With the default code configuration this coincides with
// the syndrome length of the code the session would actually build.
inline std::uint64_t chi_fallback(std::uint64_t key_rounds, double q, double nu) {
    const double rate = q + nu;
    if (rate < 0.0 || rate > 0.5) throw std::invalid_argument("chi_fallback: rate outside [0, 0.5]");
    const double raw = static_cast<double>(key_rounds) * binary_entropy(rate) * 1.2;
    const auto chi = static_cast<std::uint64_t>(std::llround(raw));
    return std::min(chi, key_rounds);
}

// 64-bit twin of the code family's syndrome sizing, for planner blocks that
// may exceed the concrete code constructor's index range. Same arithmetic.
inline std::uint64_t chi_for_block(std::uint64_t key_rounds, double rate, double overhead) {
    if (rate < 0.0 || rate > 0.5) throw std::invalid_argument("chi_for_block: rate outside [0, 0.5]");
    if (overhead < 0.0) throw std::invalid_argument("chi_for_block: negative overhead");
    const double raw = static_cast<double>(key_rounds) * binary_entropy(rate) * (1.0 + overhead);
    const auto chi = static_cast<std::uint64_t>(std::llround(raw));
    return std::min(chi, key_rounds);
}

// Largest share length whose total advantage stays within `target`, or
// nullopt when even a single-bit share does not fit. The key-length field
// of `in` is ignored. A target of 1 or more leaves only the structural
// constraint that the share be shorter than the block.
inline std::optional<std::uint64_t> solve_key_length(BoundInputs in, double target) {
    in.validate();
    if (in.key_rounds < 2) return std::nullopt;
    const std::uint64_t cap = in.key_rounds - 1;
    if (target >= 1.0) return cap;
    if (!(target > 0.0)) throw std::invalid_argument("solve_key_length: target must be positive");

    const auto fits = [&](std::uint64_t k) {
        in.key_length = k;
        return eps_total(in) <= target;
    };
    if (!fits(1)) return std::nullopt;
    if (fits(cap)) return cap;
    // Largest k with fits(k): fits is monotone (the bound only grows in k).
    std::uint64_t lo = 1, hi = cap; // fits(lo), !fits(hi)
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (fits(mid) ? lo : hi) = mid;
    }
    return lo;
}

// Expected session shape chosen by the round-count planner, along with the
// bound values it was accepted under. Counts use the expected halves: half
// the rounds sift through, half the drawn check positions survive.
struct RoundCountPlan {
    std::uint64_t rounds = 0;
    std::uint64_t check_drawn = 0;
    std::uint64_t sifted = 0;
    std::uint64_t checked = 0;
    std::uint64_t key_rounds = 0;
    std::uint64_t chi = 0;
    double eps_value = 0.0;  // total advantage at the planned shape
    AbortBound abort;        // honest-abort slack at the planned shape
};

// Smallest round count (to 1% precision) whose expected shape supports a
// share of `key_length` bits within `target` total advantage. The check
// budget is scanned over powers of two up to half the rounds; the noise
// level does not move the secrecy bound and enters only the abort report.
inline std::optional<RoundCountPlan> solve_round_count(std::uint64_t key_length, double target,
                                                       double delta, double nu, double mu,
                                                       std::uint64_t eta, double overhead,
                                                       std::uint64_t honest_count) {
    if (key_length == 0) throw std::invalid_argument("solve_round_count: empty share");
    const double budget =
        (target - std::exp2(-static_cast<double>(eta))) / static_cast<double>(honest_count - 1);
    if (!(budget > 0.0)) return std::nullopt;  // hash tag alone exhausts the target

    BoundInputs shape;
    shape.delta = delta;
    shape.nu = nu;
    shape.noise = mu;
    shape.eta = eta;
    shape.key_length = key_length;
    shape.honest_count = honest_count;
    shape.validate();

    // Best secrecy value over the check-budget scan at a given round count.
    const auto best_shape = [&](std::uint64_t n) -> std::optional<RoundCountPlan> {
        std::optional<RoundCountPlan> best;
        for (std::uint64_t tp = 64; 2 * tp <= n; tp *= 2) {
            shape.rounds = n;
            shape.check_drawn = tp;
            shape.sifted = n / 2;
            shape.checked = tp / 2;
            shape.key_rounds = (n - tp) / 2;
            if (shape.key_rounds <= key_length || shape.checked == 0) continue;
            shape.chi = chi_for_block(shape.key_rounds, delta + nu, overhead);
            const KeyEpsilon eps = eps_qkd_prime(shape);
            if (eps.value > budget) continue;
            RoundCountPlan plan;
            plan.rounds = n;
            plan.check_drawn = tp;
            plan.sifted = shape.sifted;
            plan.checked = shape.checked;
            plan.key_rounds = shape.key_rounds;
            plan.chi = shape.chi;
            plan.eps_value = eps_total(honest_count, eps.value, eta);
            plan.abort = abort_bound(shape);
            if (!best || plan.eps_value < best->eps_value) best = plan;
        }
        return best;
    };

    // Exponential growth to bracket, then a 1% bisection.
    std::uint64_t n = 128;
    std::optional<RoundCountPlan> at_hi;
    while (n <= (std::uint64_t{1} << 40)) {
        at_hi = best_shape(n);
        if (at_hi) break;
        n *= 2;
    }
    if (!at_hi) return std::nullopt;
    std::uint64_t lo = n / 2, hi = n;  // lo infeasible (or below the scan floor)
    while (hi > lo + lo / 100) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (auto at_mid = best_shape(mid)) {
            hi = mid;
            at_hi = std::move(at_mid);
        } else {
            lo = mid;
        }
    }
    return at_hi;
}

} // namespace qline
