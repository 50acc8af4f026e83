#pragma once

// Dense state-vector simulator specialised to the gate set the protocol
// uses: preparing |+>-type states, quarter-turn phase rotations about Z,
// CNOT, and destructive single-qubit measurement in the Hadamard or
// circular basis.
//
// Conventions used throughout:
//  - Phase rotations are powers of Z in quarter turns. A rotation with
//    quarter index q multiplies the |1> amplitude of the target qubit by
//    i^q, so q = 0,1,2,3 covers I, S, Z, S·Z (i.e. exponents 0, 1/2, 1,
//    3/2 of Z).
//  - Basis 0 is the Hadamard basis {(|0>±|1>)/√2}; basis 1 is the circular
//    basis {(|0>±i|1>)/√2}.
//  - Measurement outcomes are labeled so that the |0>+|1> state gives 0 and
//    |0>-|1> gives 1 in the Hadamard basis, while |0>-i|1> gives 0 and
//    |0>+i|1> gives 1 in the circular basis. Equivalently, the outcome-w
//    eigenvector of basis β is (|0> + i^κ |1>)/√2 with κ = -(2w+β) mod 4.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rng.hpp"

namespace qline {

// A quarter-turn phase exponent: an element of Z4, written b + 2v where b
// is the odd/half-turn bit and v the half-vs-full bit. (b, v) are exactly
// the two uniform bits each party samples in a session.
struct PhaseExponent {
    std::uint8_t quarter = 0; // in {0,1,2,3}

    PhaseExponent() = default;
    explicit PhaseExponent(unsigned q) : quarter(static_cast<std::uint8_t>(q & 3)) {}
    static PhaseExponent from_bits(bool b, bool v) {
        return PhaseExponent(static_cast<unsigned>(b) + 2u * static_cast<unsigned>(v));
    }

    bool half_bit() const { return quarter & 1; }   // b
    bool full_bit() const { return (quarter >> 1) & 1; } // v

    PhaseExponent operator+(PhaseExponent o) const { return PhaseExponent(quarter + o.quarter); }

    // i^quarter as a complex number.
    std::complex<double> phase() const {
        switch (quarter) {
            case 0: return {1.0, 0.0};
            case 1: return {0.0, 1.0};
            case 2: return {-1.0, 0.0};
            default: return {0.0, -1.0};
        }
    }
};

enum class Basis : std::uint8_t { hadamard = 0, circular = 1 };

// Quarter index κ of the outcome-w eigenvector (|0> + i^κ |1>)/√2 of the
// given basis, under the outcome labeling described at the top.
inline unsigned eigenvector_quarter(Basis basis, bool outcome) {
    const unsigned beta = static_cast<unsigned>(basis);
    const unsigned w = outcome ? 1u : 0u;
    return (4u - (2u * w + beta)) & 3u; // -(2w+β) mod 4
}

class QuantumRegister {
public:
    static constexpr unsigned kMaxQubits = 24;

    QuantumRegister() = default;

    unsigned qubit_count() const { return qubits_; }
    const std::vector<std::complex<double>>& amplitudes() const { return amp_; }

    // Reset to the single-qubit state (|0> + i^q |1>)/√2.
    void prepare_plus(PhaseExponent q) {
        qubits_ = 1;
        amp_.assign(2, {0.0, 0.0});
        const double r = 1.0 / std::sqrt(2.0);
        amp_[0] = {r, 0.0};
        amp_[1] = q.phase() * r;
    }

    // Append k fresh qubits in |0>. New qubits take the next indices; the
    // amplitude array index uses qubit i as bit i.
    void append_zero_qubits(unsigned k) {
        if (qubits_ + k > kMaxQubits) {
            throw std::invalid_argument("QuantumRegister: qubit budget exceeded");
        }
        if (qubits_ == 0 && amp_.empty()) amp_.assign(1, {1.0, 0.0});
        qubits_ += k;
        amp_.resize(std::size_t{1} << qubits_, {0.0, 0.0});
    }

    // Z^(q/2 turns) on one qubit: multiply every |1>-component by i^q.
    void apply_phase(unsigned qubit, PhaseExponent q) {
        check_qubit(qubit);
        if (q.quarter == 0) return;
        const std::complex<double> ph = q.phase();
        const std::size_t mask = std::size_t{1} << qubit;
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if (i & mask) amp_[i] *= ph;
        }
    }

    // Arbitrary single-qubit gate, row-major {u00, u01, u10, u11}; the
    // caller is responsible for supplying a unitary matrix.
    void apply_single_qubit(unsigned qubit, const std::array<std::complex<double>, 4>& u) {
        check_qubit(qubit);
        const std::size_t mask = std::size_t{1} << qubit;
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if (i & mask) continue;
            const std::complex<double> a0 = amp_[i];
            const std::complex<double> a1 = amp_[i | mask];
            amp_[i] = u[0] * a0 + u[1] * a1;
            amp_[i | mask] = u[2] * a0 + u[3] * a1;
        }
    }

    void apply_cnot(unsigned control, unsigned target) {
        check_qubit(control);
        check_qubit(target);
        if (control == target) throw std::invalid_argument("cnot: control equals target");
        const std::size_t cmask = std::size_t{1} << control;
        const std::size_t tmask = std::size_t{1} << target;
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if ((i & cmask) && !(i & tmask)) std::swap(amp_[i], amp_[i | tmask]);
        }
    }

    // Probability of reading `outcome` when measuring `qubit` in `basis`,
    // without disturbing the state.
    double outcome_probability(unsigned qubit, Basis basis, bool outcome) const {
        check_qubit(qubit);
        const unsigned kappa = eigenvector_quarter(basis, outcome);
        const std::complex<double> conj_ph = std::conj(PhaseExponent(kappa).phase());
        const std::size_t mask = std::size_t{1} << qubit;
        double p = 0.0;
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if (i & mask) continue;
            // Project onto (|0> + i^κ |1>)/√2 on this qubit.
            const std::complex<double> proj = (amp_[i] + conj_ph * amp_[i | mask]) / std::sqrt(2.0);
            p += std::norm(proj);
        }
        return p;
    }

    // Collapse `qubit` to the eigenvector of (basis, outcome), leaving the
    // qubit in place (the protocol re-uses collapsed carriers). Returns the
    // pre-collapse probability of that outcome.
    double collapse(unsigned qubit, Basis basis, bool outcome) {
        check_qubit(qubit);
        const unsigned kappa = eigenvector_quarter(basis, outcome);
        const std::complex<double> ph = PhaseExponent(kappa).phase();
        const std::complex<double> conj_ph = std::conj(ph);
        const std::size_t mask = std::size_t{1} << qubit;
        const double r = 1.0 / std::sqrt(2.0);
        double p = 0.0;
        for (std::size_t i = 0; i < amp_.size(); ++i) {
            if (i & mask) continue;
            const std::complex<double> proj = (amp_[i] + conj_ph * amp_[i | mask]) * r;
            p += std::norm(proj);
            amp_[i] = proj * r;
            amp_[i | mask] = proj * ph * r;
        }
        if (p <= 0.0) {
            throw std::logic_error("QuantumRegister::collapse: zero-probability branch");
        }
        const double scale = 1.0 / std::sqrt(p);
        for (auto& a : amp_) a *= scale;
        return p;
    }

    // Sample a measurement of `qubit` in `basis` and collapse accordingly.
    bool measure(unsigned qubit, Basis basis, Rng& rng) {
        const double p0 = outcome_probability(qubit, basis, false);
        const bool outcome = !(rng.uniform() < p0);
        collapse(qubit, basis, outcome);
        return outcome;
    }

    // Phase-flip noise: apply Z (two quarter turns) with probability mu.
    void apply_phase_flip_noise(unsigned qubit, double mu, Rng& rng) {
        if (mu < 0.0 || mu > 1.0) throw std::invalid_argument("noise probability out of range");
        if (mu > 0.0 && rng.uniform() < mu) apply_phase(qubit, PhaseExponent(2));
    }

private:
    void check_qubit(unsigned q) const {
        if (q >= qubits_) throw std::out_of_range("QuantumRegister: qubit index out of range");
    }

    unsigned qubits_ = 0;
    std::vector<std::complex<double>> amp_;
};

} // namespace qline
