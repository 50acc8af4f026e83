#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <vector>

#include "qline/quantum.hpp"

using namespace qline;

namespace {

using C = std::complex<double>;
using Vec = std::vector<C>;
using Mat = std::vector<Vec>;

// Independent dense-matrix oracle. The library updates amplitudes in
// place with bit masks; here every operation is a literal matrix-vector
// product so the two implementations share no code path.

Mat identity(std::size_t n) {
    Mat m(n, Vec(n, C{0, 0}));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = 1.0;
    return m;
}

Mat kron(const Mat& a, const Mat& b) {
    const std::size_t ra = a.size(), ca = a[0].size();
    const std::size_t rb = b.size(), cb = b[0].size();
    Mat m(ra * rb, Vec(ca * cb, C{0, 0}));
    for (std::size_t i = 0; i < ra; ++i)
        for (std::size_t j = 0; j < ca; ++j)
            for (std::size_t k = 0; k < rb; ++k)
                for (std::size_t l = 0; l < cb; ++l) m[i * rb + k][j * cb + l] = a[i][j] * b[k][l];
    return m;
}

Vec matvec(const Mat& m, const Vec& v) {
    Vec out(m.size(), C{0, 0});
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
    return out;
}

C ipow(unsigned q) {
    switch (q & 3) {
        case 0: return {1, 0};
        case 1: return {0, 1};
        case 2: return {-1, 0};
        default: return {0, -1};
    }
}

// Single-qubit operator embedded at qubit k of an n-qubit register, with
// qubit 0 the least significant amplitude-index bit.
Mat embed(const Mat& u, unsigned k, unsigned n) {
    return kron(identity(std::size_t{1} << (n - 1 - k)), kron(u, identity(std::size_t{1} << k)));
}

Mat phase_gate(unsigned q) { return {{C{1, 0}, C{0, 0}}, {C{0, 0}, ipow(q)}}; }

// Projector onto the outcome-w eigenvector of basis beta.
Mat basis_projector(unsigned beta, bool w) {
    const unsigned kappa = (4u - (2u * (w ? 1u : 0u) + beta)) & 3u;
    const C a = 1.0 / std::sqrt(2.0);
    const C b = ipow(kappa) / std::sqrt(2.0);
    return {{std::conj(a) * a, std::conj(b) * a}, {std::conj(a) * b, std::conj(b) * b}};
}

Mat cnot_matrix(unsigned control, unsigned target, unsigned n) {
    const std::size_t dim = std::size_t{1} << n;
    Mat m(dim, Vec(dim, C{0, 0}));
    for (std::size_t j = 0; j < dim; ++j) {
        const std::size_t i = (j >> control) & 1 ? j ^ (std::size_t{1} << target) : j;
        m[i][j] = 1.0;
    }
    return m;
}

double dist(const Vec& a, const std::vector<C>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
    return d;
}

// Drive the register through a deterministic pseudo-random circuit so the
// oracle can be checked on states with no special structure.
QuantumRegister scrambled_register(unsigned qubits, std::uint64_t seed) {
    Rng rng(seed);
    QuantumRegister reg;
    reg.prepare_plus(PhaseExponent(static_cast<unsigned>(rng.below(4))));
    reg.append_zero_qubits(qubits - 1);
    for (int step = 0; step < 12; ++step) {
        const auto a = static_cast<unsigned>(rng.below(qubits));
        const auto b = static_cast<unsigned>(rng.below(qubits));
        if (a != b) reg.apply_cnot(a, b);
        reg.apply_phase(static_cast<unsigned>(rng.below(qubits)),
                        PhaseExponent(static_cast<unsigned>(rng.below(4))));
    }
    return reg;
}

} // namespace

TEST_CASE("plus-type preparations carry the quarter-turn phase") {
    for (unsigned q = 0; q < 4; ++q) {
        QuantumRegister reg;
        reg.prepare_plus(PhaseExponent(q));
        REQUIRE(reg.qubit_count() == 1);
        REQUIRE(std::abs(reg.amplitudes()[0] - C{1 / std::sqrt(2.0), 0}) < 1e-12);
        REQUIRE(std::abs(reg.amplitudes()[1] - ipow(q) / std::sqrt(2.0)) < 1e-12);
    }
}

TEST_CASE("phase exponent arithmetic and bit split") {
    REQUIRE(PhaseExponent::from_bits(false, false).quarter == 0);
    REQUIRE(PhaseExponent::from_bits(true, false).quarter == 1);
    REQUIRE(PhaseExponent::from_bits(false, true).quarter == 2);
    REQUIRE(PhaseExponent::from_bits(true, true).quarter == 3);
    for (unsigned a = 0; a < 4; ++a) {
        for (unsigned b = 0; b < 4; ++b) {
            REQUIRE((PhaseExponent(a) + PhaseExponent(b)).quarter == ((a + b) & 3));
        }
        REQUIRE(PhaseExponent(a).half_bit() == ((a & 1) != 0));
        REQUIRE(PhaseExponent(a).full_bit() == ((a >> 1) != 0));
    }
}

TEST_CASE("eigenvector quarters for both bases") {
    // Hadamard basis: outcome 0 is |0>+|1> (kappa 0), outcome 1 is |0>-|1>
    // (kappa 2). Circular basis: outcome 0 is |0>-i|1> (kappa 3), outcome 1
    // is |0>+i|1> (kappa 1).
    REQUIRE(eigenvector_quarter(Basis::hadamard, false) == 0);
    REQUIRE(eigenvector_quarter(Basis::hadamard, true) == 2);
    REQUIRE(eigenvector_quarter(Basis::circular, false) == 3);
    REQUIRE(eigenvector_quarter(Basis::circular, true) == 1);
}

TEST_CASE("eigenstates measure deterministically in their own basis and uniformly in the other") {
    for (unsigned beta = 0; beta < 2; ++beta) {
        for (bool w : {false, true}) {
            const unsigned kappa = eigenvector_quarter(static_cast<Basis>(beta), w);
            QuantumRegister reg;
            reg.prepare_plus(PhaseExponent(kappa));
            REQUIRE(reg.outcome_probability(0, static_cast<Basis>(beta), w) == Catch::Approx(1.0).margin(1e-12));
            REQUIRE(reg.outcome_probability(0, static_cast<Basis>(beta), !w) == Catch::Approx(0.0).margin(1e-12));
            const auto other = static_cast<Basis>(1 - beta);
            REQUIRE(reg.outcome_probability(0, other, false) == Catch::Approx(0.5).margin(1e-12));
            Rng rng(5);
            REQUIRE(reg.measure(0, static_cast<Basis>(beta), rng) == w);
        }
    }
}

TEST_CASE("phase application matches the dense matrix oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        QuantumRegister reg = scrambled_register(3, seed);
        for (unsigned k = 0; k < 3; ++k) {
            for (unsigned q = 0; q < 4; ++q) {
                Vec before(reg.amplitudes().begin(), reg.amplitudes().end());
                reg.apply_phase(k, PhaseExponent(q));
                const Vec expect = matvec(embed(phase_gate(q), k, 3), before);
                REQUIRE(dist(expect, reg.amplitudes()) < 1e-10);
            }
        }
    }
}

TEST_CASE("cnot matches the dense matrix oracle in both orientations") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        QuantumRegister reg = scrambled_register(3, seed);
        for (auto [c, t] : std::vector<std::pair<unsigned, unsigned>>{{0, 2}, {2, 0}, {1, 2}, {2, 1}}) {
            Vec before(reg.amplitudes().begin(), reg.amplitudes().end());
            reg.apply_cnot(c, t);
            const Vec expect = matvec(cnot_matrix(c, t, 3), before);
            REQUIRE(dist(expect, reg.amplitudes()) < 1e-10);
        }
        REQUIRE_THROWS_AS(reg.apply_cnot(1, 1), std::invalid_argument);
    }
}

TEST_CASE("outcome probabilities and collapse match the projector oracle") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        for (unsigned k = 0; k < 3; ++k) {
            for (unsigned beta = 0; beta < 2; ++beta) {
                for (bool w : {false, true}) {
                    QuantumRegister reg = scrambled_register(3, seed);
                    Vec before(reg.amplitudes().begin(), reg.amplitudes().end());
                    const Mat proj = embed(basis_projector(beta, w), k, 3);
                    Vec projected = matvec(proj, before);
                    double p_expect = 0;
                    for (const C& a : projected) p_expect += std::norm(a);
                    const double p = reg.outcome_probability(k, static_cast<Basis>(beta), w);
                    REQUIRE(p == Catch::Approx(p_expect).margin(1e-10));
                    if (p_expect > 1e-9) {
                        const double p_col = reg.collapse(k, static_cast<Basis>(beta), w);
                        REQUIRE(p_col == Catch::Approx(p_expect).margin(1e-10));
                        for (C& a : projected) a /= std::sqrt(p_expect);
                        REQUIRE(dist(projected, reg.amplitudes()) < 1e-9);
                    }
                }
            }
        }
    }
}

TEST_CASE("probabilities over both outcomes sum to one") {
    for (std::uint64_t seed = 10; seed <= 14; ++seed) {
        QuantumRegister reg = scrambled_register(4, seed);
        for (unsigned k = 0; k < 4; ++k) {
            for (unsigned beta = 0; beta < 2; ++beta) {
                const double p0 = reg.outcome_probability(k, static_cast<Basis>(beta), false);
                const double p1 = reg.outcome_probability(k, static_cast<Basis>(beta), true);
                REQUIRE(p0 + p1 == Catch::Approx(1.0).margin(1e-10));
            }
        }
    }
}

TEST_CASE("collapse onto a zero-probability branch is rejected") {
    QuantumRegister reg;
    reg.prepare_plus(PhaseExponent(0)); // Hadamard outcome 0 eigenstate
    REQUIRE_THROWS_AS(reg.collapse(0, Basis::hadamard, true), std::logic_error);
}

TEST_CASE("measurement sampling follows the computed probabilities") {
    QuantumRegister base = scrambled_register(3, 42);
    const double p0 = base.outcome_probability(1, Basis::circular, false);
    Rng rng(777);
    const int trials = 20000;
    int zeros = 0;
    for (int t = 0; t < trials; ++t) {
        QuantumRegister reg = base;
        if (!reg.measure(1, Basis::circular, rng)) ++zeros;
    }
    const double sigma = std::sqrt(p0 * (1 - p0) * trials);
    REQUIRE(std::abs(zeros - p0 * trials) < 5 * sigma + 5);
}

TEST_CASE("appending zero qubits embeds the state unchanged") {
    QuantumRegister reg;
    reg.prepare_plus(PhaseExponent(3));
    reg.append_zero_qubits(2);
    REQUIRE(reg.qubit_count() == 3);
    REQUIRE(reg.amplitudes().size() == 8);
    REQUIRE(std::abs(reg.amplitudes()[0] - C{1 / std::sqrt(2.0), 0}) < 1e-12);
    REQUIRE(std::abs(reg.amplitudes()[1] - ipow(3) / std::sqrt(2.0)) < 1e-12);
    for (std::size_t i = 2; i < 8; ++i) REQUIRE(std::abs(reg.amplitudes()[i]) < 1e-12);
    REQUIRE_THROWS_AS(reg.append_zero_qubits(QuantumRegister::kMaxQubits), std::invalid_argument);
}

TEST_CASE("fanning out with cnots builds the shared-phase state") {
    // (|0..0> + i^q |1..1>)/sqrt(2) after copying qubit 0 into fresh ones.
    for (unsigned q = 0; q < 4; ++q) {
        QuantumRegister reg;
        reg.prepare_plus(PhaseExponent(q));
        reg.append_zero_qubits(2);
        reg.apply_cnot(0, 1);
        reg.apply_cnot(0, 2);
        for (std::size_t i = 0; i < 8; ++i) {
            const C expect = i == 0 ? C{1 / std::sqrt(2.0), 0} : i == 7 ? ipow(q) / std::sqrt(2.0) : C{0, 0};
            REQUIRE(std::abs(reg.amplitudes()[i] - expect) < 1e-12);
        }
    }
}

TEST_CASE("phase-flip noise is a half-turn applied with the given rate") {
    QuantumRegister reg;
    reg.prepare_plus(PhaseExponent(1));
    Rng rng(3);
    reg.apply_phase_flip_noise(0, 0.0, rng); // never fires
    REQUIRE(std::abs(reg.amplitudes()[1] - ipow(1) / std::sqrt(2.0)) < 1e-12);
    reg.apply_phase_flip_noise(0, 1.0, rng); // always fires
    REQUIRE(std::abs(reg.amplitudes()[1] - ipow(3) / std::sqrt(2.0)) < 1e-12);

    // Rate check: a half-turn flips the Hadamard-basis outcome of the
    // kappa=0 eigenstate, so the flip frequency is directly observable.
    Rng noise_rng(99);
    Rng measure_rng(100);
    const int trials = 20000;
    int flipped = 0;
    for (int t = 0; t < trials; ++t) {
        QuantumRegister r;
        r.prepare_plus(PhaseExponent(0));
        r.apply_phase_flip_noise(0, 0.3, noise_rng);
        if (r.measure(0, Basis::hadamard, measure_rng)) ++flipped;
    }
    const double sigma = std::sqrt(0.3 * 0.7 * trials);
    REQUIRE(std::abs(flipped - 0.3 * trials) < 5 * sigma);
}
