#pragma once

// Small numeric helpers shared by the code construction and the security
// bound calculator.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace qline {

// Binary entropy h(x) = -x log2 x - (1-x) log2 (1-x), with the continuous
// extension h(0) = h(1) = 0.
inline double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("binary_entropy: argument outside [0, 1]");
    }
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

// Syndrome length for a block of m bits at design crossover `rate`:
// information-theoretic m*h(rate) plus a relative overhead, capped at m.
inline std::uint32_t syndrome_length_for(std::uint32_t m, double rate, double overhead) {
    if (rate < 0.0 || rate > 0.5) throw std::invalid_argument("syndrome_length_for: rate outside [0, 0.5]");
    if (overhead < 0.0) throw std::invalid_argument("syndrome_length_for: negative overhead");
    const double raw = static_cast<double>(m) * binary_entropy(rate) * (1.0 + overhead);
    const auto chi = static_cast<std::uint64_t>(std::llround(raw));
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(chi, m));
}

} // namespace qline
