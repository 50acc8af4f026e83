#pragma once

// Toeplitz-matrix universal hashing, used both for the short correctness
// check and for privacy amplification. A k x m Toeplitz matrix over GF(2)
// is determined by its first column and first row — m + k - 1 seed bits —
// and the family {x -> Tx} is 2-universal: distinct inputs collide with
// probability at most 2^-k over the seed.

#include <cstdint>
#include <stdexcept>

#include "bitvec.hpp"
#include "rng.hpp"

namespace qline {

class ToeplitzHash {
public:
    // Seed layout: seed[k-1] is the top-left entry; walking down the first
    // column decreases the index (seed[k-1-i] starts row i) and walking
    // right along a row increases it (row i, column c is seed[k-1+c-i]).
    ToeplitzHash(std::size_t input_length, std::size_t output_length, BitVec seed)
        : m_(input_length), k_(output_length), seed_(std::move(seed)) {
        if (k_ == 0) throw std::invalid_argument("ToeplitzHash: empty output");
        if (m_ == 0) throw std::invalid_argument("ToeplitzHash: empty input");
        if (seed_.size() != seed_length(m_, k_)) {
            throw std::invalid_argument("ToeplitzHash: seed length must be input+output-1");
        }
    }

    static std::size_t seed_length(std::size_t input_length, std::size_t output_length) {
        return input_length + output_length - 1;
    }

    static ToeplitzHash sample(std::size_t input_length, std::size_t output_length, Rng& rng) {
        return ToeplitzHash(input_length, output_length, rng.bits(seed_length(input_length, output_length)));
    }

    std::size_t input_length() const { return m_; }
    std::size_t output_length() const { return k_; }
    const BitVec& seed() const { return seed_; }

    // Row i of the matrix is the contiguous seed slice starting at k-1-i,
    // so each output bit is one inner product.
    BitVec eval(const BitVec& input) const {
        if (input.size() != m_) throw std::invalid_argument("ToeplitzHash::eval: wrong input length");
        BitVec out(k_);
        for (std::size_t i = 0; i < k_; ++i) {
            out.set(i, seed_.slice(k_ - 1 - i, m_).dot(input));
        }
        return out;
    }

private:
    std::size_t m_;
    std::size_t k_;
    BitVec seed_;
};

} // namespace qline
