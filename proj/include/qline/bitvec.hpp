#pragma once

// Word-packed bit vector with the operations the protocol code needs:
// XOR accumulation, Hamming weight, inner products over GF(2), slicing,
// and a hex round-trip for persisting shares and transcripts.

#include <bit>
#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qline {

class BitVec {
public:
    BitVec() = default;

    explicit BitVec(std::size_t size) : size_(size), words_(word_count(size), 0) {}

    static BitVec from_bits(std::initializer_list<int> bits) {
        BitVec v(bits.size());
        std::size_t i = 0;
        for (int b : bits) v.set(i++, b != 0);
        return v;
    }

    std::size_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    bool get(std::size_t i) const {
        check_index(i);
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    void set(std::size_t i, bool value) {
        check_index(i);
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (value) {
            words_[i >> 6] |= mask;
        } else {
            words_[i >> 6] &= ~mask;
        }
    }

    void flip(std::size_t i) {
        check_index(i);
        words_[i >> 6] ^= std::uint64_t{1} << (i & 63);
    }

    // XOR-accumulate another vector of the same length.
    BitVec& operator^=(const BitVec& other) {
        if (other.size_ != size_) {
            throw std::invalid_argument("BitVec xor: length mismatch");
        }
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= other.words_[w];
        return *this;
    }

    friend BitVec operator^(BitVec lhs, const BitVec& rhs) {
        lhs ^= rhs;
        return lhs;
    }

    bool operator==(const BitVec& other) const {
        // Tail bits beyond size() are kept zero by every mutator, so
        // word-wise comparison is exact.
        return size_ == other.size_ && words_ == other.words_;
    }
    bool operator!=(const BitVec& other) const { return !(*this == other); }

    // Number of set bits.
    std::size_t weight() const {
        std::size_t total = 0;
        for (std::uint64_t w : words_) total += static_cast<std::size_t>(std::popcount(w));
        return total;
    }

    bool any() const {
        for (std::uint64_t w : words_) {
            if (w != 0) return true;
        }
        return false;
    }

    // Inner product over GF(2): parity of the AND of the two vectors.
    // popcount parity distributes over XOR, so folding the AND-words with
    // XOR first and taking one popcount at the end is equivalent and cheap.
    bool dot(const BitVec& other) const {
        if (other.size_ != size_) {
            throw std::invalid_argument("BitVec dot: length mismatch");
        }
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < words_.size(); ++w) acc ^= words_[w] & other.words_[w];
        return std::popcount(acc) & 1;
    }

    // Contiguous sub-vector [pos, pos+len).
    BitVec slice(std::size_t pos, std::size_t len) const {
        if (pos + len > size_) {
            throw std::out_of_range("BitVec slice: range exceeds size");
        }
        BitVec out(len);
        const std::size_t word_shift = pos >> 6;
        const unsigned bit_shift = static_cast<unsigned>(pos & 63);
        for (std::size_t w = 0; w < out.words_.size(); ++w) {
            std::uint64_t lo = words_[word_shift + w] >> bit_shift;
            if (bit_shift != 0 && word_shift + w + 1 < words_.size()) {
                lo |= words_[word_shift + w + 1] << (64 - bit_shift);
            }
            out.words_[w] = lo;
        }
        out.mask_tail();
        return out;
    }

    // Hex encoding, bytes in index order, bit (8k) of the vector in the
    // least significant position of byte k. Length is carried separately
    // by the caller; a trailing partial byte is zero-padded.
    std::string to_hex() const {
        static const char digits[] = "0123456789abcdef";
        const std::size_t bytes = (size_ + 7) / 8;
        std::string out;
        out.reserve(bytes * 2);
        for (std::size_t k = 0; k < bytes; ++k) {
            const unsigned byte = static_cast<unsigned>((words_[k >> 3] >> ((k & 7) * 8)) & 0xff);
            out.push_back(digits[byte >> 4]);
            out.push_back(digits[byte & 0xf]);
        }
        return out;
    }

    static BitVec from_hex(const std::string& hex, std::size_t size) {
        if (hex.size() != ((size + 7) / 8) * 2) {
            throw std::invalid_argument("BitVec from_hex: digit count does not match size");
        }
        BitVec v(size);
        for (std::size_t k = 0; k * 2 < hex.size(); ++k) {
            const unsigned byte = (hex_digit(hex[k * 2]) << 4) | hex_digit(hex[k * 2 + 1]);
            v.words_[k >> 3] |= std::uint64_t{byte} << ((k & 7) * 8);
        }
        const std::vector<std::uint64_t> raw = v.words_;
        v.mask_tail();
        if (v.words_ != raw) {
            throw std::invalid_argument("BitVec from_hex: nonzero bits beyond declared size");
        }
        return v;
    }

    // Raw word access for hashing/serialization helpers.
    const std::vector<std::uint64_t>& words() const { return words_; }

private:
    static std::size_t word_count(std::size_t bits) { return (bits + 63) / 64; }

    static unsigned hex_digit(char c) {
        if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<unsigned>(c - 'A' + 10);
        throw std::invalid_argument("BitVec from_hex: invalid hex digit");
    }

    void check_index(std::size_t i) const {
        if (i >= size_) throw std::out_of_range("BitVec: index out of range");
    }

    void mask_tail() {
        const unsigned rem = static_cast<unsigned>(size_ & 63);
        if (rem != 0 && !words_.empty()) {
            words_.back() &= (std::uint64_t{1} << rem) - 1;
        }
    }

    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

} // namespace qline
