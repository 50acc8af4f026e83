#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <vector>

#include "qline/bitvec.hpp"
#include "qline/rng.hpp"

using namespace qline;

namespace {

// Reference implementation as a plain bool vector, used to check every
// word-packed operation bit by bit.
std::vector<bool> as_bools(const BitVec& v) {
    std::vector<bool> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v.get(i);
    return out;
}

BitVec random_vec(Rng& rng, std::size_t n) { return rng.bits(n); }

} // namespace

TEST_CASE("bit get/set/flip round-trip across word boundaries") {
    BitVec v(131);
    REQUIRE(v.size() == 131);
    for (std::size_t i : {std::size_t{0}, std::size_t{63}, std::size_t{64}, std::size_t{127}, std::size_t{130}}) {
        REQUIRE_FALSE(v.get(i));
        v.set(i, true);
        REQUIRE(v.get(i));
        v.flip(i);
        REQUIRE_FALSE(v.get(i));
    }
    REQUIRE_THROWS_AS(v.get(131), std::out_of_range);
    REQUIRE_THROWS_AS(v.set(131, true), std::out_of_range);
    REQUIRE_THROWS_AS(v.flip(131), std::out_of_range);
}

TEST_CASE("xor, weight and equality match the per-bit reference") {
    Rng rng(7);
    for (std::size_t n : {std::size_t{1}, std::size_t{64}, std::size_t{65}, std::size_t{200}}) {
        BitVec a = random_vec(rng, n);
        BitVec b = random_vec(rng, n);
        BitVec c = a ^ b;
        std::size_t expect_weight = 0;
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(c.get(i) == (a.get(i) != b.get(i)));
        }
        for (std::size_t i = 0; i < n; ++i) expect_weight += a.get(i);
        REQUIRE(a.weight() == expect_weight);
        REQUIRE((a ^ a) == BitVec(n));
        REQUIRE_FALSE((a ^ a).any());
        if (a.weight() > 0) REQUIRE(a.any());
    }
    REQUIRE_THROWS_AS(BitVec(3) ^= BitVec(4), std::invalid_argument);
}

TEST_CASE("dot equals parity of pairwise products") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(190);
        BitVec a = random_vec(rng, n);
        BitVec b = random_vec(rng, n);
        bool expect = false;
        for (std::size_t i = 0; i < n; ++i) expect ^= (a.get(i) && b.get(i));
        REQUIRE(a.dot(b) == expect);
        REQUIRE(a.dot(b) == b.dot(a));
    }
}

TEST_CASE("slice matches the per-bit reference at all offsets") {
    Rng rng(13);
    BitVec v = random_vec(rng, 300);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t pos = rng.below(300);
        const std::size_t len = rng.below(300 - pos + 1);
        BitVec s = v.slice(pos, len);
        REQUIRE(s.size() == len);
        for (std::size_t i = 0; i < len; ++i) REQUIRE(s.get(i) == v.get(pos + i));
    }
    REQUIRE_THROWS_AS(v.slice(200, 101), std::out_of_range);
    REQUIRE(v.slice(300, 0).size() == 0);
}

TEST_CASE("hex encoding round-trips and validates") {
    Rng rng(17);
    for (std::size_t n : {std::size_t{1}, std::size_t{7}, std::size_t{8}, std::size_t{9}, std::size_t{64}, std::size_t{130}}) {
        BitVec v = random_vec(rng, n);
        const std::string hex = v.to_hex();
        REQUIRE(hex.size() == ((n + 7) / 8) * 2);
        REQUIRE(BitVec::from_hex(hex, n) == v);
    }
    // Known value: bits 0,1,0,1,1 -> byte 0b00011010 = 0x1a.
    REQUIRE(BitVec::from_bits({0, 1, 0, 1, 1}).to_hex() == "1a");
    REQUIRE_THROWS_AS(BitVec::from_hex("zz", 8), std::invalid_argument);
    REQUIRE_THROWS_AS(BitVec::from_hex("ff", 16), std::invalid_argument);
    // Padding bits beyond the size must be zero: 5-bit vector, bit 6 set.
    REQUIRE_THROWS_AS(BitVec::from_hex("40", 5), std::invalid_argument);
}

TEST_CASE("rng streams are deterministic and bits are served lsb-first") {
    Rng a(12345);
    Rng b(12345);
    for (int i = 0; i < 100; ++i) REQUIRE(a.word() == b.word());

    Rng c(999);
    Rng d(999);
    const std::uint64_t w = d.word();
    for (int i = 0; i < 64; ++i) REQUIRE(c.bit() == ((w >> i) & 1));
}

TEST_CASE("below is in range, exact for size one, and roughly uniform") {
    Rng rng(31);
    REQUIRE(rng.below(1) == 0);
    REQUIRE_THROWS_AS(rng.below(0), std::invalid_argument);
    std::vector<int> counts(10, 0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ++counts[rng.below(10)];
    for (int c : counts) {
        REQUIRE(c > draws / 10 - 600); // ~6 sigma
        REQUIRE(c < draws / 10 + 600);
    }
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
    }
}

TEST_CASE("derived seeds follow the splitmix64 schedule and do not collide") {
    // Independent recomputation of the derivation formula.
    auto mix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    };
    std::set<std::uint64_t> seen;
    for (std::uint64_t idx = 0; idx < 200; ++idx) {
        const std::uint64_t s = derive_seed(42, idx);
        REQUIRE(s == mix(42 + idx * 0x9e3779b97f4a7c15ull));
        REQUIRE(seen.insert(s).second);
    }
}

TEST_CASE("sampled subsets are sorted, unique, in range and seed-stable") {
    auto s1 = sample_subset(77, 100, 30);
    auto s2 = sample_subset(77, 100, 30);
    REQUIRE(s1 == s2);
    REQUIRE(s1.size() == 30);
    for (std::size_t i = 0; i < s1.size(); ++i) {
        REQUIRE(s1[i] < 100);
        if (i > 0) REQUIRE(s1[i] > s1[i - 1]);
    }
    auto full = sample_subset(5, 20, 20);
    for (std::uint32_t i = 0; i < 20; ++i) REQUIRE(full[i] == i);
    REQUIRE(sample_subset(5, 20, 0).empty());
    REQUIRE_THROWS_AS(sample_subset(5, 10, 11), std::invalid_argument);

    // Each element should land in a size-s subset with frequency ~ s/n.
    const int draws = 20000;
    std::vector<int> counts(10, 0);
    for (int d = 0; d < draws; ++d) {
        for (auto i : sample_subset(1000 + d, 10, 3)) ++counts[i];
    }
    for (int c : counts) {
        REQUIRE(c > draws * 3 / 10 - 800);
        REQUIRE(c < draws * 3 / 10 + 800);
    }
}
