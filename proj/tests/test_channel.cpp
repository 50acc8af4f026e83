#include <catch2/catch_amalgamated.hpp>

#include "qline/channel.hpp"
#include "qline/commitment.hpp"

using namespace qline;

namespace {

// Commit a deterministic set of vectors for `players` players of length n.
std::vector<BitVec> make_values(unsigned players, std::uint32_t n, std::uint64_t seed) {
    std::vector<BitVec> out;
    Rng rng(seed);
    for (unsigned p = 0; p < players; ++p) out.push_back(rng.bits(n));
    return out;
}

} // namespace

TEST_CASE("broadcasts land in the transcript in order; blocked stages vanish") {
    Channel ch(1);
    REQUIRE(ch.broadcast(1, "alpha", BitVec::from_bits({1, 0, 1})));
    REQUIRE(ch.broadcast(2, "beta", BitVec()));
    ch.block_stage("gamma");
    REQUIRE_FALSE(ch.broadcast(3, "gamma", BitVec::from_bits({1})));
    REQUIRE(ch.transcript().size() == 2);
    REQUIRE(ch.transcript().entries()[0].sender == 1);
    REQUIRE(ch.transcript().entries()[0].stage == "alpha");
    REQUIRE(ch.transcript().entries()[1].sender == 2);
    const std::string text = ch.transcript().to_text();
    REQUIRE(text == "1 alpha 3 05\n2 beta 0 -\n");
}

TEST_CASE("coin flips are seed-deterministic and abortable") {
    Channel a(42), b(42);
    const auto fa = a.coin_flip_bits(80, "coin");
    const auto fb = b.coin_flip_bits(80, "coin");
    REQUIRE(fa.has_value());
    REQUIRE(*fa == *fb);
    REQUIRE(a.transcript().entries().back().stage == "coin");

    Channel c(42);
    c.set_coin_abort(true);
    REQUIRE_FALSE(c.coin_flip_bits(8, "coin").has_value());
    c.set_coin_abort(false);
    c.block_stage("coin");
    REQUIRE_FALSE(c.coin_flip_bits(8, "coin").has_value());
    REQUIRE(c.transcript().size() == 0);
}

TEST_CASE("ideal subset broadcast reveals committed bits on a joint subset") {
    Channel ch(7);
    const unsigned players = 3;
    const std::uint32_t n = 40;
    IdealSubsetBroadcast session(ch, "b", n, players);
    const auto values = make_values(players, n, 11);
    for (unsigned p = 1; p <= players; ++p) REQUIRE(session.commit(p, values[p - 1]));
    const auto reveal = session.reveal(12);
    REQUIRE(reveal.has_value());
    REQUIRE(reveal->subset.size() == 12);
    REQUIRE(reveal->values.size() == players);
    for (std::size_t i = 1; i < reveal->subset.size(); ++i) {
        REQUIRE(reveal->subset[i] > reveal->subset[i - 1]);
    }
    for (unsigned p = 0; p < players; ++p) {
        REQUIRE(reveal->values[p].size() == 12);
        for (std::size_t k = 0; k < 12; ++k) {
            REQUIRE(reveal->values[p].get(k) == values[p].get(reveal->subset[k]));
        }
    }
    // Transcript: 3 empty commits, the subset coin flip, 3 reveals.
    REQUIRE(ch.transcript().size() == 7);
    REQUIRE(ch.transcript().entries()[0].stage == "commit_b");
    REQUIRE(ch.transcript().entries()[0].payload.empty());
    REQUIRE(ch.transcript().entries()[3].stage == "subset_b");
    REQUIRE(ch.transcript().entries()[4].stage == "reveal_b");
}

TEST_CASE("subset broadcast misuse is rejected") {
    Channel ch(7);
    IdealSubsetBroadcast session(ch, "b", 10, 2);
    const auto values = make_values(2, 10, 3);
    REQUIRE(session.commit(1, values[0]));
    REQUIRE_THROWS_AS(session.commit(1, values[0]), std::logic_error);
    REQUIRE_THROWS_AS(session.commit(2, BitVec(9)), std::invalid_argument);
    REQUIRE_THROWS_AS(session.commit(3, values[1]), std::out_of_range);
    REQUIRE_THROWS_AS(session.reveal(4), std::logic_error); // player 2 missing
}

TEST_CASE("blocking the session stages aborts commit or reveal") {
    {
        Channel ch(9);
        ch.block_stage("commit_v");
        IdealSubsetBroadcast session(ch, "v", 10, 2);
        REQUIRE_FALSE(session.commit(1, BitVec(10)));
    }
    for (const char* stage : {"subset_v", "reveal_v"}) {
        Channel ch(9);
        ch.block_stage(stage);
        IdealSubsetBroadcast session(ch, "v", 10, 2);
        const auto values = make_values(2, 10, 5);
        REQUIRE(session.commit(1, values[0]));
        REQUIRE(session.commit(2, values[1]));
        REQUIRE_FALSE(session.reveal(4).has_value());
    }
}

TEST_CASE("hash-commitment session agrees with the ideal one") {
    const unsigned players = 3;
    const std::uint32_t n = 40;
    const auto values = make_values(players, n, 21);

    Channel ch_ideal(55);
    IdealSubsetBroadcast ideal(ch_ideal, "v", n, players);
    Channel ch_real(55);
    CommitRevealSubsetBroadcast real(ch_real, "v", n, players, 1234);

    for (unsigned p = 1; p <= players; ++p) {
        REQUIRE(ideal.commit(p, values[p - 1]));
        REQUIRE(real.commit(p, values[p - 1]));
    }
    const auto ri = ideal.reveal(13);
    const auto rr = real.reveal(13);
    REQUIRE(ri.has_value());
    REQUIRE(rr.has_value());
    REQUIRE(ri->subset == rr->subset);
    for (unsigned p = 0; p < players; ++p) REQUIRE(ri->values[p] == rr->values[p]);

    // Commitments are 256 bits per value; openings carry bit + randomness.
    const auto& entries = ch_real.transcript().entries();
    REQUIRE(entries[0].stage == "commit_v");
    REQUIRE(entries[0].payload.size() == std::size_t{n} * 256);
    REQUIRE(entries.back().stage == "reveal_v");
    REQUIRE(entries.back().payload.size() == 13 * 257);
}

TEST_CASE("tampered openings abort the hash-commitment session") {
    const unsigned players = 2;
    const std::uint32_t n = 16;
    const auto values = make_values(players, n, 31);
    for (int mode = 0; mode < 2; ++mode) {
        Channel ch(66);
        CommitRevealSubsetBroadcast session(ch, "b", n, players, 99);
        for (unsigned p = 1; p <= players; ++p) REQUIRE(session.commit(p, values[p - 1]));
        // Corrupt a slot that is certainly revealed: subset of size n.
        if (mode == 0) {
            session.corrupt_opened_bit(2, 5);
        } else {
            session.corrupt_opened_randomness(2, 5);
        }
        REQUIRE_FALSE(session.reveal(n).has_value());
    }
}

TEST_CASE("commit digests separate players, indices, bits and randomness") {
    std::array<std::uint8_t, 32> r{};
    r.fill(7);
    const auto base = commit_digest(1, 2, false, r);
    REQUIRE(commit_digest(1, 2, false, r) == base);
    REQUIRE(commit_digest(2, 2, false, r) != base);
    REQUIRE(commit_digest(1, 3, false, r) != base);
    REQUIRE(commit_digest(1, 2, true, r) != base);
    auto r2 = r;
    r2[31] ^= 1;
    REQUIRE(commit_digest(1, 2, false, r2) != base);
}
