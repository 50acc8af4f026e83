#pragma once

// Syndrome error correction. One public class, two constructions:
//
//  - exact_table: for tiny blocks (m <= 24). Dense random parity checks;
//    every error pattern up to the design weight is enumerated and its
//    syndrome tabulated, retrying seeds until the map is injective, so
//    decoding is exact by lookup.
//
//  - sparse: for real blocks. Irregular low-density parity checks built by
//    a configuration-model edge matching with parallel-edge elimination
//    and 4-cycle repair, decoded by normalized min-sum belief propagation
//    against the target syndrome.
//
// Both are fully determined by (block length, rate, config seed), so a
// code never needs to be persisted: any party rebuilds the same one.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bitvec.hpp"
#include "math.hpp"
#include "rng.hpp"

namespace qline {

// One class of the variable-degree profile: `fraction` of the variable
// nodes carry `degree` edges.
struct ProfileEntry {
    unsigned degree;
    double fraction;
};

// Construction/decoder knobs. `overhead` is the relative syndrome-length
// margin above the entropy bound; the rest parameterize the sparse family.
// Profile, normalization and the check-update rule were fixed by an
// empirical sweep at block length 8192, crossover 0.06 (the hardest point
// the acceptance workloads hit).
struct CodeConfig {
    double overhead = 0.2;
    std::uint64_t seed = 1;
    unsigned max_iterations = 200;
    double normalization = 0.85;  // min-sum scaling factor (when enabled)
    bool sum_product = true;      // exact check update instead of min-sum
    double damping = 0.8;         // variable-message relaxation in (0, 1]
    unsigned restarts = 2;        // extra decode attempts with jittered priors
    std::vector<ProfileEntry> profile = {{2, 0.33}, {3, 0.42}, {9, 0.25}};
};

class LinearCode {
public:
    std::uint32_t block_length() const { return m_; }
    std::uint32_t syndrome_length() const { return chi_; }
    double correction_rate() const { return rate_; }
    bool is_exact() const { return exact_; }

    // chi parity bits of `word` (length m).
    BitVec syndrome(const BitVec& word) const {
        if (word.size() != m_) throw std::invalid_argument("LinearCode::syndrome: wrong length");
        BitVec s(chi_);
        for (std::uint32_t c = 0; c < chi_; ++c) {
            bool bit = false;
            for (std::uint32_t e = row_offset_[c]; e < row_offset_[c + 1]; ++e) {
                bit ^= word.get(row_var_[e]);
            }
            s.set(c, bit);
        }
        return s;
    }

    // Most plausible error pattern with the given syndrome, or nullopt if
    // decoding fails (syndrome unseen for the exact family, no
    // convergence for the sparse one).
    std::optional<BitVec> decode_error(const BitVec& target) const {
        if (target.size() != chi_) throw std::invalid_argument("LinearCode::decode_error: wrong length");
        if (chi_ == 0) return BitVec(m_);
        return exact_ ? decode_table(target) : decode_bp(target);
    }

    // ---- constructions -------------------------------------------------

    static LinearCode exact_table(std::uint32_t m, double rate, const CodeConfig& cfg) {
        if (m == 0 || m > 24) throw std::invalid_argument("exact_table: block length must be in [1, 24]");
        const std::uint32_t chi = syndrome_length_for(m, rate, cfg.overhead);
        const auto t = static_cast<std::uint32_t>(rate * m); // max tabulated weight
        for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
            LinearCode code;
            code.m_ = m;
            code.chi_ = chi;
            code.rate_ = rate;
            code.exact_ = true;
            Rng rng(derive_seed(cfg.seed, attempt));
            // Dense random parity rows.
            code.row_offset_.assign(1, 0);
            for (std::uint32_t c = 0; c < chi; ++c) {
                for (std::uint32_t v = 0; v < m; ++v) {
                    if (rng.bit()) code.row_var_.push_back(v);
                }
                code.row_offset_.push_back(static_cast<std::uint32_t>(code.row_var_.size()));
            }
            if (code.tabulate(t)) return code;
        }
        throw std::runtime_error("exact_table: no injective code found (syndrome too short for weight budget)");
    }

    static LinearCode sparse(std::uint32_t m, double rate, const CodeConfig& cfg) {
        if (m < 25) throw std::invalid_argument("sparse: block length too small, use exact_table");
        LinearCode code;
        code.m_ = m;
        code.chi_ = syndrome_length_for(m, rate, cfg.overhead);
        code.rate_ = rate;
        code.exact_ = false;
        code.max_iterations_ = cfg.max_iterations;
        code.normalization_ = cfg.normalization;
        code.sum_product_ = cfg.sum_product;
        if (!(cfg.damping > 0.0 && cfg.damping <= 1.0)) {
            throw std::invalid_argument("sparse: damping must be in (0, 1]");
        }
        code.damping_ = cfg.damping;
        code.restarts_ = cfg.restarts;
        code.profile_ = cfg.profile;
        if (code.profile_.empty()) throw std::invalid_argument("sparse: empty degree profile");
        if (code.chi_ > 0) code.build_sparse_graph(cfg.seed);
        return code;
    }

    // Family selection by block length.
    static LinearCode make_default(std::uint32_t m, double rate, const CodeConfig& cfg) {
        return m <= 24 ? exact_table(m, rate, cfg) : sparse(m, rate, cfg);
    }

    // ---- structure introspection (tests and diagnostics) ----------------

    // Variable indices of parity row c.
    std::vector<std::uint32_t> check_row(std::uint32_t c) const {
        if (c >= chi_) throw std::out_of_range("LinearCode::check_row: bad row");
        return {row_var_.begin() + row_offset_[c], row_var_.begin() + row_offset_[c + 1]};
    }

    // Number of unordered check pairs that share two or more variables
    // (each such pair closes a length-4 cycle in the factor graph).
    std::size_t four_cycle_count() const {
        std::unordered_map<std::uint64_t, unsigned> pair_count;
        std::vector<std::vector<std::uint32_t>> checks_of_var(m_);
        for (std::uint32_t c = 0; c < chi_; ++c) {
            for (std::uint32_t k = row_offset_[c]; k < row_offset_[c + 1]; ++k) {
                checks_of_var[row_var_[k]].push_back(c);
            }
        }
        std::size_t cycles = 0;
        for (const auto& list : checks_of_var) {
            for (std::size_t a = 0; a < list.size(); ++a) {
                for (std::size_t b = a + 1; b < list.size(); ++b) {
                    std::uint32_t c1 = list[a], c2 = list[b];
                    if (c1 > c2) std::swap(c1, c2);
                    const std::uint64_t key = (std::uint64_t{c1} << 32) | c2;
                    if (++pair_count[key] == 2) ++cycles;
                    else if (pair_count[key] > 2) ++cycles;
                }
            }
        }
        return cycles;
    }

private:
    LinearCode() = default;

    // ---- exact family --------------------------------------------------

    std::uint64_t syndrome_key(const BitVec& s) const {
        std::uint64_t key = 0;
        for (std::uint32_t i = 0; i < chi_; ++i) key |= std::uint64_t{s.get(i)} << i;
        return key;
    }

    // Enumerate all error patterns of weight <= t; return false on a
    // syndrome collision (caller retries with fresh rows).
    bool tabulate(std::uint32_t t) {
        table_.clear();
        table_.emplace(0, 0u); // weight-0 pattern
        std::vector<std::uint32_t> pick;
        return tabulate_rec(pick, 0, t);
    }

    bool tabulate_rec(std::vector<std::uint32_t>& pick, std::uint32_t first, std::uint32_t remaining) {
        if (remaining == 0) return true;
        for (std::uint32_t v = first; v < m_; ++v) {
            pick.push_back(v);
            std::uint32_t mask = 0;
            for (std::uint32_t p : pick) mask |= 1u << p;
            BitVec err(m_);
            for (std::uint32_t p : pick) err.set(p, true);
            const std::uint64_t key = syndrome_key(syndrome(err));
            if (!table_.emplace(key, mask).second) {
                pick.pop_back();
                return false;
            }
            if (!tabulate_rec(pick, v + 1, remaining - 1)) {
                pick.pop_back();
                return false;
            }
            pick.pop_back();
        }
        return true;
    }

    std::optional<BitVec> decode_table(const BitVec& target) const {
        const auto it = table_.find(syndrome_key(target));
        if (it == table_.end()) return std::nullopt;
        BitVec err(m_);
        for (std::uint32_t v = 0; v < m_; ++v) {
            if ((it->second >> v) & 1u) err.set(v, true);
        }
        return err;
    }

    // ---- sparse family: construction ------------------------------------

    void build_sparse_graph(std::uint64_t seed) {
        for (std::uint64_t attempt = 0; attempt < 16; ++attempt) {
            if (try_build_sparse_graph(derive_seed(seed, 0x5000 + attempt))) return;
        }
        throw std::runtime_error("sparse: could not eliminate parallel edges");
    }

    bool try_build_sparse_graph(std::uint64_t seed) {
        Rng rng(seed);
        // Degree counts per class, ascending by degree; rounding leftovers
        // go to the highest-degree class.
        std::vector<ProfileEntry> profile = profile_;
        std::sort(profile.begin(), profile.end(),
                  [](const ProfileEntry& a, const ProfileEntry& b) { return a.degree < b.degree; });
        std::vector<unsigned> var_degree(m_, 0);
        std::size_t assigned = 0;
        for (std::size_t k = 0; k + 1 < profile.size(); ++k) {
            auto count = static_cast<std::size_t>(profile[k].fraction * m_ + 0.5);
            count = std::min(count, static_cast<std::size_t>(m_) - assigned);
            for (std::size_t i = 0; i < count; ++i) var_degree[assigned + i] = profile[k].degree;
            assigned += count;
        }
        for (std::size_t i = assigned; i < m_; ++i) var_degree[i] = profile.back().degree;

        // The degree-2 chain (below) supports at most one variable per
        // check; at low rates the profile can ask for more degree-2 nodes
        // than that, so the excess is promoted to degree 3 (those regimes
        // have huge decoding margin anyway).
        std::size_t deg2_count = 0;
        while (deg2_count < m_ && var_degree[deg2_count] == 2) ++deg2_count;
        const std::size_t deg2_cap = chi_ > 1 ? (9 * std::size_t{chi_}) / 10 : 0;
        for (std::size_t k = deg2_cap; k < deg2_count; ++k) var_degree[k] = 3;
        deg2_count = std::min(deg2_count, deg2_cap);

        std::size_t edges = 0;
        for (unsigned d : var_degree) edges += d;
        if (edges < chi_) return false; // degenerate; cannot cover all checks

        // Check side: near-regular degrees covering `edges` stubs exactly.
        const std::size_t base = edges / chi_;
        const std::size_t heavy = edges % chi_;
        std::vector<unsigned> remaining(chi_);
        for (std::uint32_t c = 0; c < chi_; ++c) {
            remaining[c] = static_cast<unsigned>(base + (c < heavy ? 1 : 0));
        }

        std::vector<std::uint32_t> edge_var;
        std::vector<std::uint32_t> edge_check;
        edge_var.reserve(edges);
        edge_check.reserve(edges);

        // Degree-2 variables first, on a structured chain: variable k sits
        // on checks (c_k, c_k + 1) with c_k spread evenly around the ring,
        // so consecutive variables overlap in at most one check. Their
        // subgraph is a union of paths (at worst one ring-length cycle):
        // no short cycle or small trapping set can form among them, which
        // is the dominant finite-length failure mode of random graphs.
        for (std::size_t k = 0; k < deg2_count; ++k) {
            const auto c = static_cast<std::uint32_t>((k * std::size_t{chi_}) / deg2_count);
            const std::uint32_t c2 = (c + 1) % chi_;
            if (remaining[c] == 0 || remaining[c2] == 0) return false;
            edge_var.push_back(static_cast<std::uint32_t>(k));
            edge_check.push_back(c);
            edge_var.push_back(static_cast<std::uint32_t>(k));
            edge_check.push_back(c2);
            --remaining[c];
            --remaining[c2];
        }
        const std::size_t chain_edges = edge_var.size();

        // Remaining stubs are matched uniformly (configuration model).
        std::vector<std::uint32_t> check_stub;
        check_stub.reserve(edges - chain_edges);
        for (std::uint32_t c = 0; c < chi_; ++c) {
            for (unsigned k = 0; k < remaining[c]; ++k) check_stub.push_back(c);
        }
        for (std::size_t i = check_stub.size(); i > 1; --i) {
            std::swap(check_stub[i - 1], check_stub[rng.below(i)]);
        }
        std::size_t next_stub = 0;
        for (std::uint32_t v = static_cast<std::uint32_t>(deg2_count); v < m_; ++v) {
            for (unsigned k = 0; k < var_degree[v]; ++k) {
                edge_var.push_back(v);
                edge_check.push_back(check_stub[next_stub++]);
            }
        }

        if (!repair_graph(edge_var, edge_check, chain_edges, rng)) return false;

        // Freeze as CSR over checks for the syndrome path, plus edge lists
        // for the decoder.
        edge_var_ = std::move(edge_var);
        edge_check_ = std::move(edge_check);
        build_adjacency();
        return true;
    }

    // Remove parallel edges (mandatory: a doubled edge cancels over GF(2))
    // and break 4-cycles (best effort: they degrade belief propagation).
    // Edges below `first_swappable` belong to the structured degree-2
    // chain and are never moved; offender detection marks the random-side
    // edge of any mixed conflict because chain variables come first.
    bool repair_graph(std::vector<std::uint32_t>& edge_var, std::vector<std::uint32_t>& edge_check,
                      std::size_t first_swappable, Rng& rng) {
        const std::size_t edges = edge_var.size();
        if (first_swappable >= edges) return find_offenders(edge_var, edge_check, false).empty();
        for (unsigned pass = 0; pass < 96; ++pass) {
            std::vector<std::size_t> offenders = find_offenders(edge_var, edge_check, pass < 80);
            if (offenders.empty()) return true;
            for (std::size_t e : offenders) {
                if (e < first_swappable) continue; // never move chain edges
                // Swap partner chosen uniformly among movable edges; degree
                // sequences on both sides are preserved by exchange.
                const std::size_t f = first_swappable + rng.below(edges - first_swappable);
                std::swap(edge_check[e], edge_check[f]);
            }
        }
        return find_offenders(edge_var, edge_check, false).empty();
    }

    // Offending edges: one of each parallel pair always; one edge of each
    // 4-cycle while `with_cycles` is set.
    static std::vector<std::size_t> find_offenders(const std::vector<std::uint32_t>& edge_var,
                                                   const std::vector<std::uint32_t>& edge_check,
                                                   bool with_cycles) {
        const std::size_t edges = edge_var.size();
        // Group edges by variable.
        std::size_t max_var = 0;
        for (std::uint32_t v : edge_var) max_var = std::max<std::size_t>(max_var, v);
        std::vector<std::vector<std::size_t>> by_var(max_var + 1);
        for (std::size_t e = 0; e < edges; ++e) by_var[edge_var[e]].push_back(e);

        std::vector<std::size_t> offenders;
        std::unordered_map<std::uint64_t, int> pair_seen;
        for (const auto& list : by_var) {
            // Parallel edges within one variable.
            for (std::size_t a = 0; a < list.size(); ++a) {
                for (std::size_t b = a + 1; b < list.size(); ++b) {
                    if (edge_check[list[a]] == edge_check[list[b]]) {
                        offenders.push_back(list[b]);
                    }
                }
            }
            if (!with_cycles) continue;
            // Check pairs: the same unordered pair of checks seen under two
            // different variables closes a 4-cycle.
            for (std::size_t a = 0; a < list.size(); ++a) {
                for (std::size_t b = a + 1; b < list.size(); ++b) {
                    std::uint32_t c1 = edge_check[list[a]];
                    std::uint32_t c2 = edge_check[list[b]];
                    if (c1 == c2) continue;
                    if (c1 > c2) std::swap(c1, c2);
                    const std::uint64_t key = (std::uint64_t{c1} << 32) | c2;
                    if (pair_seen.emplace(key, 1).second == false) {
                        offenders.push_back(list[b]);
                    }
                }
            }
        }
        return offenders;
    }

    void build_adjacency() {
        const std::size_t edges = edge_var_.size();
        row_offset_.assign(chi_ + 1, 0);
        for (std::uint32_t c : edge_check_) ++row_offset_[c + 1];
        for (std::uint32_t c = 0; c < chi_; ++c) row_offset_[c + 1] += row_offset_[c];
        row_var_.resize(edges);
        row_edge_.resize(edges);
        std::vector<std::uint32_t> cursor(row_offset_.begin(), row_offset_.end() - 1);
        for (std::size_t e = 0; e < edges; ++e) {
            const std::uint32_t c = edge_check_[e];
            row_var_[cursor[c]] = edge_var_[e];
            row_edge_[cursor[c]] = static_cast<std::uint32_t>(e);
            ++cursor[c];
        }
        var_offset_.assign(m_ + 1, 0);
        for (std::uint32_t v : edge_var_) ++var_offset_[v + 1];
        for (std::uint32_t v = 0; v < m_; ++v) var_offset_[v + 1] += var_offset_[v];
        var_edge_.resize(edges);
        std::vector<std::uint32_t> vcur(var_offset_.begin(), var_offset_.end() - 1);
        for (std::size_t e = 0; e < edges; ++e) {
            var_edge_[vcur[edge_var_[e]]++] = static_cast<std::uint32_t>(e);
        }
    }

    // ---- sparse family: normalized min-sum decoding ---------------------

    // Belief propagation with a few jittered restarts: patterns caught in
    // a trapping set on the plain run usually escape once the priors are
    // mildly perturbed. The jitter is derived from the syndrome itself, so
    // decoding stays a pure function of (code, syndrome).
    std::optional<BitVec> decode_bp(const BitVec& target) const {
        std::vector<double> priors(m_, std::log((1.0 - rate_) / std::max(rate_, 1e-12)));
        for (unsigned attempt = 0; attempt <= restarts_; ++attempt) {
            if (attempt > 0) {
                std::uint64_t mix = splitmix64(0x6a09e667f3bcc908ull ^ attempt);
                for (std::uint64_t w : target.words()) mix = splitmix64(mix ^ w);
                Rng jitter(mix);
                const double base = std::log((1.0 - rate_) / std::max(rate_, 1e-12));
                for (std::uint32_t v = 0; v < m_; ++v) {
                    priors[v] = base * (0.5 + jitter.uniform());
                }
            }
            if (auto out = decode_bp_once(target, priors)) return out;
        }
        return std::nullopt;
    }

    std::optional<BitVec> decode_bp_once(const BitVec& target, const std::vector<double>& priors) const {
        const std::size_t edges = edge_var_.size();
        std::vector<double> var_to_check(edges);
        for (std::size_t e = 0; e < edges; ++e) var_to_check[e] = priors[edge_var_[e]];
        std::vector<double> check_to_var(edges, 0.0);
        std::vector<double> total(m_, 0.0);
        for (std::uint32_t v = 0; v < m_; ++v) total[v] = priors[v];
        BitVec guess(m_);

        for (unsigned iter = 0; iter <= max_iterations_; ++iter) {
            // Hard decision and early exit on syndrome match.
            bool satisfied = true;
            for (std::uint32_t v = 0; v < m_; ++v) guess.set(v, total[v] < 0.0);
            for (std::uint32_t c = 0; c < chi_ && satisfied; ++c) {
                bool bit = false;
                for (std::uint32_t k = row_offset_[c]; k < row_offset_[c + 1]; ++k) {
                    bit ^= guess.get(row_var_[k]);
                }
                if (bit != target.get(c)) satisfied = false;
            }
            if (satisfied) return guess;
            if (iter == max_iterations_) break;

            if (sum_product_) {
                update_checks_sum_product(target, var_to_check, check_to_var);
            } else {
                update_checks_min_sum(target, var_to_check, check_to_var);
            }

            // Variable update: totals, then extrinsic messages, relaxed
            // toward the previous value (damping breaks the message
            // oscillations of trapping sets) and clamped to keep
            // magnitudes finite over many iterations.
            for (std::uint32_t v = 0; v < m_; ++v) {
                double sum = priors[v];
                for (std::uint32_t k = var_offset_[v]; k < var_offset_[v + 1]; ++k) {
                    sum += check_to_var[var_edge_[k]];
                }
                total[v] = sum;
                for (std::uint32_t k = var_offset_[v]; k < var_offset_[v + 1]; ++k) {
                    const std::uint32_t e = var_edge_[k];
                    const double fresh = sum - check_to_var[e];
                    var_to_check[e] = clamp_llr(damping_ * fresh + (1.0 - damping_) * var_to_check[e]);
                }
            }
        }
        return std::nullopt;
    }

    // Check update, normalized min-sum: sign product with the syndrome bit
    // folded in, magnitude from the two smallest inputs, scaled down.
    void update_checks_min_sum(const BitVec& target, const std::vector<double>& var_to_check,
                               std::vector<double>& check_to_var) const {
        for (std::uint32_t c = 0; c < chi_; ++c) {
            double min1 = 1e300, min2 = 1e300;
            std::uint32_t arg_min = 0;
            int sign = target.get(c) ? -1 : 1;
            for (std::uint32_t k = row_offset_[c]; k < row_offset_[c + 1]; ++k) {
                const double msg = var_to_check[row_edge_[k]];
                if (msg < 0) sign = -sign;
                const double mag = std::fabs(msg);
                if (mag < min1) {
                    min2 = min1;
                    min1 = mag;
                    arg_min = k;
                } else if (mag < min2) {
                    min2 = mag;
                }
            }
            for (std::uint32_t k = row_offset_[c]; k < row_offset_[c + 1]; ++k) {
                const std::uint32_t e = row_edge_[k];
                const double mag = (k == arg_min ? min2 : min1) * normalization_;
                const int s = var_to_check[e] < 0 ? -sign : sign;
                check_to_var[e] = s * mag;
            }
        }
    }

    // Check update, exact sum-product: tanh-domain product with stable
    // exclusion via prefix/suffix partial products per row.
    void update_checks_sum_product(const BitVec& target, const std::vector<double>& var_to_check,
                                   std::vector<double>& check_to_var) const {
        std::vector<double> prefix, suffix;
        for (std::uint32_t c = 0; c < chi_; ++c) {
            const std::uint32_t lo = row_offset_[c], hi = row_offset_[c + 1];
            const std::uint32_t deg = hi - lo;
            prefix.assign(deg + 1, 1.0);
            suffix.assign(deg + 1, 1.0);
            for (std::uint32_t k = 0; k < deg; ++k) {
                prefix[k + 1] = prefix[k] * std::tanh(0.5 * var_to_check[row_edge_[lo + k]]);
            }
            for (std::uint32_t k = deg; k > 0; --k) {
                suffix[k - 1] = suffix[k] * std::tanh(0.5 * var_to_check[row_edge_[lo + k - 1]]);
            }
            const double flip = target.get(c) ? -1.0 : 1.0;
            for (std::uint32_t k = 0; k < deg; ++k) {
                double t = flip * prefix[k] * suffix[k + 1];
                t = std::max(-0.9999999999, std::min(0.9999999999, t));
                check_to_var[row_edge_[lo + k]] = 2.0 * std::atanh(t);
            }
        }
    }

    static double clamp_llr(double x) { return std::max(-40.0, std::min(40.0, x)); }

    // ---- data -----------------------------------------------------------

    std::uint32_t m_ = 0;
    std::uint32_t chi_ = 0;
    double rate_ = 0.0;
    bool exact_ = false;
    unsigned max_iterations_ = 200;
    double normalization_ = 0.85;
    bool sum_product_ = false;
    double damping_ = 1.0;
    unsigned restarts_ = 0;
    std::vector<ProfileEntry> profile_;

    // Check-side CSR (both families): row c covers row_var_[row_offset_[c]
    // .. row_offset_[c+1]).
    std::vector<std::uint32_t> row_offset_{0};
    std::vector<std::uint32_t> row_var_;

    // Sparse family only: flat edge list plus per-side maps into it.
    std::vector<std::uint32_t> edge_var_;
    std::vector<std::uint32_t> edge_check_;
    std::vector<std::uint32_t> row_edge_;
    std::vector<std::uint32_t> var_offset_;
    std::vector<std::uint32_t> var_edge_;

    // Exact family only: syndrome -> packed error pattern.
    std::unordered_map<std::uint64_t, std::uint32_t> table_;
};

} // namespace qline
