#pragma once

// Batch experiment plumbing: a flat key/value configuration format, a
// runner that executes repeated sessions under derived per-run seeds, and
// a report type with deterministic text/table serialization. Every number
// in a report is a pure function of the configuration (master seed
// included), so identical configurations serialize byte-identically;
// wall-clock timing is deliberately kept out of the report.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "adversary.hpp"
#include "engine.hpp"
#include "params.hpp"
#include "security.hpp"

namespace qline {

// ---- configuration -------------------------------------------------------

struct ExperimentConfig {
    ProtocolParams params;
    Variant variant = Variant::prepare_measure;
    AttackSpec attack;
    std::uint64_t repetitions = 1;
    std::uint64_t seed = 0;
    std::string output;          // report file path; empty keeps output in memory
    std::string format = "text"; // "text" or "csv"
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto from = s.find_first_not_of(" \t\r");
    if (from == std::string::npos) return "";
    const auto to = s.find_last_not_of(" \t\r");
    return s.substr(from, to - from + 1);
}

[[noreturn]] inline void config_error(const std::string& key, const std::string& what) {
    throw std::invalid_argument("config: " + what + " for key '" + key + "'");
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    if (value.empty() || value[0] == '-' || value[0] == '+') {
        config_error(key, "not an unsigned integer");
    }
    try {
        std::size_t used = 0;
        const std::uint64_t v = std::stoull(value, &used);
        if (used != value.size()) config_error(key, "trailing characters");
        return v;
    } catch (const std::invalid_argument&) {
        config_error(key, "not an unsigned integer");
    } catch (const std::out_of_range&) {
        config_error(key, "integer out of range");
    }
}

inline double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) config_error(key, "trailing characters");
        return v;
    } catch (const std::invalid_argument&) {
        config_error(key, "not a number");
    } catch (const std::out_of_range&) {
        config_error(key, "number out of range");
    }
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    config_error(key, "not a boolean (use 0/1/true/false)");
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
    return out;
}

} // namespace detail

// Parse the flat `key = value` configuration format: one pair per line,
// '#' starts a comment, blank lines are ignored, repeated or unknown keys
// are errors. Scripted bit strings are given as hex and take their length
// from `rounds`, so key order inside the file does not matter.
inline ExperimentConfig parse_experiment_config(const std::string& text) {
    using detail::config_error;

    std::vector<std::pair<std::string, std::string>> pairs;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config: missing '=' in line '" + line + "'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument("config: empty key");
        if (value.empty()) config_error(key, "empty value");
        for (const auto& [k, v] : pairs) {
            if (k == key) config_error(key, "duplicate key");
        }
        pairs.emplace_back(key, value);
    }

    ExperimentConfig cfg;
    // Scripted strings are resolved after all keys are read, because their
    // bit length comes from `rounds`.
    std::string attack_script;
    std::vector<std::pair<std::size_t, std::string>> dishonest_basis, dishonest_value;

    const auto dishonest_slot = [&cfg](std::size_t player) -> DishonestSpec& {
        for (auto& d : cfg.attack.dishonest) {
            if (d.player == player) return d;
        }
        cfg.attack.dishonest.push_back(DishonestSpec{player, DishonestStrategy::mirror, {}, {}});
        return cfg.attack.dishonest.back();
    };

    for (const auto& [key, value] : pairs) {
        if (key == "players") {
            cfg.params.players = detail::parse_uint(key, value);
        } else if (key == "rounds") {
            cfg.params.rounds = detail::parse_uint(key, value);
        } else if (key == "tau_prime") {
            cfg.params.tau_prime = detail::parse_uint(key, value);
        } else if (key == "delta") {
            cfg.params.delta = detail::parse_real(key, value);
        } else if (key == "nu") {
            cfg.params.nu = detail::parse_real(key, value);
        } else if (key == "eta") {
            cfg.params.eta = detail::parse_uint(key, value);
        } else if (key == "key_length") {
            cfg.params.key_length = detail::parse_uint(key, value);
        } else if (key == "noise") {
            cfg.params.noise = detail::parse_real(key, value);
        } else if (key == "honest") {
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                cfg.params.honest.push_back(detail::parse_uint(key, detail::trim(item)));
            }
        } else if (key == "channel_mode") {
            if (value == "ideal") cfg.params.channel_mode = ChannelMode::ideal;
            else if (value == "commitment") cfg.params.channel_mode = ChannelMode::commitment;
            else config_error(key, "unknown channel mode");
        } else if (key == "code.overhead") {
            cfg.params.code.overhead = detail::parse_real(key, value);
        } else if (key == "code.seed") {
            cfg.params.code.seed = detail::parse_uint(key, value);
        } else if (key == "code.max_iterations") {
            cfg.params.code.max_iterations = detail::parse_uint(key, value);
        } else if (key == "code.damping") {
            cfg.params.code.damping = detail::parse_real(key, value);
        } else if (key == "code.restarts") {
            cfg.params.code.restarts = detail::parse_uint(key, value);
        } else if (key == "code.sum_product") {
            cfg.params.code.sum_product = detail::parse_bool(key, value);
        } else if (key == "variant") {
            if (value == "prepare_measure" || value == "pm") cfg.variant = Variant::prepare_measure;
            else if (value == "entangled" || value == "eb") cfg.variant = Variant::entangled;
            else config_error(key, "unknown variant");
        } else if (key == "attack.kind") {
            if (value == "none") cfg.attack.kind = AttackKind::none;
            else if (value == "phase_flip") cfg.attack.kind = AttackKind::phase_flip;
            else if (value == "intercept_resend") cfg.attack.kind = AttackKind::intercept_resend;
            else if (value == "custom_unitary") cfg.attack.kind = AttackKind::custom_unitary;
            else if (value == "measurement_offset") cfg.attack.kind = AttackKind::measurement_offset;
            else config_error(key, "unknown attack kind");
        } else if (key == "attack.link") {
            cfg.attack.link = detail::parse_uint(key, value);
        } else if (key == "attack.rate") {
            cfg.attack.rate = detail::parse_real(key, value);
        } else if (key == "attack.policy") {
            if (value == "uniform") cfg.attack.policy = BasisPolicy::uniform;
            else if (value == "hadamard_only") cfg.attack.policy = BasisPolicy::hadamard_only;
            else if (value == "circular_only") cfg.attack.policy = BasisPolicy::circular_only;
            else if (value == "scripted") cfg.attack.policy = BasisPolicy::scripted;
            else config_error(key, "unknown basis policy");
        } else if (key == "attack.scripted_bases") {
            attack_script = value;
        } else if (key == "attack.unitary") {
            const std::vector<double> parts = detail::parse_real_list(key, value);
            if (parts.size() != 8) config_error(key, "need 8 numbers (re,im per entry, row-major)");
            for (std::size_t i = 0; i < 4; ++i) {
                cfg.attack.unitary[i] = std::complex<double>(parts[2 * i], parts[2 * i + 1]);
            }
        } else if (key == "attack.blocked_stage") {
            cfg.attack.blocked_stage = value;
        } else if (key == "attack.coin_abort") {
            cfg.attack.coin_abort = detail::parse_bool(key, value);
        } else if (key == "attack.announce_last_syndrome") {
            cfg.attack.announce_last_syndrome = detail::parse_bool(key, value);
        } else if (key.rfind("dishonest.", 0) == 0) {
            const std::string rest = key.substr(10);
            const auto dot = rest.find('.');
            const std::string id_text = dot == std::string::npos ? rest : rest.substr(0, dot);
            const std::size_t player = detail::parse_uint(key, id_text);
            if (dot == std::string::npos) {
                DishonestSpec& spec = dishonest_slot(player);
                if (value == "mirror") spec.strategy = DishonestStrategy::mirror;
                else if (value == "flip_values") spec.strategy = DishonestStrategy::flip_values;
                else if (value == "flip_syndrome_bit") spec.strategy = DishonestStrategy::flip_syndrome_bit;
                else if (value == "scripted") spec.strategy = DishonestStrategy::scripted;
                else config_error(key, "unknown dishonest strategy");
            } else if (rest.substr(dot + 1) == "basis") {
                dishonest_basis.emplace_back(player, value);
            } else if (rest.substr(dot + 1) == "value") {
                dishonest_value.emplace_back(player, value);
            } else {
                config_error(key, "unknown dishonest attribute");
            }
        } else if (key == "repetitions") {
            cfg.repetitions = detail::parse_uint(key, value);
        } else if (key == "seed") {
            cfg.seed = detail::parse_uint(key, value);
        } else if (key == "output") {
            cfg.output = value;
        } else if (key == "format") {
            if (value != "text" && value != "csv") config_error(key, "unknown format");
            cfg.format = value;
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "'");
        }
    }

    if (!attack_script.empty()) {
        cfg.attack.scripted_bases = BitVec::from_hex(attack_script, cfg.params.rounds);
    }
    for (const auto& [player, hex] : dishonest_basis) {
        dishonest_slot(player).scripted_basis = BitVec::from_hex(hex, cfg.params.rounds);
    }
    for (const auto& [player, hex] : dishonest_value) {
        dishonest_slot(player).scripted_value = BitVec::from_hex(hex, cfg.params.rounds);
    }
    return cfg;
}

// ---- report --------------------------------------------------------------

struct RunSummary {
    std::uint64_t run = 0;
    std::uint64_t seed = 0;
    AbortStage abort = AbortStage::none;
    std::uint64_t inconclusive = 0;
    std::uint64_t sifted = 0;
    std::uint64_t checked = 0;
    std::uint64_t key_rounds = 0;
    std::uint64_t syndrome_bits = 0;
    double qber = std::numeric_limits<double>::quiet_NaN();
    bool decode_failed = false;
    int shares_zero = -1; // 1: present shares cancel, 0: violation, -1: no shares
};

// Aggregated run outcomes. Each empirical rate sits next to its analytic
// counterpart where one exists: the abort rate next to the mean
// robustness bound over runs that reached estimation, and the share
// cancellation violations next to the correctness failure probability.
struct ExperimentReport {
    std::uint64_t repetitions = 0;
    std::uint64_t eta = 0;
    std::vector<RunSummary> runs;

    std::array<std::uint64_t, 5> abort_counts{}; // indexed by AbortStage
    double abort_rate = 0.0;
    double abort_bound_mean = std::numeric_limits<double>::quiet_NaN();
    double mean_q = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t qhist_na = 0;
    // Bins of width 0.01 from 0; the last bin collects everything at 0.5
    // and above.
    std::array<std::uint64_t, 51> qhist{};
    std::uint64_t xor_violations = 0;
    std::uint64_t decode_failures = 0;
    double correctness_bound = 0.0; // 2^-eta
};

namespace detail {

inline std::string format_real(double v) {
    if (std::isnan(v)) return "na";
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_report_real(const std::string& token) {
    if (token == "na") return std::numeric_limits<double>::quiet_NaN();
    return std::stod(token);
}

inline AbortStage abort_stage_from_name(const std::string& name) {
    for (int s = 0; s < 5; ++s) {
        const auto stage = static_cast<AbortStage>(s);
        if (name == abort_stage_name(stage)) return stage;
    }
    throw std::invalid_argument("report: unknown abort stage '" + name + "'");
}

// Read "<keyword> <value>" off a stream, enforcing the keyword.
inline std::string expect_field(std::istream& in, const char* keyword) {
    std::string word, value;
    if (!(in >> word) || word != keyword || !(in >> value)) {
        throw std::invalid_argument(std::string("report: expected field '") + keyword + "'");
    }
    return value;
}

} // namespace detail

// Recompute every aggregate from the per-run summaries. The analytic
// abort bound is averaged over runs that reached estimation, evaluated at
// each run's realized shape; it is left as `na` when no run got that far
// or the rates leave no margin to bound.
inline void compute_aggregates(ExperimentReport& report, const ProtocolParams& params) {
    report.abort_counts = {};
    report.qhist = {};
    report.qhist_na = 0;
    report.xor_violations = 0;
    report.decode_failures = 0;
    report.correctness_bound = std::exp2(-static_cast<double>(report.eta));

    std::uint64_t aborted = 0;
    double q_sum = 0.0;
    std::uint64_t q_count = 0;
    double bound_sum = 0.0;
    std::uint64_t bound_count = 0;

    for (const RunSummary& run : report.runs) {
        report.abort_counts[static_cast<std::size_t>(run.abort)] += 1;
        if (run.abort != AbortStage::none) ++aborted;
        if (std::isnan(run.qber)) {
            ++report.qhist_na;
        } else {
            q_sum += run.qber;
            ++q_count;
            const auto bin = static_cast<std::size_t>(run.qber * 100.0);
            report.qhist[std::min<std::size_t>(bin, 50)] += 1;
        }
        if (run.shares_zero == 0) ++report.xor_violations;
        if (run.decode_failed) ++report.decode_failures;

        if (run.checked > 0 && run.key_rounds > 0 && params.delta + params.nu < 0.5) {
            BoundInputs in;
            in.rounds = run.inconclusive + run.sifted;
            in.check_drawn = params.tau_prime;
            in.sifted = run.sifted;
            in.checked = run.checked;
            in.key_rounds = run.key_rounds;
            in.delta = params.delta;
            in.nu = params.nu;
            in.noise = params.noise;
            in.eta = params.eta;
            in.chi = run.syndrome_bits;
            in.key_length = params.key_length;
            bound_sum += abort_bound(in).total;
            ++bound_count;
        }
    }

    const auto n = static_cast<double>(report.runs.size());
    report.abort_rate = report.runs.empty() ? 0.0 : static_cast<double>(aborted) / n;
    report.mean_q = q_count == 0 ? std::numeric_limits<double>::quiet_NaN() : q_sum / static_cast<double>(q_count);
    report.abort_bound_mean = bound_count == 0 ? std::numeric_limits<double>::quiet_NaN()
                                               : bound_sum / static_cast<double>(bound_count);
}

// Execute `repetitions` sessions under per-run seeds derived from the
// master seed, and aggregate. Run r always sees the same seed regardless
// of how many other runs the experiment requests.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.params.validate(config.variant);
    config.attack.validate(config.params);

    ExperimentReport report;
    report.repetitions = config.repetitions;
    report.eta = config.params.eta;
    report.runs.reserve(config.repetitions);

    for (std::uint64_t r = 0; r < config.repetitions; ++r) {
        const std::uint64_t seed = derive_seed(config.seed, r);
        const SessionOutcome out = run_session(config.params, config.variant, config.attack, seed);

        RunSummary run;
        run.run = r;
        run.seed = seed;
        run.abort = out.stats.abort;
        run.inconclusive = out.stats.inconclusive;
        run.sifted = out.stats.sifted;
        run.checked = out.stats.checked;
        run.key_rounds = out.stats.key_rounds;
        run.syndrome_bits = out.stats.syndrome_bits;
        run.qber = out.stats.qber;
        run.decode_failed = out.stats.decode_failed;
        if (out.success() && !out.shares.empty()) {
            BitVec sum(config.params.key_length);
            for (const auto& share : out.shares) {
                if (share) sum ^= *share;
            }
            run.shares_zero = sum.any() ? 0 : 1;
        }
        report.runs.push_back(std::move(run));
    }

    compute_aggregates(report, config.params);
    return report;
}

// ---- serialization -------------------------------------------------------

// Structured text: a handful of tagged lines, one per run plus the
// aggregates. Real numbers print with 17 significant digits so parsing
// the text back reproduces the report bit for bit.
inline std::string report_to_text(const ExperimentReport& report) {
    using detail::format_real;
    std::string out;
    out += "runs " + std::to_string(report.repetitions) + "\n";
    out += "eta " + std::to_string(report.eta) + "\n";
    for (const RunSummary& run : report.runs) {
        out += "run " + std::to_string(run.run);
        out += " seed " + std::to_string(run.seed);
        out += " abort " + std::string(abort_stage_name(run.abort));
        out += " inconclusive " + std::to_string(run.inconclusive);
        out += " sifted " + std::to_string(run.sifted);
        out += " checked " + std::to_string(run.checked);
        out += " key_rounds " + std::to_string(run.key_rounds);
        out += " syndrome_bits " + std::to_string(run.syndrome_bits);
        out += " qber " + format_real(run.qber);
        out += " decode_failed " + std::to_string(run.decode_failed ? 1 : 0);
        out += " shares_zero ";
        out += run.shares_zero < 0 ? "na" : std::to_string(run.shares_zero);
        out += "\n";
    }
    out += "aborts";
    for (int s = 0; s < 5; ++s) {
        out += " " + std::string(abort_stage_name(static_cast<AbortStage>(s))) + " " +
               std::to_string(report.abort_counts[static_cast<std::size_t>(s)]);
    }
    out += "\n";
    out += "abort_rate " + format_real(report.abort_rate);
    out += " abort_bound_mean " + format_real(report.abort_bound_mean) + "\n";
    out += "mean_q " + format_real(report.mean_q) + "\n";
    out += "qhist na " + std::to_string(report.qhist_na);
    for (const std::uint64_t count : report.qhist) out += " " + std::to_string(count);
    out += "\n";
    out += "xor_violations " + std::to_string(report.xor_violations);
    out += " correctness_bound " + format_real(report.correctness_bound) + "\n";
    out += "decode_failures " + std::to_string(report.decode_failures) + "\n";
    return out;
}

// Comma-separated table: a header plus one row per run; aggregates stay
// in the text format.
inline std::string report_to_csv(const ExperimentReport& report) {
    using detail::format_real;
    std::string out =
        "run,seed,abort,inconclusive,sifted,checked,key_rounds,syndrome_bits,qber,"
        "decode_failed,shares_zero\n";
    for (const RunSummary& run : report.runs) {
        out += std::to_string(run.run) + "," + std::to_string(run.seed) + "," +
               abort_stage_name(run.abort) + "," + std::to_string(run.inconclusive) + "," +
               std::to_string(run.sifted) + "," + std::to_string(run.checked) + "," +
               std::to_string(run.key_rounds) + "," + std::to_string(run.syndrome_bits) + "," +
               format_real(run.qber) + "," + std::to_string(run.decode_failed ? 1 : 0) + "," +
               (run.shares_zero < 0 ? "na" : std::to_string(run.shares_zero)) + "\n";
    }
    return out;
}

// Inverse of report_to_text. Values are taken literally — aggregates are
// not recomputed — so serialize(parse(serialize(x))) == serialize(x).
inline ExperimentReport parse_report(const std::string& text) {
    using detail::expect_field;
    ExperimentReport report;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::stringstream in(line);
        std::string tag;
        in >> tag;
        if (tag == "runs") {
            in >> report.repetitions;
        } else if (tag == "eta") {
            in >> report.eta;
        } else if (tag == "run") {
            RunSummary run;
            in >> run.run;
            run.seed = std::stoull(expect_field(in, "seed"));
            run.abort = detail::abort_stage_from_name(expect_field(in, "abort"));
            run.inconclusive = std::stoull(expect_field(in, "inconclusive"));
            run.sifted = std::stoull(expect_field(in, "sifted"));
            run.checked = std::stoull(expect_field(in, "checked"));
            run.key_rounds = std::stoull(expect_field(in, "key_rounds"));
            run.syndrome_bits = std::stoull(expect_field(in, "syndrome_bits"));
            run.qber = detail::parse_report_real(expect_field(in, "qber"));
            run.decode_failed = expect_field(in, "decode_failed") == "1";
            const std::string shares = expect_field(in, "shares_zero");
            run.shares_zero = shares == "na" ? -1 : (shares == "1" ? 1 : 0);
            report.runs.push_back(std::move(run));
        } else if (tag == "aborts") {
            for (int s = 0; s < 5; ++s) {
                report.abort_counts[static_cast<std::size_t>(s)] =
                    std::stoull(expect_field(in, abort_stage_name(static_cast<AbortStage>(s))));
            }
        } else if (tag == "abort_rate") {
            std::string value;
            in >> value;
            report.abort_rate = detail::parse_report_real(value);
            report.abort_bound_mean = detail::parse_report_real(expect_field(in, "abort_bound_mean"));
        } else if (tag == "mean_q") {
            std::string value;
            in >> value;
            report.mean_q = detail::parse_report_real(value);
        } else if (tag == "qhist") {
            report.qhist_na = std::stoull(expect_field(in, "na"));
            for (std::uint64_t& count : report.qhist) in >> count;
        } else if (tag == "xor_violations") {
            in >> report.xor_violations;
            report.correctness_bound = detail::parse_report_real(expect_field(in, "correctness_bound"));
        } else if (tag == "decode_failures") {
            in >> report.decode_failures;
        } else {
            throw std::invalid_argument("report: unknown line tag '" + tag + "'");
        }
        if (in.fail()) throw std::invalid_argument("report: malformed line '" + line + "'");
    }
    return report;
}

// Write a serialized report to disk, throwing on any IO failure.
inline void write_report_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot open '" + path + "'");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("report: write failed for '" + path + "'");
}

} // namespace qline
