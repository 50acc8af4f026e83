// qline — deterministic simulator and calculator for the shares-of-zero
// protocol.
//
// Subcommands:
//   run    execute batch sessions from a config file and emit a report
//   calc   closed-form bounds, share-length and round-count planning
//   attack like `run`, but refuses configurations without an adversary
//   share  one-time-pad publication and reconstruction over a share set
//   veto   anonymous veto, one announcement round per player
//   keyex  pairwise key establishment from a share set
//   trace  dump one session's channel transcript
//
// Exit codes: 0 success, 2 configuration or usage error, 3 protocol-level
// abort in single-run mode. Reports go to stdout (or --output); timing
// goes to stderr so identical configurations produce identical output.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qline/apps.hpp"
#include "qline/engine.hpp"
#include "qline/harness.hpp"
#include "qline/security.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;

// Stream tags for the application-layer channel and veto randomness,
// disjoint from the session-internal streams.
constexpr std::uint64_t kAppChannelStream = 0xa0001;
constexpr std::uint64_t kAppRandomStream = 0xa0002;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

// Print to stdout, or write to a file when a path was requested.
void emit(const std::string& text, const std::string& output) {
    if (output.empty()) {
        std::fputs(text.c_str(), stdout);
    } else {
        qline::write_report_file(output, text);
    }
}

std::string real_line(const char* tag, double value) {
    return std::string(tag) + " " + qline::detail::format_real(value) + "\n";
}

// Options shared by the session-running subcommands.
struct CommonOptions {
    std::string config_path;
    std::string output;
    std::optional<std::uint64_t> seed;
};

qline::ExperimentConfig load_config(const CommonOptions& opt) {
    qline::ExperimentConfig cfg = qline::parse_experiment_config(read_file(opt.config_path));
    if (opt.seed) cfg.seed = *opt.seed;
    if (!opt.output.empty()) cfg.output = opt.output;
    return cfg;
}

// ---- share persistence -----------------------------------------------------

// One line per persisted share: "run=<r> player=<j> share=<hex>". Widths
// come from the configuration's share length.
std::string shares_to_text(const qline::ExperimentConfig& cfg) {
    std::string out;
    for (std::uint64_t r = 0; r < cfg.repetitions; ++r) {
        const std::uint64_t seed = qline::derive_seed(cfg.seed, r);
        const qline::SessionOutcome outcome =
            qline::run_session(cfg.params, cfg.variant, cfg.attack, seed);
        if (!outcome.success()) continue;
        for (std::size_t j = 0; j < outcome.shares.size(); ++j) {
            if (!outcome.shares[j]) continue;
            out += "run=" + std::to_string(r) + " player=" + std::to_string(j) +
                   " share=" + outcome.shares[j]->to_hex() + "\n";
        }
    }
    return out;
}

std::map<std::uint64_t, qline::ShareSet> parse_shares_text(const std::string& text,
                                                           std::size_t players,
                                                           std::size_t width) {
    std::map<std::uint64_t, qline::ShareSet> sets;
    std::stringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        std::stringstream in(line);
        std::string run_field, player_field, share_field;
        if (!(in >> run_field >> player_field >> share_field) ||
            run_field.rfind("run=", 0) != 0 || player_field.rfind("player=", 0) != 0 ||
            share_field.rfind("share=", 0) != 0) {
            throw std::invalid_argument("shares: malformed line '" + line + "'");
        }
        const std::uint64_t run = std::stoull(run_field.substr(4));
        const std::size_t player = std::stoull(player_field.substr(7));
        if (player >= players) throw std::invalid_argument("shares: player id out of range");
        qline::ShareSet& set = sets[run];
        if (set.shares.empty()) {
            set.session_id = run;
            set.shares.resize(players);
        }
        set.shares[player] = qline::BitVec::from_hex(share_field.substr(6), width);
    }
    return sets;
}

// Obtain the share set for logical run `run`: from the persisted file
// when one was given, otherwise by executing the session. A session that
// aborts surfaces as exit code 3 through SessionAborted.
struct SessionAborted {
    qline::AbortStage stage;
};

qline::ShareSet obtain_share_set(const qline::ExperimentConfig& cfg, const std::string& shares_path,
                                 std::uint64_t run) {
    if (!shares_path.empty()) {
        auto sets = parse_shares_text(read_file(shares_path), cfg.params.players,
                                      cfg.params.key_length);
        const auto it = sets.find(run);
        if (it == sets.end()) {
            throw std::invalid_argument("shares: no entries for run " + std::to_string(run));
        }
        return it->second;
    }
    const std::uint64_t seed = qline::derive_seed(cfg.seed, run);
    const qline::SessionOutcome outcome =
        qline::run_session(cfg.params, cfg.variant, cfg.attack, seed);
    if (!outcome.success()) throw SessionAborted{outcome.stats.abort};
    return qline::make_share_set(outcome, run);
}

// ---- run / attack ----------------------------------------------------------

int cmd_run(const CommonOptions& opt, const std::string& format_override,
            std::optional<std::uint64_t> repetitions_override, const std::string& shares_out,
            bool require_adversary) {
    qline::ExperimentConfig cfg = load_config(opt);
    if (repetitions_override) cfg.repetitions = *repetitions_override;
    if (!format_override.empty()) cfg.format = format_override;
    if (require_adversary && cfg.attack.kind == qline::AttackKind::none &&
        cfg.attack.dishonest.empty() && cfg.attack.blocked_stage.empty() &&
        !cfg.attack.coin_abort) {
        throw std::invalid_argument("attack: configuration specifies no adversary");
    }

    const auto start = std::chrono::steady_clock::now();
    const qline::ExperimentReport report = qline::run_experiment(cfg);
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    emit(cfg.format == "csv" ? qline::report_to_csv(report) : qline::report_to_text(report),
         cfg.output);
    if (!shares_out.empty()) {
        qline::write_report_file(shares_out, shares_to_text(cfg));
    }
    std::fprintf(stderr, "elapsed_ms %lld\n", static_cast<long long>(elapsed.count()));

    if (cfg.repetitions == 1 && !report.runs.empty() &&
        report.runs.front().abort != qline::AbortStage::none) {
        std::fprintf(stderr, "abort %s\n", qline::abort_stage_name(report.runs.front().abort));
        return kExitAbort;
    }
    return kExitOk;
}

// ---- calc -------------------------------------------------------------------

// Expected session shape for a configuration: half the rounds sift
// through and half the drawn check positions survive.
qline::BoundInputs expected_shape(const qline::ExperimentConfig& cfg, double observed_q,
                                  std::uint64_t honest_count, double p_ec) {
    qline::BoundInputs in;
    in.rounds = cfg.params.rounds;
    in.check_drawn = cfg.params.tau_prime;
    in.sifted = cfg.params.rounds / 2;
    in.checked = cfg.params.tau_prime / 2;
    in.key_rounds = (cfg.params.rounds - cfg.params.tau_prime) / 2;
    in.delta = cfg.params.delta;
    in.nu = cfg.params.nu;
    in.noise = cfg.params.noise;
    in.observed_q = observed_q;
    in.eta = cfg.params.eta;
    in.chi = qline::chi_for_block(in.key_rounds, cfg.params.correction_rate(),
                                  cfg.params.code.overhead);
    in.key_length = cfg.params.key_length;
    in.honest_count = honest_count;
    in.p_ec = p_ec;
    return in;
}

// `with_key` is off when the caller is about to solve for the key length:
// echoing the configured value would put two different meanings on one tag.
std::string shape_text(const qline::BoundInputs& in, bool with_key = true) {
    std::string out;
    out += "rounds " + std::to_string(in.rounds) + "\n";
    out += "check_drawn " + std::to_string(in.check_drawn) + "\n";
    out += "sifted " + std::to_string(in.sifted) + "\n";
    out += "checked " + std::to_string(in.checked) + "\n";
    out += "key_rounds " + std::to_string(in.key_rounds) + "\n";
    out += "chi " + std::to_string(in.chi) + "\n";
    if (with_key) out += "key_length " + std::to_string(in.key_length) + "\n";
    out += "honest_count " + std::to_string(in.honest_count) + "\n";
    out += real_line("q", in.q());
    return out;
}

std::string abort_text(const qline::AbortBound& bound, const char* prefix) {
    const std::string p(prefix);
    std::string out;
    out += real_line((p + "p1").c_str(), bound.p1);
    out += real_line((p + "p2").c_str(), bound.p2);
    out += real_line((p + "p3").c_str(), bound.p3);
    out += real_line((p + "p_ec").c_str(), bound.p_ec);
    out += real_line((p + "total").c_str(), bound.total);
    out += p + "estimation_vacuous " + (bound.estimation_vacuous ? "1" : "0") + "\n";
    out += p + "correction_vacuous " + (bound.correction_vacuous ? "1" : "0") + "\n";
    return out;
}

int cmd_calc(const CommonOptions& opt, const std::string& mode, std::optional<double> target,
             double observed_q, std::optional<std::uint64_t> honest_override, double p_ec) {
    const qline::ExperimentConfig cfg = load_config(opt);
    const std::uint64_t honest_count =
        honest_override ? *honest_override : cfg.params.honest_players().size();
    qline::BoundInputs in = expected_shape(cfg, observed_q, honest_count, p_ec);
    std::string out;

    if (mode == "bounds") {
        out += shape_text(in);
        out += abort_text(qline::abort_bound(in), "abort_");
        const qline::KeyEpsilon eps = qline::eps_qkd_prime(in);
        out += real_line("smoothing", eps.smoothing);
        out += real_line("hashing", eps.hashing);
        out += real_line("eps_prime", eps.value);
        out += std::string("smoothing_vacuous ") + (eps.smoothing_vacuous ? "1" : "0") + "\n";
        out += std::string("key_vacuous ") + (eps.key_vacuous ? "1" : "0") + "\n";
        out += real_line("eps_total", qline::eps_total(in));
    } else if (mode == "key") {
        if (!target) throw std::invalid_argument("calc: mode 'key' needs --target");
        out += shape_text(in, /*with_key=*/false);
        out += real_line("target", *target);
        const auto k = qline::solve_key_length(in, *target);
        if (!k) {
            out += "key_length none\n";
        } else {
            out += "key_length " + std::to_string(*k) + "\n";
            in.key_length = *k;
            out += real_line("eps_total", qline::eps_total(in));
        }
    } else if (mode == "rounds") {
        if (!target) throw std::invalid_argument("calc: mode 'rounds' needs --target");
        out += "key_length " + std::to_string(cfg.params.key_length) + "\n";
        out += real_line("target", *target);
        const auto plan = qline::solve_round_count(cfg.params.key_length, *target,
                                                   cfg.params.delta, cfg.params.nu,
                                                   cfg.params.noise, cfg.params.eta,
                                                   cfg.params.code.overhead, honest_count);
        if (!plan) {
            out += "plan none\n";
        } else {
            out += "plan_rounds " + std::to_string(plan->rounds) + "\n";
            out += "plan_check_drawn " + std::to_string(plan->check_drawn) + "\n";
            out += "plan_sifted " + std::to_string(plan->sifted) + "\n";
            out += "plan_checked " + std::to_string(plan->checked) + "\n";
            out += "plan_key_rounds " + std::to_string(plan->key_rounds) + "\n";
            out += "plan_chi " + std::to_string(plan->chi) + "\n";
            out += real_line("plan_eps_total", plan->eps_value);
            out += abort_text(plan->abort, "plan_abort_");
        }
    } else {
        throw std::invalid_argument("calc: unknown mode '" + mode + "'");
    }

    emit(out, opt.output);
    return kExitOk;
}

// ---- share / veto / keyex ---------------------------------------------------

int cmd_share(const CommonOptions& opt, const std::string& shares_path, std::uint64_t run,
              std::uint64_t dealer, const std::string& secret_hex) {
    const qline::ExperimentConfig cfg = load_config(opt);
    const qline::ShareSet set = obtain_share_set(cfg, shares_path, run);
    const std::size_t width = cfg.params.key_length;
    const qline::BitVec secret =
        secret_hex.empty() ? qline::BitVec(width) : qline::BitVec::from_hex(secret_hex, width);

    qline::Channel channel(qline::derive_seed(cfg.seed, kAppChannelStream));
    const qline::BitVec ciphertext = qline::share_message(dealer, secret, set, channel);
    const qline::BitVec restored = qline::reconstruct_message(dealer, ciphertext, set);

    std::string out;
    out += "run " + std::to_string(run) + "\n";
    out += "dealer " + std::to_string(dealer) + "\n";
    out += "secret " + secret.to_hex() + "\n";
    out += "ciphertext " + ciphertext.to_hex() + "\n";
    out += "reconstructed " + restored.to_hex() + "\n";
    out += std::string("match ") + (restored == secret ? "1" : "0") + "\n";
    emit(out, opt.output);
    return kExitOk;
}

int cmd_veto(const CommonOptions& opt, const std::string& shares_path,
             const std::string& flag_text) {
    const qline::ExperimentConfig cfg = load_config(opt);
    const std::size_t players = cfg.params.players;
    if (flag_text.size() != players) {
        throw std::invalid_argument("veto: --flags needs one 0/1 per player");
    }
    std::vector<bool> flags(players);
    for (std::size_t j = 0; j < players; ++j) {
        if (flag_text[j] != '0' && flag_text[j] != '1') {
            throw std::invalid_argument("veto: --flags must be a 0/1 string");
        }
        flags[j] = flag_text[j] == '1';
    }

    std::vector<qline::ShareSet> sets;
    sets.reserve(players);
    for (std::uint64_t r = 0; r < players; ++r) {
        sets.push_back(obtain_share_set(cfg, shares_path, r));
    }
    qline::Channel channel(qline::derive_seed(cfg.seed, kAppChannelStream));
    qline::Rng rng(qline::derive_seed(cfg.seed, kAppRandomStream));
    const bool vetoed = qline::anonymous_veto(sets, flags, channel, rng);

    std::string out;
    out += "players " + std::to_string(players) + "\n";
    out += "flags " + flag_text + "\n";
    out += std::string("vetoed ") + (vetoed ? "1" : "0") + "\n";
    emit(out, opt.output);
    return kExitOk;
}

int cmd_keyex(const CommonOptions& opt, const std::string& shares_path, std::uint64_t run,
              const std::string& pair_text) {
    const qline::ExperimentConfig cfg = load_config(opt);
    const auto comma = pair_text.find(',');
    if (comma == std::string::npos) {
        throw std::invalid_argument("keyex: --pair needs the form a,b");
    }
    const std::uint64_t a = std::stoull(pair_text.substr(0, comma));
    const std::uint64_t b = std::stoull(pair_text.substr(comma + 1));

    const qline::ShareSet set = obtain_share_set(cfg, shares_path, run);
    qline::Channel channel(qline::derive_seed(cfg.seed, kAppChannelStream));
    const qline::KeyPair key = qline::establish_key(set, a, b, channel);

    std::string out;
    out += "run " + std::to_string(run) + "\n";
    out += "pair " + std::to_string(a) + " " + std::to_string(b) + "\n";
    out += "key_a " + key.at_a.to_hex() + "\n";
    out += "key_b " + key.at_b.to_hex() + "\n";
    out += std::string("match ") + (key.matched() ? "1" : "0") + "\n";
    emit(out, opt.output);
    return kExitOk;
}

// ---- trace ------------------------------------------------------------------

int cmd_trace(const CommonOptions& opt, std::uint64_t run) {
    const qline::ExperimentConfig cfg = load_config(opt);
    const std::uint64_t seed = qline::derive_seed(cfg.seed, run);
    const qline::SessionOutcome outcome =
        qline::run_session(cfg.params, cfg.variant, cfg.attack, seed);
    emit(outcome.transcript.to_text(), opt.output);
    std::fprintf(stderr, "abort %s\n", qline::abort_stage_name(outcome.stats.abort));
    if (!outcome.success()) return kExitAbort;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic simulator for a line-topology secret-sharing protocol"};
    app.require_subcommand(1);

    CommonOptions run_opt, attack_opt, calc_opt, share_opt, veto_opt, keyex_opt, trace_opt;

    // run
    auto* run_cmd = app.add_subcommand("run", "execute sessions from a config file");
    run_cmd->add_option("--config", run_opt.config_path, "config file")->required();
    run_cmd->add_option("--seed", run_opt.seed, "override the master seed");
    run_cmd->add_option("--output", run_opt.output, "write the report to this file");
    std::string run_format;
    run_cmd->add_option("--format", run_format, "report format: text or csv");
    std::optional<std::uint64_t> run_reps;
    run_cmd->add_option("--repetitions", run_reps, "override the repetition count");
    std::string run_shares_out;
    run_cmd->add_option("--shares-out", run_shares_out, "persist successful runs' shares here");

    // attack
    auto* attack_cmd = app.add_subcommand("attack", "run sessions under a configured adversary");
    attack_cmd->add_option("--config", attack_opt.config_path, "config file")->required();
    attack_cmd->add_option("--seed", attack_opt.seed, "override the master seed");
    attack_cmd->add_option("--output", attack_opt.output, "write the report to this file");
    std::string attack_format;
    attack_cmd->add_option("--format", attack_format, "report format: text or csv");
    std::optional<std::uint64_t> attack_reps;
    attack_cmd->add_option("--repetitions", attack_reps, "override the repetition count");

    // calc
    auto* calc_cmd = app.add_subcommand("calc", "evaluate bounds or solve for sizes");
    calc_cmd->add_option("--config", calc_opt.config_path, "config file")->required();
    calc_cmd->add_option("--output", calc_opt.output, "write the result to this file");
    std::string calc_mode = "bounds";
    calc_cmd->add_option("--mode", calc_mode, "bounds, key, or rounds");
    std::optional<double> calc_target;
    calc_cmd->add_option("--target", calc_target, "advantage target for key/rounds modes");
    double calc_observed_q = std::numeric_limits<double>::quiet_NaN();
    calc_cmd->add_option("--observed-q", calc_observed_q, "measured error fraction");
    std::optional<std::uint64_t> calc_honest;
    calc_cmd->add_option("--honest-count", calc_honest, "override the honest player count");
    double calc_p_ec = 0.0;
    calc_cmd->add_option("--p-ec", calc_p_ec, "decoder failure rate for the abort bound");

    // share
    auto* share_cmd = app.add_subcommand("share", "publish and reconstruct a one-time-pad secret");
    share_cmd->add_option("--config", share_opt.config_path, "config file")->required();
    share_cmd->add_option("--seed", share_opt.seed, "override the master seed");
    share_cmd->add_option("--output", share_opt.output, "write the result to this file");
    std::string share_shares;
    share_cmd->add_option("--shares", share_shares, "persisted shares file to reuse");
    std::uint64_t share_run = 0;
    share_cmd->add_option("--run", share_run, "which run's share set to use");
    std::uint64_t share_dealer = 0;
    share_cmd->add_option("--dealer", share_dealer, "dealing player");
    std::string share_secret;
    share_cmd->add_option("--secret", share_secret, "secret as hex (defaults to all zeros)");

    // veto
    auto* veto_cmd = app.add_subcommand("veto", "anonymous veto over per-player share sets");
    veto_cmd->add_option("--config", veto_opt.config_path, "config file")->required();
    veto_cmd->add_option("--seed", veto_opt.seed, "override the master seed");
    veto_cmd->add_option("--output", veto_opt.output, "write the result to this file");
    std::string veto_shares;
    veto_cmd->add_option("--shares", veto_shares, "persisted shares file to reuse");
    std::string veto_flags;
    veto_cmd->add_option("--flags", veto_flags, "0/1 veto flag per player")->required();

    // keyex
    auto* keyex_cmd = app.add_subcommand("keyex", "establish a pairwise key from a share set");
    keyex_cmd->add_option("--config", keyex_opt.config_path, "config file")->required();
    keyex_cmd->add_option("--seed", keyex_opt.seed, "override the master seed");
    keyex_cmd->add_option("--output", keyex_opt.output, "write the result to this file");
    std::string keyex_shares;
    keyex_cmd->add_option("--shares", keyex_shares, "persisted shares file to reuse");
    std::uint64_t keyex_run = 0;
    keyex_cmd->add_option("--run", keyex_run, "which run's share set to use");
    std::string keyex_pair;
    keyex_cmd->add_option("--pair", keyex_pair, "endpoint players as a,b")->required();

    // trace
    auto* trace_cmd = app.add_subcommand("trace", "dump one session's channel transcript");
    trace_cmd->add_option("--config", trace_opt.config_path, "config file")->required();
    trace_cmd->add_option("--seed", trace_opt.seed, "override the master seed");
    trace_cmd->add_option("--output", trace_opt.output, "write the transcript to this file");
    std::uint64_t trace_run = 0;
    trace_cmd->add_option("--run", trace_run, "which run to trace");

    try {
        app.parse(argc, argv);
        if (*run_cmd) return cmd_run(run_opt, run_format, run_reps, run_shares_out, false);
        if (*attack_cmd) return cmd_run(attack_opt, attack_format, attack_reps, "", true);
        if (*calc_cmd) {
            return cmd_calc(calc_opt, calc_mode, calc_target, calc_observed_q, calc_honest,
                            calc_p_ec);
        }
        if (*share_cmd) return cmd_share(share_opt, share_shares, share_run, share_dealer, share_secret);
        if (*veto_cmd) return cmd_veto(veto_opt, veto_shares, veto_flags);
        if (*keyex_cmd) return cmd_keyex(keyex_opt, keyex_shares, keyex_run, keyex_pair);
        if (*trace_cmd) return cmd_trace(trace_opt, trace_run);
        return kExitConfig;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    } catch (const SessionAborted& aborted) {
        std::fprintf(stderr, "abort %s\n", qline::abort_stage_name(aborted.stage));
        return kExitAbort;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
}
