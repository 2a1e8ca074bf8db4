// Command-line front end: design, evaluate, simulate, value-dump, verify, frontier.
//
// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 solver failure, 4 best-effort result only.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgseq/errors.hpp"
#include "rgseq/evaluator.hpp"
#include "rgseq/frontier.hpp"
#include "rgseq/io.hpp"
#include "rgseq/simulate.hpp"
#include "rgseq/test_rules.hpp"
#include "rgseq/threshold_solver.hpp"
#include "rgseq/value_iteration.hpp"
#include "rgseq/verify.hpp"

using namespace rgseq;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;
constexpr int kExitBestEffort = 4;

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ConfigError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::BadThresholds:
        case ErrorCode::NotAPmf:
        case ErrorCode::IndistinguishableHypotheses:
        case ErrorCode::ZeroCost:
        case ErrorCode::InvalidHorizon:
        case ErrorCode::AtomExplosion:
            return kExitConfig;
        default:
            return kExitSolver;
    }
}

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

template <class T>
json to_j(const T& x) {
    return x;
}
template <class T>
json to_j(const std::optional<T>& x) {
    return x ? json(*x) : json(nullptr);
}

// Registers options on a subcommand and remembers how to write their resolved
// values back out, so every report carries a replayable configuration.
class Flags {
public:
    explicit Flags(CLI::App* app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& name, T& ref, const std::string& desc) {
        emit_.push_back([name, &ref](json& j) { j[name] = to_j(ref); });
        return app_->add_option("--" + name, ref, desc);
    }
    CLI::Option* flag(const std::string& name, bool& ref, const std::string& desc) {
        emit_.push_back([name, &ref](json& j) { j[name] = ref; });
        return app_->add_flag("--" + name, ref, desc);
    }

    json resolved() const {
        json j = json::object();
        for (const auto& e : emit_) e(j);
        return j;
    }
    CLI::App* app() const { return app_; }

private:
    CLI::App* app_;
    std::vector<std::function<void(json&)>> emit_;
};

struct Options {
    std::string model;
    std::string out;
    std::size_t grid_points = 2048;
    double tol = 1e-10;
    std::optional<double> lambda0, lambda1, c, A, B;
    std::optional<int> horizon;
    std::string stop_tie = "stop";
    std::string rule_path;
    std::string rule_out;
    std::string csv;
    int cap = 10000;
    double mass_tol = 1e-12;
    std::uint64_t reps = 100000;
    std::uint64_t seed = 20240101;
    unsigned threads = 0;
    std::string hypothesis = "both";
    std::uint64_t verify_seed = 12345;
    int verify_cap = 500;
    int max_horizon = 20;
    int brute_force_horizon = 3;
    bool no_mc = false;
    double alpha = 0.05;
    double beta = 0.05;
    std::optional<double> lambda_max;
    double rel_tol = 1e-2;
};

void emit(const std::string& path, const json& report) {
    const std::string text = report.dump(2) + "\n";
    if (path.empty()) {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

GridSpec grid_spec(const Options& o) {
    GridSpec g;
    g.points = o.grid_points;
    return g;
}

FixedPointOptions fixed_point(const Options& o) {
    FixedPointOptions f;
    f.tol = o.tol;
    f.grid = grid_spec(o);
    return f;
}

// Loads the model; --c (or the model's design block) replaces the cost model
// by a constant per-stage cost.
ModelSpec model_with_cost(const Options& o) {
    if (o.model.empty()) config_error("--model is required");
    ModelSpec spec = load_model(o.model);
    std::optional<double> c = o.c;
    if (!c && spec.design && spec.design->c) c = spec.design->c;
    if (c) {
        if (!(*c > 0.0)) config_error("--c must be positive");
        spec.cost = CostModel::constant(*c);
    }
    return spec;
}

DesignParams resolve_params(const Options& o, const ModelSpec& spec,
                            std::optional<DesignParams> fallback = std::nullopt) {
    DesignParams p;
    if (o.lambda0) {
        p.lambda0 = *o.lambda0;
    } else if (spec.design) {
        p.lambda0 = spec.design->lambda0;
    } else if (fallback) {
        p.lambda0 = fallback->lambda0;
    } else {
        config_error("no lambda0: pass --lambda0 or add a design block to the model");
    }
    if (o.lambda1) {
        p.lambda1 = *o.lambda1;
    } else if (spec.design) {
        p.lambda1 = spec.design->lambda1;
    } else if (fallback) {
        p.lambda1 = fallback->lambda1;
    }
    if (!(p.lambda0 > 0.0) || !(p.lambda1 > 0.0)) config_error("lambda0 and lambda1 must be positive");
    return p;
}

StopTie parse_stop_tie(const std::string& s) {
    if (s == "stop") return StopTie::Stop;
    if (s == "continue") return StopTie::Continue;
    config_error("--stop-tie must be stop or continue");
}

void merge(json& report, const json& part) {
    for (const auto& [k, v] : part.items()) report[k] = v;
}

json with_config(const std::string& command, const Flags& flags) {
    json report;
    report["config"] = {{"command", command}, {"flags", flags.resolved()}};
    return report;
}

int cmd_design(const Options& o, const Flags& flags) {
    const ModelSpec spec = model_with_cost(o);
    const KernelSequence kernels = spec.kernels();
    json report = with_config("design", flags);
    std::vector<std::string> warnings;
    if (!kernels.stationary() && !o.horizon) {
        warnings.push_back("stationary design uses the tail group-size law; prefix stages are ignored");
    }
    TestRule rule;

    if (o.A || o.B) {
        if (!(o.A && o.B)) config_error("inverse design needs both --A and --B");
        InverseDesignOptions io;
        io.fixed_point.grid = grid_spec(o);
        io.fixed_point.tol = std::min(o.tol, io.fixed_point.tol);
        const InverseDesign inv = design_from_thresholds(*o.A, *o.B, kernels.tail(), io);
        rule = rsprt(inv.A, inv.B);
        merge(report, to_json(inv));
        report["trivial"] = false;
        report["upper_threshold_exists"] = true;
    } else if (o.horizon) {
        const DesignParams p = resolve_params(o, spec);
        const auto ladder = backward_induction(kernels, p, *o.horizon, grid_spec(o));
        RuleOptions ro;
        ro.stop_tie = parse_stop_tie(o.stop_tie);
        rule = dp_rule_truncated(ladder, ro);
        report["lambda0"] = p.lambda0;
        report["lambda1"] = p.lambda1;
        report["horizon"] = *o.horizon;
        report["lagrangian_lower_bound"] = ladder.lower_bound;
    } else {
        const DesignParams p = resolve_params(o, spec);
        const double c = kernels.tail().mean_cost;
        const StationaryValue value = stationary_value(kernels.tail(), c, p, fixed_point(o));
        RuleOptions ro;
        ro.stop_tie = parse_stop_tie(o.stop_tie);
        report["lambda0"] = p.lambda0;
        report["lambda1"] = p.lambda1;
        report["c"] = c;
        report["fixed_point_iterations"] = value.iterations;
        report["lagrangian_lower_bound"] = lagrangian_lower_bound(value);
        const bool boundary = is_trivial(value) && !is_strictly_trivial(value);
        if (is_strictly_trivial(value) || (boundary && ro.stop_tie == StopTie::Stop)) {
            rule = trivial_rule(p);
            report["trivial"] = true;
            report["A"] = nullptr;
            report["B"] = nullptr;
            warnings.push_back("trivial design: stopping after the first group is optimal");
        } else if (boundary) {
            rule = dp_rule_stationary(value, ro);
            const StageRegion& r = rule.stages.front();
            report["trivial"] = true;
            report["A"] = number_or_null(r.A);
            report["B"] = number_or_null(r.B);
            report["upper_threshold_exists"] = std::isfinite(r.B);
            warnings.push_back("design on the triviality boundary: the tie set is continued");
        } else {
            const Thresholds th = solve_thresholds(value);
            rule = dp_rule_stationary(value, ro);
            merge(report, to_json(th));
            report["trivial"] = false;
            for (const auto& w : th.warnings) warnings.push_back(w);
        }
    }
    report["rule"] = to_json(rule);
    report["warnings"] = warnings;
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    if (!o.rule_out.empty()) write_file(o.rule_out, to_json(rule).dump(2) + "\n");
    emit(o.out, report);
    return kExitOk;
}

int cmd_evaluate(const Options& o, const Flags& flags) {
    const ModelSpec spec = model_with_cost(o);
    if (o.rule_path.empty()) config_error("--rule is required");
    const TestRule rule = load_rule(o.rule_path);
    ExactOcOptions eo;
    eo.cap = o.cap;
    eo.mass_tol = o.mass_tol;
    const OperatingCharacteristics oc = exact_oc(rule, spec.kernels(), eo);
    json report = with_config("evaluate", flags);
    merge(report, to_json(oc));
    if (rule.kind == TestRule::Kind::Stationary) {
        const StageRegion& r = rule.stages.front();
        const double A = std::isfinite(r.B) ? r.A : 0.0;
        report["tail_fit"] = to_json(tail_decay_check(oc.tail0, spec.kernels().tail().hellinger_rate, A));
    }
    if (!o.csv.empty()) {
        std::ostringstream os;
        write_tail_csv(os, oc);
        write_file(o.csv, os.str());
    }
    emit(o.out, report);
    return kExitOk;
}

int cmd_simulate(const Options& o, const Flags& flags) {
    const ModelSpec spec = model_with_cost(o);
    if (o.rule_path.empty()) config_error("--rule is required");
    const TestRule rule = load_rule(o.rule_path);
    if (o.hypothesis != "both" && o.hypothesis != "H0" && o.hypothesis != "H1") {
        config_error("--hypothesis must be H0, H1 or both");
    }
    if (o.reps < 1) config_error("--reps must be at least 1");
    SimulationOptions so;
    so.reps = o.reps;
    so.seed = o.seed;
    so.cap = o.cap;
    so.threads = o.threads;
    json report = with_config("simulate", flags);
    report["seed"] = o.seed;
    report["rng"] = "philox4x32-10";
    json errors = json::object();
    auto est = [&](const char* name, const Estimate& e) {
        report[name] = e.value;
        errors[name] = e.std_error ? json(*e.std_error) : json(nullptr);
    };
    if (o.hypothesis != "H1") {
        const auto r = simulate(rule, spec.model, spec.groups, spec.cost, Hypothesis::H0, so);
        est("alpha", r.reject);
        est("K0", r.K);
        est("E_tau_0", r.E_tau);
        report["H0"] = to_json(r);
    }
    if (o.hypothesis != "H0") {
        const auto r = simulate(rule, spec.model, spec.groups, spec.cost, Hypothesis::H1, so);
        est("beta", r.accept);
        est("K1", r.K);
        est("E_tau_1", r.E_tau);
        report["H1"] = to_json(r);
    }
    report["std_errors"] = errors;
    emit(o.out, report);
    return kExitOk;
}

int cmd_value_dump(const Options& o, const Flags&) {
    const ModelSpec spec = model_with_cost(o);
    const KernelSequence kernels = spec.kernels();
    const DesignParams p = resolve_params(o, spec);
    const StationaryValue value = stationary_value(kernels.tail(), kernels.tail().mean_cost, p, fixed_point(o));
    std::ostringstream os;
    write_value_csv(os, value);
    if (o.csv.empty()) {
        std::cout << os.str();
    } else {
        write_file(o.csv, os.str());
    }
    return kExitOk;
}

int cmd_verify(const Options& o, const Flags& flags) {
    const ModelSpec spec = model_with_cost(o);
    VerifyOptions vo;
    vo.params = resolve_params(o, spec, vo.params);
    vo.grid = grid_spec(o);
    vo.max_horizon = o.max_horizon;
    vo.brute_force_horizon = o.brute_force_horizon;
    vo.mc_reps = o.reps;
    vo.seed = o.verify_seed;
    vo.mc_cap = o.verify_cap;
    vo.run_mc = !o.no_mc;
    const VerifyReport result = run_invariant_suite(spec, vo);
    json report = with_config("verify", flags);
    report["seed"] = o.verify_seed;
    merge(report, result.to_json());
    for (const auto& c : result.checks) {
        const char* s = c.status == CheckResult::Status::Pass   ? "PASS"
                        : c.status == CheckResult::Status::Fail ? "FAIL"
                                                                : "SKIP";
        std::cerr << s << " " << c.name << " margin=" << c.margin << " " << c.detail << "\n";
    }
    emit(o.out, report);
    return result.all_passed() ? kExitOk : kExitVerifyFailed;
}

int cmd_frontier(const Options& o, const Flags& flags) {
    const ModelSpec spec = model_with_cost(o);
    FrontierOptions fo;
    fo.alpha_target = o.alpha;
    fo.beta_target = o.beta;
    if (!(o.alpha > 0.0 && o.alpha < 1.0 && o.beta > 0.0 && o.beta < 1.0)) {
        config_error("--alpha and --beta must lie in (0, 1)");
    }
    fo.grid = grid_spec(o);
    fo.lambda_max = o.lambda_max;
    fo.rel_tol = o.rel_tol;
    fo.oc.cap = o.cap;
    const FrontierResult r = search_frontier(spec.kernels(), fo);
    json report = with_config("frontier", flags);
    report["met"] = r.met;
    report["lambda0"] = r.design.params.lambda0;
    report["lambda1"] = r.design.params.lambda1;
    report["c"] = r.c;
    report["trivial"] = r.design.trivial;
    report["alpha"] = r.design.oc.alpha;
    report["beta"] = r.design.oc.beta;
    report["K0"] = r.design.oc.K0;
    report["K1"] = r.design.oc.K1;
    report["E_tau_0"] = r.design.oc.E_tau_0;
    report["E_tau_1"] = r.design.oc.E_tau_1;
    report["truncation_mass"] = {{"H0", r.design.oc.truncation_mass0}, {"H1", r.design.oc.truncation_mass1}};
    report["probes"] = r.probes;
    report["failed_probes"] = r.failed_probes;
    report["rule"] = to_json(r.design.rule);
    if (!o.rule_out.empty()) write_file(o.rule_out, to_json(r.design.rule).dump(2) + "\n");
    emit(o.out, report);
    if (!r.met) {
        std::cerr << "best effort only: targets not met (alpha=" << r.design.oc.alpha
                  << ", beta=" << r.design.oc.beta << ")\n";
        return kExitBestEffort;
    }
    return kExitOk;
}

// Replays a report's configuration: its flags are placed before the ones on
// the command line, which win on conflict.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
    std::vector<std::string> rest;
    std::string config_path;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) config_error("--config needs a file");
            config_path = args[++i];
        } else {
            rest.push_back(args[i]);
        }
    }
    std::vector<std::string> out{args[0]};
    if (config_path.empty()) {
        out.insert(out.end(), rest.begin(), rest.end());
        return out;
    }
    std::ifstream in(config_path);
    if (!in) config_error("cannot open config file '" + config_path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        config_error(std::string("config file is not valid JSON: ") + e.what());
    }
    if (doc.contains("config")) doc = doc.at("config");
    if (!doc.contains("command") || !doc.at("command").is_string()) config_error("config has no command");
    const std::string command = doc.at("command").get<std::string>();
    if (!rest.empty() && rest.front() == command) rest.erase(rest.begin());
    out.push_back(command);
    const json flags = doc.value("flags", json::object());
    for (const auto& [name, value] : flags.items()) {
        if (value.is_null()) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back("--" + name);
            continue;
        }
        out.push_back("--" + name);
        out.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> raw(argv, argv + argc);
    try {
        raw = expand_config(raw);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    CLI::App app{"Optimal group-sequential tests with random group sizes"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    Options o;

    auto common = [&](Flags& f) {
        f.add("model", o.model, "model JSON file");
        f.add("out", o.out, "report path (default: stdout)");
        f.add("grid-points", o.grid_points, "grid size of the value functions");
        f.add("tol", o.tol, "sup-norm tolerance of the fixed-point iteration");
    };
    auto multipliers = [&](Flags& f) {
        f.add("lambda0", o.lambda0, "type I error multiplier");
        f.add("lambda1", o.lambda1, "type II error multiplier");
        f.add("c", o.c, "constant cost per stage (replaces the model's cost)");
    };

    Flags design(app.add_subcommand("design", "optimal rule from multipliers or thresholds"));
    common(design);
    multipliers(design);
    design.add("A", o.A, "lower threshold (inverse design)");
    design.add("B", o.B, "upper threshold (inverse design)");
    design.add("horizon", o.horizon, "truncated design with this many stages");
    design.add("stop-tie", o.stop_tie, "stop or continue where stopping and continuing tie");
    design.add("rule-out", o.rule_out, "rule JSON output path");

    Flags evaluate(app.add_subcommand("evaluate", "exact operating characteristics of a rule"));
    common(evaluate);
    evaluate.add("c", o.c, "constant cost per stage");
    evaluate.add("rule", o.rule_path, "rule JSON file");
    evaluate.add("cap", o.cap, "maximum number of stages");
    evaluate.add("mass-tol", o.mass_tol, "stop once the continuing mass is below this");
    evaluate.add("csv", o.csv, "tail CSV output path");

    Flags simulate_cmd(app.add_subcommand("simulate", "Monte Carlo operating characteristics"));
    common(simulate_cmd);
    simulate_cmd.add("c", o.c, "constant cost per stage");
    simulate_cmd.add("rule", o.rule_path, "rule JSON file");
    simulate_cmd.add("reps", o.reps, "replications per hypothesis");
    simulate_cmd.add("seed", o.seed, "64-bit seed");
    simulate_cmd.add("cap", o.cap, "maximum number of stages per replication");
    simulate_cmd.add("threads", o.threads, "worker threads (0 = all cores)");
    simulate_cmd.add("hypothesis", o.hypothesis, "H0, H1 or both");

    Flags dump(app.add_subcommand("value-dump", "CSV of the stationary value functions"));
    common(dump);
    multipliers(dump);
    dump.add("csv", o.csv, "CSV output path (default: stdout)");

    Flags verify(app.add_subcommand("verify", "run the invariant suite on a model"));
    common(verify);
    multipliers(verify);
    verify.add("reps", o.reps, "Monte Carlo replications per hypothesis");
    verify.add("seed", o.verify_seed, "64-bit seed");
    verify.add("cap", o.verify_cap, "stage cap for the Monte Carlo comparison");
    verify.add("max-horizon", o.max_horizon, "largest horizon of the truncation check");
    verify.add("brute-force-horizon", o.brute_force_horizon, "largest horizon enumerated");
    verify.flag("no-mc", o.no_mc, "skip the Monte Carlo comparison");

    Flags frontier(app.add_subcommand("frontier", "multipliers meeting error targets"));
    common(frontier);
    frontier.add("c", o.c, "constant cost per stage");
    frontier.add("alpha", o.alpha, "type I error target");
    frontier.add("beta", o.beta, "type II error target");
    frontier.add("lambda-max", o.lambda_max, "upper bound of both multipliers");
    frontier.add("rel-tol", o.rel_tol, "relative width at which bisection stops");
    frontier.add("cap", o.cap, "stage cap of the exact evaluation");
    frontier.add("rule-out", o.rule_out, "rule JSON output path");

    auto* verify_app = verify.app();

    try {
        std::vector<std::string> reversed(raw.rbegin(), raw.rend() - 1);
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*design.app()) return cmd_design(o, design);
        if (*evaluate.app()) return cmd_evaluate(o, evaluate);
        if (*simulate_cmd.app()) return cmd_simulate(o, simulate_cmd);
        if (*dump.app()) return cmd_value_dump(o, dump);
        if (*verify_app) return cmd_verify(o, verify);
        if (*frontier.app()) return cmd_frontier(o, frontier);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitConfig;
}
