#include "rgseq/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "rgseq/errors.hpp"

namespace rgseq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

const json& require(const json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) config_error(std::string("missing field '") + key + "'");
    return doc.at(key);
}

std::vector<double> number_list(const json& j, const char* what) {
    if (!j.is_array()) config_error(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& x : j) {
        if (!x.is_number()) config_error(std::string(what) + " must contain only numbers");
        out.push_back(x.get<double>());
    }
    return out;
}

std::vector<int> int_list(const json& j, const char* what) {
    if (!j.is_array()) config_error(std::string(what) + " must be an array of integers");
    std::vector<int> out;
    for (const auto& x : j) {
        if (!x.is_number_integer()) config_error(std::string(what) + " must contain only integers");
        out.push_back(x.get<int>());
    }
    return out;
}

double positive_number(const json& doc, const char* key) {
    const json& v = require(doc, key);
    if (!v.is_number() || !(v.get<double>() > 0.0)) {
        config_error(std::string("field '") + key + "' must be a positive number");
    }
    return v.get<double>();
}

CostModel parse_cost(const json& j) {
    if (!j.is_object()) config_error("cost must be an object");
    const std::string kind = j.value("kind", std::string("linear"));
    auto num = [&](const char* key, double dflt) {
        if (!j.contains(key)) return dflt;
        if (!j.at(key).is_number()) config_error(std::string("cost.") + key + " must be a number");
        const double v = j.at(key).get<double>();
        if (v < 0.0) config_error(std::string("cost.") + key + " must be nonnegative");
        return v;
    };
    if (kind == "linear") return CostModel::linear(num("a", 0.0), num("b", 1.0));
    if (kind == "constant") return CostModel::constant(num("a", 1.0));
    if (kind == "table") {
        const auto values = number_list(require(j, "values"), "cost.values");
        if (!j.contains("support")) {
            // Filled in from the group support once that is known.
            CostModel c;
            c.kind = CostModel::Kind::Table;
            c.table_values = values;
            return c;
        }
        return CostModel::table(int_list(j.at("support"), "cost.support"), values);
    }
    config_error("unknown cost kind '" + kind + "'");
}

const char* tie_name(StopTie t) { return t == StopTie::Stop ? "stop" : "continue"; }
const char* tie_name(DecisionTie t) { return t == DecisionTie::Reject ? "reject" : "accept"; }

}  // namespace

KernelSequence ModelSpec::kernels() const { return make_kernels(model, groups, cost, merge_tol); }

ModelSpec parse_model(const json& doc) {
    if (!doc.is_object()) config_error("model document must be a JSON object");
    try {
        const auto f0 = number_list(require(doc, "f0"), "f0");
        const auto f1 = number_list(require(doc, "f1"), "f1");
        std::vector<std::string> alphabet;
        if (doc.contains("alphabet")) {
            const json& a = doc.at("alphabet");
            if (a.is_number_integer()) {
                for (int i = 0; i < a.get<int>(); ++i) alphabet.push_back(std::to_string(i));
            } else if (a.is_array()) {
                for (const auto& x : a) alphabet.push_back(x.is_string() ? x.get<std::string>() : x.dump());
            } else {
                config_error("alphabet must be a size or a list of symbols");
            }
            if (alphabet.size() != f0.size()) config_error("alphabet size differs from the length of f0");
        } else {
            for (std::size_t i = 0; i < f0.size(); ++i) alphabet.push_back(std::to_string(i));
        }
        auto model = make_model(f0, f1);

        std::vector<int> support{1};
        std::vector<double> pmf{1.0};
        if (doc.contains("group_support")) support = int_list(doc.at("group_support"), "group_support");
        if (doc.contains("group_pmf")) pmf = number_list(doc.at("group_pmf"), "group_pmf");
        std::vector<std::vector<double>> prefix;
        if (doc.contains("stage_prefix")) {
            const json& sp = doc.at("stage_prefix");
            if (!sp.is_array()) config_error("stage_prefix must be an array of pmfs");
            for (const auto& p : sp) prefix.push_back(number_list(p, "stage_prefix entry"));
        }
        auto groups = make_group_model(support, pmf, prefix);

        CostModel cost = doc.contains("cost") ? parse_cost(doc.at("cost")) : CostModel::linear(0.0, 1.0);
        if (cost.kind == CostModel::Kind::Table && cost.table_support.empty()) {
            cost.table_support = groups.support;
        }
        if (cost.kind == CostModel::Kind::Table && cost.table_support.size() != cost.table_values.size()) {
            config_error("cost.values must have one entry per group size");
        }

        ModelSpec spec{std::move(alphabet), std::move(model), std::move(groups), std::move(cost),
                       1e-12, std::nullopt, doc};
        if (doc.contains("merge_tol")) {
            const json& m = doc.at("merge_tol");
            if (!m.is_number() || m.get<double>() < 0.0) config_error("merge_tol must be a nonnegative number");
            spec.merge_tol = m.get<double>();
        }
        if (doc.contains("design")) {
            const json& d = doc.at("design");
            DesignBlock block;
            block.lambda0 = positive_number(d, "lambda0");
            block.lambda1 = d.contains("lambda1") ? positive_number(d, "lambda1") : 1.0;
            if (d.contains("c")) block.c = positive_number(d, "c");
            spec.design = block;
        }
        // Surface ZeroCost and AtomExplosion at ingestion time.
        (void)spec.kernels();
        return spec;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        config_error(std::string("invalid model: ") + e.what());
    } catch (const json::exception& e) {
        config_error(std::string("invalid model: ") + e.what());
    }
}

ModelSpec load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot open model file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        config_error("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_model(doc);
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or_inf(const json& j) {
    if (j.is_null()) return kInf;
    if (!j.is_number()) config_error("expected a number or null");
    return j.get<double>();
}

json to_json(const TestRule& rule) {
    json stages = json::array();
    for (const auto& s : rule.stages) {
        stages.push_back({{"A", number_or_null(s.A)},
                          {"B", number_or_null(s.B)},
                          {"gamma_A", s.gamma_A},
                          {"gamma_B", s.gamma_B}});
    }
    json j;
    j["kind"] = rule.kind == TestRule::Kind::Truncated ? "truncated" : "stationary";
    if (rule.kind == TestRule::Kind::Truncated) j["horizon"] = rule.horizon;
    j["stages"] = stages;
    j["decision_threshold"] = number_or_null(rule.decision_threshold);
    j["tie_policies"] = {{"stop", tie_name(rule.stop_tie)}, {"decision", tie_name(rule.decision_tie)}};
    return j;
}

TestRule rule_from_json(const json& doc) {
    try {
        TestRule rule;
        const std::string kind = require(doc, "kind").get<std::string>();
        if (kind == "truncated") {
            rule.kind = TestRule::Kind::Truncated;
            rule.horizon = require(doc, "horizon").get<int>();
            if (rule.horizon < 1) config_error("rule horizon must be at least 1");
        } else if (kind == "stationary") {
            rule.kind = TestRule::Kind::Stationary;
        } else {
            config_error("unknown rule kind '" + kind + "'");
        }
        json stages = require(doc, "stages");
        if (stages.is_object()) stages = json::array({stages});
        for (const auto& s : stages) {
            StageRegion r;
            r.A = number_or_inf(require(s, "A"));
            r.B = number_or_inf(require(s, "B"));
            r.gamma_A = s.value("gamma_A", 1.0);
            r.gamma_B = s.value("gamma_B", 1.0);
            if (!(r.A > 0.0) || r.B < r.A || r.gamma_A < 0.0 || r.gamma_A > 1.0 || r.gamma_B < 0.0 ||
                r.gamma_B > 1.0) {
                config_error("invalid stage region in rule");
            }
            rule.stages.push_back(r);
        }
        if (rule.kind == TestRule::Kind::Stationary && rule.stages.size() != 1) {
            config_error("a stationary rule has exactly one stage region");
        }
        if (rule.kind == TestRule::Kind::Truncated &&
            static_cast<int>(rule.stages.size()) != rule.horizon - 1) {
            config_error("a truncated rule of horizon N has N-1 stage regions");
        }
        rule.decision_threshold = number_or_inf(require(doc, "decision_threshold"));
        if (!(rule.decision_threshold > 0.0)) config_error("decision_threshold must be positive");
        if (doc.contains("tie_policies")) {
            const json& t = doc.at("tie_policies");
            const std::string stop = t.value("stop", std::string("stop"));
            const std::string dec = t.value("decision", std::string("reject"));
            if (stop != "stop" && stop != "continue") config_error("tie_policies.stop must be stop|continue");
            if (dec != "reject" && dec != "accept") config_error("tie_policies.decision must be reject|accept");
            rule.stop_tie = stop == "stop" ? StopTie::Stop : StopTie::Continue;
            rule.decision_tie = dec == "reject" ? DecisionTie::Reject : DecisionTie::Accept;
        }
        return rule;
    } catch (const json::exception& e) {
        config_error(std::string("invalid rule: ") + e.what());
    }
}

TestRule load_rule(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot open rule file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        config_error("rule file '" + path + "' is not valid JSON: " + e.what());
    }
    return rule_from_json(doc);
}

json to_json(const OperatingCharacteristics& oc) {
    json j;
    j["alpha"] = oc.alpha;
    j["beta"] = oc.beta;
    j["K0"] = oc.K0;
    j["K1"] = oc.K1;
    j["E_tau_0"] = oc.E_tau_0;
    j["E_tau_1"] = oc.E_tau_1;
    j["tail"] = {{"H0", oc.tail0}, {"H1", oc.tail1}};
    j["truncation_mass"] = {{"H0", oc.truncation_mass0}, {"H1", oc.truncation_mass1}};
    j["terminated"] = oc.terminated;
    j["lower_bounds"] = {{"K0", oc.K0_lower_bound}, {"K1", oc.K1_lower_bound}};
    j["stages"] = oc.stages;
    j["conservation_error"] = oc.conservation_error;
    j["cost_crosscheck_error"] = oc.cost_crosscheck_error;
    return j;
}

json to_json(const SimulationReport& r) {
    auto est = [](const Estimate& e) {
        return json{{"value", e.value}, {"std_error", e.std_error ? json(*e.std_error) : json(nullptr)}};
    };
    json j;
    j["hypothesis"] = r.hypothesis == Hypothesis::H0 ? "H0" : "H1";
    j["reps"] = r.reps;
    j["seed"] = r.seed;
    j["rng"] = "philox4x32-10";
    j[r.hypothesis == Hypothesis::H0 ? "alpha" : "beta"] = est(r.error_probability());
    j["reject"] = est(r.reject);
    j["accept"] = est(r.accept);
    j[r.hypothesis == Hypothesis::H0 ? "K0" : "K1"] = est(r.K);
    j[r.hypothesis == Hypothesis::H0 ? "E_tau_0" : "E_tau_1"] = est(r.E_tau);
    j["cap_hits"] = r.cap_hits;
    j["K_lower_bound"] = r.K_lower_bound;
    if (r.reps < 2) j["std_errors"] = "undefined for a single replication";
    return j;
}

json to_json(const Thresholds& t) {
    json j;
    j["lambda0"] = t.params.lambda0;
    j["lambda1"] = t.params.lambda1;
    j["c"] = t.c;
    j["A"] = number_or_null(t.A);
    j["B"] = number_or_null(t.B);
    j["residuals"] = {{"A", t.residual_A}, {"B", t.residual_B}};
    j["sign_pattern_ok"] = t.sign_pattern_ok;
    j["upper_threshold_exists"] = t.upper_exists;
    j["warnings"] = t.warnings;
    return j;
}

json to_json(const InverseDesign& d) {
    json j;
    j["A"] = d.A;
    j["B"] = d.B;
    j["lambda0"] = d.lambda;
    j["lambda1"] = 1.0;
    j["c"] = d.c;
    j["residuals"] = {{"threshold_A", d.residual_A}, {"G", d.residual_G}};
    j["lambda_bracket"] = {d.lambda_lo, d.lambda_hi};
    j["outer_iterations"] = d.outer_iterations;
    return j;
}

json to_json(const TailFit& f) {
    json j;
    j["a"] = f.a;
    j["r_hat"] = f.r_hat;
    j["points"] = f.points;
    j["degenerate"] = f.degenerate;
    j["geometric"] = f.geometric;
    j["hellinger_rate"] = f.hellinger_rate;
    j["hellinger_bound_ok"] = f.hellinger_bound_ok;
    j["envelope_ok"] = f.envelope_ok;
    if (!f.diagnosis.empty()) j["diagnosis"] = f.diagnosis;
    return j;
}

void write_value_csv(std::ostream& os, const StationaryValue& value) {
    os << "z,g,rho,rho_bar,continue_flag\n";
    os << std::setprecision(17);
    const auto& nodes = value.rho.grid().nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double z = nodes[i];
        const double gz = g(z, value.params);
        const double cont = value.c + value.rho_bar.values()[i];
        os << z << ',' << gz << ',' << value.rho.values()[i] << ',' << value.rho_bar.values()[i] << ','
           << (gz > cont ? 1 : 0) << '\n';
    }
}

void write_tail_csv(std::ostream& os, const OperatingCharacteristics& oc) {
    os << "k,P0_tau_ge_k,P1_tau_ge_k\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < oc.tail0.size(); ++i) {
        os << i + 1 << ',' << oc.tail0[i] << ',' << oc.tail1[i] << '\n';
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) config_error("cannot write '" + path + "'");
    out << text;
    if (!out) config_error("failed writing '" + path + "'");
}

}  // namespace rgseq
