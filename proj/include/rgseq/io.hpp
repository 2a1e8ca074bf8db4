#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rgseq/evaluator.hpp"
#include "rgseq/model.hpp"
#include "rgseq/simulate.hpp"
#include "rgseq/test_rules.hpp"
#include "rgseq/threshold_solver.hpp"
#include "rgseq/value_iteration.hpp"

namespace rgseq {

using json = nlohmann::ordered_json;

/// Default multipliers and cost scale carried by a model file.
struct DesignBlock {
    double lambda0 = 1.0;
    double lambda1 = 1.0;
    std::optional<double> c;
};

struct ModelSpec {
    std::vector<std::string> alphabet;
    ObservationModel model;
    GroupSizeModel groups;
    CostModel cost;
    double merge_tol = 1e-12;
    std::optional<DesignBlock> design;
    json raw;

    KernelSequence kernels() const;
};

/// Parses a model document. Every problem, including invalid pmfs, is
/// reported as ConfigError naming the offending field.
ModelSpec parse_model(const json& doc);
ModelSpec load_model(const std::string& path);

json to_json(const TestRule& rule);
TestRule rule_from_json(const json& doc);
TestRule load_rule(const std::string& path);

json to_json(const OperatingCharacteristics& oc);
json to_json(const SimulationReport& report);
json to_json(const Thresholds& t);
json to_json(const InverseDesign& d);
json to_json(const TailFit& fit);

/// Finite numbers as numbers, infinities as null.
json number_or_null(double x);
double number_or_inf(const json& j);

/// CSV with columns z, g, rho, rho_bar, continue_flag.
void write_value_csv(std::ostream& os, const StationaryValue& value);
/// CSV with columns k, P0_tau_ge_k, P1_tau_ge_k.
void write_tail_csv(std::ostream& os, const OperatingCharacteristics& oc);

/// Writes text to a file, throwing ConfigError on failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace rgseq
