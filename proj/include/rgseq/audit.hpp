#pragma once

#include <string>
#include <vector>

#include "rgseq/brute_force.hpp"
#include "rgseq/evaluator.hpp"

namespace rgseq {

struct AuditPoint {
    std::string label;
    double alpha = 0.0;
    double beta = 0.0;
    double K0 = 0.0;
    double K1 = 0.0;
};

AuditPoint audit_point(std::string label, const OperatingCharacteristics& oc);

struct AuditViolation {
    std::string label;
    bool on_K1 = false;
    double margin = 0.0;  // reference K minus candidate K (positive = violation)
};

struct AuditReport {
    std::size_t candidates = 0;
    /// Candidates with alpha' <= alpha and beta' <= beta.
    std::size_t comparable = 0;
    bool checked_K1 = false;
    /// Smallest K0' - K0 (and K1' - K1) over comparable candidates.
    double min_margin_K0 = 0.0;
    double min_margin_K1 = 0.0;
    std::vector<AuditViolation> violations;

    bool passed() const { return violations.empty(); }
};

/// Flags every candidate that meets both error levels of the reference yet has
/// a smaller expected cost under H0 (and under H1 when check_K1 is set).
AuditReport constrained_optimality_audit(const AuditPoint& reference,
                                         const std::vector<AuditPoint>& candidates,
                                         bool check_K1, double tol = 1e-9);

/// Every deterministic horizon-N rule of the space combined with every
/// likelihood-ratio decision threshold; masks are deduplicated to canonical form.
std::vector<AuditPoint> brute_force_candidates(const TruncatedRuleSpace& space);

/// The same test seen from the other hypothesis: continue on (1/B, 1/A) and
/// reject from 1/A up. Operating characteristics map as alpha <-> beta, K0 <-> K1
/// when evaluated on the swapped model.
TestRule mirror_rsprt(const TestRule& rule);

}  // namespace rgseq
