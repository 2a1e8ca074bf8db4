#include "rgseq/audit.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "rgseq/errors.hpp"

namespace rgseq {

AuditPoint audit_point(std::string label, const OperatingCharacteristics& oc) {
    return AuditPoint{std::move(label), oc.alpha, oc.beta, oc.K0, oc.K1};
}

AuditReport constrained_optimality_audit(const AuditPoint& reference,
                                         const std::vector<AuditPoint>& candidates,
                                         bool check_K1, double tol) {
    AuditReport r;
    r.candidates = candidates.size();
    r.checked_K1 = check_K1;
    r.min_margin_K0 = std::numeric_limits<double>::infinity();
    r.min_margin_K1 = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
        if (c.alpha > reference.alpha + tol || c.beta > reference.beta + tol) continue;
        ++r.comparable;
        const double m0 = c.K0 - reference.K0;
        r.min_margin_K0 = std::min(r.min_margin_K0, m0);
        if (m0 < -tol) r.violations.push_back({c.label, false, -m0});
        if (check_K1) {
            const double m1 = c.K1 - reference.K1;
            r.min_margin_K1 = std::min(r.min_margin_K1, m1);
            if (m1 < -tol) r.violations.push_back({c.label, true, -m1});
        }
    }
    return r;
}

std::vector<AuditPoint> brute_force_candidates(const TruncatedRuleSpace& space) {
    std::set<std::uint64_t> masks;
    for (std::uint64_t m = 0; m < space.rule_count(); ++m) masks.insert(space.canonical(m));

    std::vector<double> thresholds = space.terminal_log_z();
    thresholds.push_back(std::numeric_limits<double>::infinity());
    std::vector<AuditPoint> out;
    out.reserve(masks.size() * thresholds.size() * 2);
    for (std::uint64_t m : masks) {
        for (double t : thresholds) {
            for (DecisionTie tie : {DecisionTie::Reject, DecisionTie::Accept}) {
                // z = +inf always rejects; the accept tie at +inf would accept it.
                if (std::isinf(t) && tie == DecisionTie::Accept) continue;
                const auto o = space.evaluate(m, t, tie);
                std::ostringstream label;
                label << "N=" << space.horizon() << " mask=" << m << " log_d=" << t
                      << (tie == DecisionTie::Reject ? " (>=)" : " (>)");
                out.push_back({label.str(), o.alpha, o.beta, o.K0, o.K1});
            }
        }
    }
    return out;
}

TestRule mirror_rsprt(const TestRule& rule) {
    if (rule.kind != TestRule::Kind::Stationary || rule.stages.size() != 1) {
        throw Error(ErrorCode::InvalidArgument, "only stationary interval rules can be mirrored");
    }
    const StageRegion& r = rule.stages.front();
    if (!std::isfinite(r.B) || !(r.A < r.B)) {
        throw Error(ErrorCode::InvalidArgument, "mirroring needs a finite upper threshold");
    }
    // Stops happen only outside (A, B), so any decision threshold in (A, B]
    // acts like the RSPRT decision.
    if (!(rule.decision_threshold > r.A && rule.decision_threshold <= r.B)) {
        throw Error(ErrorCode::InvalidArgument, "decision threshold must lie in (A, B]");
    }
    return rsprt(1.0 / r.B, 1.0 / r.A, r.gamma_B, r.gamma_A, DecisionTie::Reject);
}

}  // namespace rgseq
