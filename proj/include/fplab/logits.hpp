#pragma once

#include <span>
#include <vector>

#include "fplab/precision.hpp"

namespace fplab {

// A logit vector together with its descending sort order and top-two gap.
// order[r] is the original index of rank r (0-based), so z[order[0]] is the
// maximum. Ties rank by lower original index first.
struct RankedLogits {
    std::vector<double> z;
    std::vector<int> order;
    double delta = 0.0;  // z at rank 1 minus z at rank 2, >= 0

    int k() const { return static_cast<int>(z.size()); }
    // 1-based rank accessors matching the usual sorted-logit notation.
    int index_at_rank(int rank) const { return order[rank - 1]; }
    double value_at_rank(int rank) const { return z[order[rank - 1]]; }
    int rank_of(int index) const;
};

RankedLogits rank_logits(std::span<const double> z);

enum class AttackMode { Untargeted, Targeted };

// The four operational phases the error analysis distinguishes.
enum class ScenarioKind {
    UntargetedUnsuccessful,  // true class still on top
    UntargetedSuccessful,    // true class displaced
    TargetedUnsuccessful,    // target class not yet on top
    TargetedSuccessful,      // target class on top
};

const char* scenario_name(ScenarioKind kind);

struct AttackScenario {
    ScenarioKind kind;
    int label;       // true class for untargeted, target class for targeted
    int label_rank;  // 1-based rank of label in the sort order (1 = argmax)
};

AttackScenario classify_scenario(const RankedLogits& ranked, int label, AttackMode mode);

// Softmax of the logits scaled by c, with the rank-1 or rank-2 logit
// subtracted from every exponent. Probabilities are reference-invariant;
// the reference only selects which form of the exponents is evaluated.
std::vector<double> scaled_softmax(const RankedLogits& ranked, double c, int reference_rank);

// Magnitude of the attack-critical gradient coefficient for the scenario,
// evaluated at scale t (c = t / gap). Always computed in 64-bit.
double g_value(const RankedLogits& ranked, const AttackScenario& scenario, double t);

// Analytic derivative of g with respect to t.
double g_derivative(const RankedLogits& ranked, const AttackScenario& scenario, double t);

// Worst-case relative truncation error eps_max / g(t), per unit gradient
// magnitude. Returns +infinity where g underflows to zero.
double delta_sup(const RankedLogits& ranked, const AttackScenario& scenario, double t,
                 const PrecisionProfile& profile);

struct ErrorCurvePoint {
    double t;
    double g;
    double delta_sup;
};

// One curve per profile over the grid. The grid must be non-empty, strictly
// increasing, and positive.
std::vector<std::vector<ErrorCurvePoint>> emit_curve(const RankedLogits& ranked,
                                                     const AttackScenario& scenario,
                                                     std::span<const double> t_grid,
                                                     std::span<const PrecisionProfile> profiles);

}  // namespace fplab
