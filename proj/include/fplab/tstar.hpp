#pragma once

#include <map>
#include <utility>

#include "fplab/logits.hpp"
#include "fplab/precision.hpp"

namespace fplab {

enum class SolveMethod { Bisection, ClampedFormula };

struct ScaleFactorSolution {
    AttackScenario scenario;
    double t_star = 0.0;
    double c_star = 0.0;  // t_star / gap
    double g_at_star = 0.0;
    std::map<int, double> delta_sup_at_star;  // precision bits -> bound at t_star
    SolveMethod method = SolveMethod::Bisection;
    int iterations = 0;
    double residual = 0.0;  // |g'(t_star)| for bisection, 0 for the formula
    // Set when the clamped formula floors at 1 even though the underflow
    // bound sits below 1, so the chosen t drives p_label to zero in the
    // target precision.
    bool underflow_flagged = false;
};

// Optimal scale factor for the scenario. Stationary scenarios (untargeted
// unsuccessful, targeted successful) are solved by bisection on the
// stationarity function; the other two use the underflow-clamped formula
// max{1, lambda * gap / (z_rank1 - z_label)} with the profile's lambda.
ScaleFactorSolution solve_t_star(const RankedLogits& ranked, const AttackScenario& scenario,
                                 const PrecisionProfile& profile);

// Grid-search oracle: argmax of g over n uniformly spaced points in
// [t_lo, t_hi]. Returns (t, g) at the argmax.
std::pair<double, double> brute_force_t_star(const RankedLogits& ranked,
                                             const AttackScenario& scenario, double t_lo,
                                             double t_hi, int n);

// Stationarity function h(t) = B^2 - B + cS whose sign change locates the
// maximizer of g for the stationary scenarios. Exposed for property tests.
double stationarity(const RankedLogits& ranked, double t);

}  // namespace fplab
