#include "fplab/tstar.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fplab {

namespace {

constexpr double kBracketLo = 1e-6;
constexpr double kBracketHiMax = 1e6;
constexpr int kMaxBisectIters = 200;

bool is_stationary_scenario(ScenarioKind kind) {
    return kind == ScenarioKind::UntargetedUnsuccessful || kind == ScenarioKind::TargetedSuccessful;
}

void fill_bounds_at_star(ScaleFactorSolution& sol, const RankedLogits& ranked) {
    for (int bits : {16, 32, 64}) {
        sol.delta_sup_at_star[bits] =
            delta_sup(ranked, sol.scenario, sol.t_star, profile_for(bits));
    }
}

}  // namespace

double stationarity(const RankedLogits& ranked, double t) {
    if (t <= 0.0) throw std::invalid_argument("scale t must be positive");
    if (ranked.delta < kGapFloor) throw std::invalid_argument("degenerate logit gap");
    const double c = t / ranked.delta;
    const double top = ranked.value_at_rank(1);
    const int top_index = ranked.index_at_rank(1);
    double b_tail = 0.0;
    double s = 0.0;
    for (int i = 0; i < ranked.k(); ++i) {
        const double d = ranked.z[i] - top;
        const double e = std::exp(c * d);
        if (i != top_index) b_tail += e;
        s += d * e;
    }
    const double b = 1.0 + b_tail;
    return b * b_tail + c * s;  // B^2 - B + cS
}

ScaleFactorSolution solve_t_star(const RankedLogits& ranked, const AttackScenario& scenario,
                                 const PrecisionProfile& profile) {
    if (ranked.delta < kGapFloor) throw std::invalid_argument("degenerate logit gap");

    ScaleFactorSolution sol;
    sol.scenario = scenario;

    if (is_stationary_scenario(scenario.kind)) {
        double lo = kBracketLo;
        if (stationarity(ranked, lo) <= 0.0) {
            throw std::runtime_error("no stationary point found: h(t_lo) <= 0");
        }
        double hi = 1.0;
        while (stationarity(ranked, hi) > 0.0) {
            hi *= 2.0;
            if (hi > kBracketHiMax) {
                throw std::runtime_error("no stationary point found: bracket exceeded limit");
            }
        }
        int iters = 0;
        while (hi - lo > 1e-10 * std::max(1.0, hi) && iters < kMaxBisectIters) {
            const double mid = 0.5 * (lo + hi);
            if (stationarity(ranked, mid) > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
            ++iters;
        }
        sol.t_star = 0.5 * (lo + hi);
        sol.method = SolveMethod::Bisection;
        sol.iterations = iters;
        sol.residual = std::fabs(g_derivative(ranked, scenario, sol.t_star));
    } else {
        if (scenario.label_rank == 1) {
            throw std::invalid_argument("clamped-formula scenario requires label rank >= 2");
        }
        const double reach = ranked.value_at_rank(1) - ranked.z[scenario.label];
        const double bound = profile.lambda * ranked.delta / reach;
        sol.t_star = std::max(1.0, bound);
        sol.method = SolveMethod::ClampedFormula;
        sol.iterations = 0;
        sol.residual = 0.0;
        sol.underflow_flagged = bound < 1.0;
    }

    sol.c_star = sol.t_star / ranked.delta;
    sol.g_at_star = g_value(ranked, scenario, sol.t_star);
    fill_bounds_at_star(sol, ranked);
    return sol;
}

std::pair<double, double> brute_force_t_star(const RankedLogits& ranked,
                                             const AttackScenario& scenario, double t_lo,
                                             double t_hi, int n) {
    if (!(0.0 < t_lo && t_lo < t_hi)) throw std::invalid_argument("need 0 < t_lo < t_hi");
    if (n < 2) throw std::invalid_argument("need at least 2 grid points");

    double best_t = t_lo;
    double best_g = -1.0;
    for (int i = 0; i < n; ++i) {
        const double t = t_lo + (t_hi - t_lo) * static_cast<double>(i) / (n - 1);
        const double g = g_value(ranked, scenario, t);
        if (g > best_g) {
            best_g = g;
            best_t = t;
        }
    }
    return {best_t, best_g};
}

}  // namespace fplab
