#include "fplab/logits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fplab {

int RankedLogits::rank_of(int index) const {
    for (int r = 0; r < static_cast<int>(order.size()); ++r) {
        if (order[r] == index) return r + 1;
    }
    throw std::invalid_argument("class index " + std::to_string(index) + " out of range");
}

RankedLogits rank_logits(std::span<const double> z) {
    if (z.size() < 2) throw std::invalid_argument("need at least 2 logits");
    for (double v : z) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite logit");
    }

    RankedLogits ranked;
    ranked.z.assign(z.begin(), z.end());
    ranked.order.resize(z.size());
    std::iota(ranked.order.begin(), ranked.order.end(), 0);
    std::stable_sort(ranked.order.begin(), ranked.order.end(),
                     [&](int a, int b) { return z[a] > z[b]; });
    ranked.delta = z[ranked.order[0]] - z[ranked.order[1]];
    return ranked;
}

const char* scenario_name(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::UntargetedUnsuccessful: return "untargeted-unsuccessful";
        case ScenarioKind::UntargetedSuccessful: return "untargeted-successful";
        case ScenarioKind::TargetedUnsuccessful: return "targeted-unsuccessful";
        case ScenarioKind::TargetedSuccessful: return "targeted-successful";
    }
    return "unknown";
}

AttackScenario classify_scenario(const RankedLogits& ranked, int label, AttackMode mode) {
    if (label < 0 || label >= ranked.k()) {
        throw std::invalid_argument("label " + std::to_string(label) + " out of range for K=" +
                                    std::to_string(ranked.k()));
    }
    const int j = ranked.rank_of(label);
    ScenarioKind kind;
    if (mode == AttackMode::Untargeted) {
        kind = (j == 1) ? ScenarioKind::UntargetedUnsuccessful : ScenarioKind::UntargetedSuccessful;
    } else {
        kind = (j == 1) ? ScenarioKind::TargetedSuccessful : ScenarioKind::TargetedUnsuccessful;
    }
    return {kind, label, j};
}

std::vector<double> scaled_softmax(const RankedLogits& ranked, double c, int reference_rank) {
    if (c <= 0.0) throw std::invalid_argument("scale factor c must be positive");
    if (reference_rank != 1 && reference_rank != 2) {
        throw std::invalid_argument("reference rank must be 1 or 2");
    }
    const double z_ref = ranked.value_at_rank(reference_rank);
    const int k = ranked.k();

    std::vector<double> p(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        // Exponent guard: with rank-2 reference the rank-1 argument is +t and
        // could overflow for extreme scales; clamping yields the limit values.
        double arg = std::min(c * (ranked.z[i] - z_ref), 700.0);
        p[i] = std::exp(arg);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

namespace {

// Sums over rank-1-referenced exponentials: exponent args are all <= 0, so
// every scenario's coefficient evaluates without overflow at any t.
//   b_full  = sum_i exp(c*d_i)          (d_i = z_i - z_rank1, includes the 1)
//   b_tail  = sum_{i != rank1} exp(c*d_i)
//   s       = sum_i d_i * exp(c*d_i)    (<= 0)
//   e_label = exp(c*d_label)
struct ScenarioSums {
    double b_full = 0.0;
    double b_tail = 0.0;
    double s = 0.0;
    double e_label = 0.0;
    double c = 0.0;
};

ScenarioSums compute_sums(const RankedLogits& ranked, int label, double t) {
    if (t <= 0.0) throw std::invalid_argument("scale t must be positive");
    if (ranked.delta < kGapFloor) throw std::invalid_argument("degenerate logit gap");

    const double top = ranked.value_at_rank(1);
    const int top_index = ranked.index_at_rank(1);
    ScenarioSums sums;
    sums.c = t / ranked.delta;
    for (int i = 0; i < ranked.k(); ++i) {
        const double d = ranked.z[i] - top;
        const double e = std::exp(sums.c * d);
        sums.b_full += e;
        if (i != top_index) sums.b_tail += e;
        sums.s += d * e;
        if (i == label) sums.e_label = e;
    }
    return sums;
}

void check_scenario(const RankedLogits& ranked, const AttackScenario& scenario) {
    if (scenario.label < 0 || scenario.label >= ranked.k()) {
        throw std::invalid_argument("scenario label out of range");
    }
    const bool wants_top = scenario.kind == ScenarioKind::UntargetedUnsuccessful ||
                           scenario.kind == ScenarioKind::TargetedSuccessful;
    if (wants_top != (scenario.label_rank == 1)) {
        throw std::invalid_argument("scenario inconsistent with label rank");
    }
}

}  // namespace

double g_value(const RankedLogits& ranked, const AttackScenario& scenario, double t) {
    check_scenario(ranked, scenario);
    const ScenarioSums sums = compute_sums(ranked, scenario.label, t);
    switch (scenario.kind) {
        case ScenarioKind::UntargetedUnsuccessful:
        case ScenarioKind::TargetedSuccessful:
            // c * (1 - p_rank1), rank-1 reference
            return sums.c * sums.b_tail / sums.b_full;
        case ScenarioKind::UntargetedSuccessful:
            // c * p_rank1 with the rank-2 reference; dividing numerator and
            // denominator by exp(t) gives the overflow-free form c / B.
            return sums.c / sums.b_full;
        case ScenarioKind::TargetedUnsuccessful:
            // c * (p_rank1 - p_label), rank-1 reference
            return sums.c * (1.0 - sums.e_label) / sums.b_full;
    }
    throw std::logic_error("unreachable scenario kind");
}

double g_derivative(const RankedLogits& ranked, const AttackScenario& scenario, double t) {
    check_scenario(ranked, scenario);
    const ScenarioSums sums = compute_sums(ranked, scenario.label, t);
    const double gap = ranked.delta;
    const double b = sums.b_full;
    const double c = sums.c;
    const double s = sums.s;

    switch (scenario.kind) {
        case ScenarioKind::UntargetedUnsuccessful:
        case ScenarioKind::TargetedSuccessful:
            // (B^2 - B + cS) / (gap * B^2); B^2 - B written as B * b_tail.
            return (b * sums.b_tail + c * s) / (gap * b * b);
        case ScenarioKind::UntargetedSuccessful:
            // Rank-2-referenced form p(B + c(gap*B - S)) / (gap*B) reduces to
            // (B - cS) / (gap * B^2) after normalizing by exp(t).
            return (b - c * s) / (gap * b * b);
        case ScenarioKind::TargetedUnsuccessful: {
            // g = c*(1 - e_label)/A. Differentiating gives
            // (A*(Bf + D) + c*Bf*St) / (gap * A^2) with Bf = 1 - e_label,
            // D = -c*e_label*d_label, St = -S.
            const double bf = 1.0 - sums.e_label;
            const double d_label = ranked.z[scenario.label] - ranked.value_at_rank(1);
            const double dd = -c * sums.e_label * d_label;
            return (b * (bf + dd) + c * bf * (-s)) / (gap * b * b);
        }
    }
    throw std::logic_error("unreachable scenario kind");
}

double delta_sup(const RankedLogits& ranked, const AttackScenario& scenario, double t,
                 const PrecisionProfile& profile) {
    const double g = g_value(ranked, scenario, t);
    if (g <= 0.0) return std::numeric_limits<double>::infinity();
    return profile.eps_max / g;
}

std::vector<std::vector<ErrorCurvePoint>> emit_curve(const RankedLogits& ranked,
                                                     const AttackScenario& scenario,
                                                     std::span<const double> t_grid,
                                                     std::span<const PrecisionProfile> profiles) {
    if (t_grid.empty()) throw std::invalid_argument("empty t grid");
    for (size_t i = 0; i < t_grid.size(); ++i) {
        if (t_grid[i] <= 0.0) throw std::invalid_argument("grid values must be positive");
        if (i > 0 && t_grid[i] <= t_grid[i - 1]) {
            throw std::invalid_argument("grid must be strictly increasing");
        }
    }

    std::vector<std::vector<ErrorCurvePoint>> curves(profiles.size());
    std::vector<double> g_at(t_grid.size());
    for (size_t i = 0; i < t_grid.size(); ++i) {
        g_at[i] = g_value(ranked, scenario, t_grid[i]);
    }
    for (size_t p = 0; p < profiles.size(); ++p) {
        curves[p].reserve(t_grid.size());
        for (size_t i = 0; i < t_grid.size(); ++i) {
            const double ds = g_at[i] > 0.0 ? profiles[p].eps_max / g_at[i]
                                            : std::numeric_limits<double>::infinity();
            curves[p].push_back({t_grid[i], g_at[i], ds});
        }
    }
    return curves;
}

}  // namespace fplab
