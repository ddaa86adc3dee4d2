#include "fplab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fplab {

const char* loss_name(LossKind kind) {
    switch (kind) {
        case LossKind::Ce: return "ce";
        case LossKind::Cw: return "cw";
        case LossKind::Dlr: return "dlr";
        case LossKind::Mifpe: return "mifpe";
        case LossKind::Tmifpe: return "tmifpe";
    }
    return "unknown";
}

LossKind loss_from_name(const std::string& name) {
    if (name == "ce") return LossKind::Ce;
    if (name == "cw") return LossKind::Cw;
    if (name == "dlr") return LossKind::Dlr;
    if (name == "mifpe") return LossKind::Mifpe;
    if (name == "tmifpe") return LossKind::Tmifpe;
    throw std::invalid_argument("unknown loss: " + name);
}

namespace {

double rnd(double x, const PrecisionProfile& wp) {
    if (wp.bits == 64) return x;
    if (wp.bits == 32) return static_cast<double>(static_cast<float>(x));
    return round_to_precision(x, wp);
}

// Softmax of c*z with the max logit subtracted, every elementary operation
// rounded to the working precision.
std::vector<double> softmax_path(const RankedLogits& ranked, double c,
                                 const PrecisionProfile& wp) {
    const double z_ref = ranked.value_at_rank(1);
    const int k = ranked.k();
    std::vector<double> p(k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        const double diff = rnd(ranked.z[i] - z_ref, wp);
        const double arg = rnd(c * diff, wp);
        p[i] = rnd(std::exp(arg), wp);
        sum = rnd(sum + p[i], wp);
    }
    for (double& v : p) v = rnd(v / sum, wp);
    return p;
}

LossEvaluation scaled_ce_impl(const RankedLogits& ranked, int y, double c,
                              const PrecisionProfile& wp) {
    if (y < 0 || y >= ranked.k()) throw std::invalid_argument("label out of range");
    if (c <= 0.0) throw std::invalid_argument("scale factor c must be positive");

    const std::vector<double> p = softmax_path(ranked, c, wp);
    LossEvaluation eval;
    eval.value = rnd(-rnd(std::log(p[y]), wp), wp);
    eval.logit_gradient.resize(ranked.k());
    for (int i = 0; i < ranked.k(); ++i) {
        eval.logit_gradient[i] = c * (p[i] - (i == y ? 1.0 : 0.0));
    }
    return eval;
}

void negate(LossEvaluation& eval) {
    eval.value = -eval.value;
    for (double& g : eval.logit_gradient) g = -g;
}

}  // namespace

LossEvaluation ce_loss(const RankedLogits& ranked, int y, const LossContext& ctx) {
    LossEvaluation eval = scaled_ce_impl(ranked, y, 1.0, ctx.working);
    eval.scale_c = 0.0;  // unscaled
    eval.t_used = 0.0;
    return eval;
}

LossEvaluation scaled_ce_loss(const RankedLogits& ranked, int y, double c,
                              const LossContext& ctx) {
    LossEvaluation eval = scaled_ce_impl(ranked, y, c, ctx.working);
    eval.scale_c = c;
    return eval;
}

LossEvaluation cw_loss(const RankedLogits& ranked, int y) {
    if (y < 0 || y >= ranked.k()) throw std::invalid_argument("label out of range");
    const int top = ranked.index_at_rank(1);
    const int rival = (y == top) ? ranked.index_at_rank(2) : top;

    LossEvaluation eval;
    eval.value = ranked.z[rival] - ranked.z[y];
    eval.logit_gradient.assign(ranked.k(), 0.0);
    eval.logit_gradient[rival] += 1.0;
    eval.logit_gradient[y] -= 1.0;
    return eval;
}

LossEvaluation dlr_loss(const RankedLogits& ranked, int y) {
    if (ranked.k() < 3) throw std::invalid_argument("dlr loss needs at least 3 classes");
    if (y < 0 || y >= ranked.k()) throw std::invalid_argument("label out of range");
    const int top = ranked.index_at_rank(1);
    const int rival = (y == top) ? ranked.index_at_rank(2) : top;
    // Denominator is detached: it scales the value but carries no gradient.
    const double denom = ranked.value_at_rank(1) - ranked.value_at_rank(3) + kGapFloor;

    LossEvaluation eval;
    eval.value = -(ranked.z[y] - ranked.z[rival]) / denom;
    eval.logit_gradient.assign(ranked.k(), 0.0);
    eval.logit_gradient[rival] += 1.0 / denom;
    eval.logit_gradient[y] -= 1.0 / denom;
    return eval;
}

LossEvaluation mifpe_loss(const RankedLogits& ranked, int y, const LossContext& ctx) {
    const bool degenerate = ranked.delta < kGapFloor;
    const double gap = degenerate ? kGapFloor : ranked.delta;
    LossEvaluation eval = scaled_ce_impl(ranked, y, 1.0 / gap, ctx.working);
    eval.scale_c = 1.0 / gap;
    eval.t_used = 1.0;
    eval.degenerate_gap = degenerate;
    return eval;
}

LossEvaluation tmifpe_loss(const RankedLogits& ranked, int label, AttackMode mode,
                           const PrecisionProfile& profile) {
    const AttackScenario scenario = classify_scenario(ranked, label, mode);
    const bool degenerate = ranked.delta < kGapFloor;

    double t = 1.0;
    double gap = kGapFloor;
    if (!degenerate) {
        // Refreshed from the current logits on every call.
        t = solve_t_star(ranked, scenario, profile).t_star;
        gap = ranked.delta;
    }
    const double c = t / gap;

    LossEvaluation eval = scaled_ce_impl(ranked, label, c, profile);
    eval.scale_c = c;
    eval.t_used = t;
    eval.scenario = scenario;
    eval.degenerate_gap = degenerate;
    if (mode == AttackMode::Targeted) negate(eval);
    return eval;
}

LossEvaluation evaluate_loss(LossKind kind, const RankedLogits& ranked, int label,
                             AttackMode mode, const PrecisionProfile& profile) {
    const LossContext ctx{profile};
    LossEvaluation eval;
    switch (kind) {
        case LossKind::Ce:
            eval = ce_loss(ranked, label, ctx);
            if (mode == AttackMode::Targeted) negate(eval);
            return eval;
        case LossKind::Cw:
            eval = cw_loss(ranked, label);
            if (mode == AttackMode::Targeted) negate(eval);
            return eval;
        case LossKind::Dlr:
            if (mode == AttackMode::Targeted) {
                throw std::invalid_argument("targeted dlr is not supported");
            }
            return dlr_loss(ranked, label);
        case LossKind::Mifpe:
            eval = mifpe_loss(ranked, label, ctx);
            if (mode == AttackMode::Targeted) negate(eval);
            return eval;
        case LossKind::Tmifpe:
            return tmifpe_loss(ranked, label, mode, profile);
    }
    throw std::logic_error("unreachable loss kind");
}

}  // namespace fplab
