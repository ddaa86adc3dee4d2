#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fplab/logits.hpp"
#include "fplab/precision.hpp"
#include "fplab/tstar.hpp"

namespace fplab {

enum class LossKind { Ce, Cw, Dlr, Mifpe, Tmifpe };

const char* loss_name(LossKind kind);
LossKind loss_from_name(const std::string& name);

struct LossEvaluation {
    double value = 0.0;
    std::vector<double> logit_gradient;
    double scale_c = 0.0;  // scale applied to the logits, 0 for unscaled losses
    double t_used = 0.0;   // t behind the scale (t* or 1), 0 for unscaled losses
    std::optional<AttackScenario> scenario;
    bool degenerate_gap = false;
};

// Working precision for the loss-value/softmax path. bits == 64 means plain
// double arithmetic; 32 rounds every elementary op to binary32; 16 emulates
// binary16 storage op by op. Gradients are assembled in double and narrow to
// the network's precision downstream.
struct LossContext {
    PrecisionProfile working = profile_for(64);
};

LossEvaluation ce_loss(const RankedLogits& ranked, int y, const LossContext& ctx = {});
LossEvaluation scaled_ce_loss(const RankedLogits& ranked, int y, double c,
                              const LossContext& ctx = {});
LossEvaluation cw_loss(const RankedLogits& ranked, int y);
LossEvaluation dlr_loss(const RankedLogits& ranked, int y);
LossEvaluation mifpe_loss(const RankedLogits& ranked, int y, const LossContext& ctx = {});

// Classifies the scenario from the current logits, solves the optimal scale
// for it, and evaluates scaled CE at c = t* / gap. Targeted mode negates
// value and gradient. The profile supplies lambda for the clamped scenarios
// and doubles as the loss-path working precision.
LossEvaluation tmifpe_loss(const RankedLogits& ranked, int label, AttackMode mode,
                           const PrecisionProfile& profile);

// Uniform entry point used by the attack engine. label is the true class in
// untargeted mode and the target class in targeted mode.
LossEvaluation evaluate_loss(LossKind kind, const RankedLogits& ranked, int label,
                             AttackMode mode, const PrecisionProfile& profile);

}  // namespace fplab
