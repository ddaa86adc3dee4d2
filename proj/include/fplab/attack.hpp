#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fplab/losses.hpp"
#include "fplab/net.hpp"
#include "fplab/tensor.hpp"

namespace fplab {

enum class NormKind { Linf, L2 };

const char* norm_name(NormKind norm);
NormKind norm_from_name(const std::string& name);

struct TargetRule {
    enum class Kind { RunnerUp, Fixed };
    Kind kind = Kind::RunnerUp;
    int fixed_class = -1;
};

struct AttackConfig {
    NormKind norm = NormKind::Linf;
    double eps = 0.3;
    int iterations = 100;
    double momentum = 0.75;
    LossKind loss = LossKind::Ce;
    AttackMode mode = AttackMode::Untargeted;
    std::uint64_t seed = 0;
    PrecisionProfile profile = profile_for(32);
    TargetRule target_rule;
    int threads = 0;  // 0 picks hardware concurrency; per-sample results are
                      // independent of the thread count
};

struct AttackOutcome {
    Tensor best_adversarial;
    bool success = false;
    bool clean_correct = false;
    std::optional<int> first_success_iteration;  // iterate index, 0 = random start
    std::vector<double> loss_trace;              // surrogate loss at iterates 0..I
    std::vector<ScenarioKind> scenario_trace;    // filled for the adaptive-scale loss
    double final_norm = 0.0;
    int skipped_steps = 0;  // zero-gradient iterations
    // Feasibility diagnostics over every iterate, not just the final one.
    double max_perturbation_norm = 0.0;
    bool box_ok = true;
};

// Cosine-decayed step size eps * (1 + cos(pi * i / total)).
double step_size(int i, int total_iterations, double eps);

// Projects delta into the eps-ball of the chosen norm, then clamps x + delta
// into the [0,1] box. In place.
void project(std::span<float> delta, NormKind norm, double eps, std::span<const float> x);

AttackOutcome pgd_attack(const Mlp& model, const Tensor& x, int y, const AttackConfig& config,
                         int sample_index = 0);

struct SampleRecord {
    int index = 0;
    bool clean_correct = false;
    bool success = false;
    int first_success_iteration = -1;  // -1 when never successful
    double final_norm = 0.0;
};

struct RobustReport {
    AttackConfig config;
    std::vector<SampleRecord> samples;
    double clean_accuracy = 0.0;
    double robust_accuracy = 0.0;  // fraction never successfully attacked
    double mean_first_success = 0.0;
    int total_skipped_steps = 0;
};

RobustReport robust_accuracy(const Mlp& model, const std::vector<Tensor>& images,
                             const std::vector<int>& labels, const AttackConfig& config);

}  // namespace fplab
