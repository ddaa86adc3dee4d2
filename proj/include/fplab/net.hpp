#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fplab/losses.hpp"
#include "fplab/tensor.hpp"

namespace fplab {

// Fully connected classifier: dense layers with rectifier activations on all
// hidden layers and identity on the output. Weights are stored row-major
// (out x in) in 32-bit floats.
struct Mlp {
    std::vector<int> widths;  // e.g. {784, 128, 64, 10}
    std::vector<std::vector<float>> weights;
    std::vector<std::vector<float>> biases;
    std::vector<std::string> activations;  // "relu" per hidden layer, "identity" last
    std::uint64_t seed = 0;

    int input_width() const { return widths.front(); }
    int num_classes() const { return widths.back(); }
    int num_layers() const { return static_cast<int>(weights.size()); }
};

// Seeded He-normal initialization.
Mlp make_mlp(const std::vector<int>& widths, std::uint64_t seed);

// Logits for one input in the 32-bit working precision, widened on return.
std::vector<double> forward(const Mlp& model, std::span<const float> x);

// Gradient of the chosen surrogate loss with respect to the input, computed
// by reverse mode through the network seeded with the loss's analytic logit
// gradient. Network math runs in 32-bit; the profile sets the loss path's
// working precision.
Tensor input_gradient(const Mlp& model, const Tensor& x, LossKind loss, AttackMode mode,
                      int label, const PrecisionProfile& profile);

// 64-bit check path used only for gradient verification.
std::vector<double> forward_check64(const Mlp& model, std::span<const double> x);
std::vector<double> input_gradient_check64(const Mlp& model, std::span<const double> x,
                                           LossKind loss, AttackMode mode, int label);

struct AdversarialTrainConfig {
    double eps = 0.0;
    int steps = 0;  // 0 disables adversarial training
    double step_size = 0.0;
};

struct TrainConfig {
    int epochs = 10;
    int batch_size = 64;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    AdversarialTrainConfig adversarial;
};

struct TrainReport {
    std::vector<double> epoch_mean_loss;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

// Deterministic minibatch SGD with momentum on the softmax cross-entropy
// objective; when adversarial.steps > 0 each batch is replaced by signed-PGD
// examples crafted against the current weights. Throws on divergence.
Mlp train_mlp(const std::vector<Tensor>& images, const std::vector<int>& labels,
              const std::vector<int>& widths, const TrainConfig& config,
              const std::vector<Tensor>* test_images = nullptr,
              const std::vector<int>* test_labels = nullptr, TrainReport* report = nullptr);

double accuracy(const Mlp& model, const std::vector<Tensor>& images,
                const std::vector<int>& labels);

}  // namespace fplab
