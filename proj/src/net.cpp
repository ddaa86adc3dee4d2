#include "fplab/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fplab {

namespace {

// Layer activations for one input: acts[0] is the input, acts[l+1] the
// post-activation output of layer l. Rectifier masks reconstruct from the
// stored post-activations (output > 0 iff pre-activation > 0; the
// subgradient at exactly 0 is 0).
template <typename T>
std::vector<std::vector<T>> run_forward(const Mlp& m, std::span<const T> x) {
    if (static_cast<int>(x.size()) != m.input_width()) {
        throw std::invalid_argument("input width mismatch");
    }
    std::vector<std::vector<T>> acts;
    acts.reserve(m.num_layers() + 1);
    acts.emplace_back(x.begin(), x.end());
    for (int l = 0; l < m.num_layers(); ++l) {
        const int in = m.widths[l];
        const int out = m.widths[l + 1];
        const auto& w = m.weights[l];
        const auto& b = m.biases[l];
        const auto& prev = acts.back();
        std::vector<T> y(out);
        for (int o = 0; o < out; ++o) {
            T acc = static_cast<T>(b[o]);
            const float* row = w.data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) acc += static_cast<T>(row[i]) * prev[i];
            y[o] = acc;
        }
        if (l + 1 < m.num_layers()) {
            for (T& v : y) v = v > T(0) ? v : T(0);
        }
        acts.push_back(std::move(y));
    }
    return acts;
}

template <typename T>
std::vector<T> run_backprop_input(const Mlp& m, const std::vector<std::vector<T>>& acts,
                                  std::vector<T> grad) {
    for (int l = m.num_layers() - 1; l >= 0; --l) {
        const int in = m.widths[l];
        const int out = m.widths[l + 1];
        if (l + 1 < m.num_layers()) {
            const auto& post = acts[l + 1];
            for (int o = 0; o < out; ++o) {
                if (!(post[o] > T(0))) grad[o] = T(0);
            }
        }
        const auto& w = m.weights[l];
        std::vector<T> dx(in, T(0));
        for (int o = 0; o < out; ++o) {
            const float* row = w.data() + static_cast<size_t>(o) * in;
            const T g = grad[o];
            for (int i = 0; i < in; ++i) dx[i] += static_cast<T>(row[i]) * g;
        }
        grad = std::move(dx);
    }
    return grad;
}

// Weight/bias gradients for training, accumulated into grads; returns the
// gradient with respect to the layer stack input (discarded by callers that
// only train).
struct LayerGrads {
    std::vector<std::vector<float>> w;
    std::vector<std::vector<float>> b;
};

void accumulate_param_grads(const Mlp& m, const std::vector<std::vector<float>>& acts,
                            std::vector<float> grad, LayerGrads& grads) {
    for (int l = m.num_layers() - 1; l >= 0; --l) {
        const int in = m.widths[l];
        const int out = m.widths[l + 1];
        if (l + 1 < m.num_layers()) {
            const auto& post = acts[l + 1];
            for (int o = 0; o < out; ++o) {
                if (!(post[o] > 0.0f)) grad[o] = 0.0f;
            }
        }
        const auto& prev = acts[l];
        for (int o = 0; o < out; ++o) {
            float* wrow = grads.w[l].data() + static_cast<size_t>(o) * in;
            const float g = grad[o];
            for (int i = 0; i < in; ++i) wrow[i] += g * prev[i];
            grads.b[l][o] += g;
        }
        if (l == 0) break;
        const auto& w = m.weights[l];
        std::vector<float> dx(in, 0.0f);
        for (int o = 0; o < out; ++o) {
            const float* row = w.data() + static_cast<size_t>(o) * in;
            const float g = grad[o];
            for (int i = 0; i < in; ++i) dx[i] += row[i] * g;
        }
        grad = std::move(dx);
    }
}

// Softmax cross-entropy composite in the working precision: returns the loss
// and writes p - onehot(y) into grad.
float softmax_ce(const std::vector<float>& logits, int y, std::vector<float>& grad) {
    const float mx = *std::max_element(logits.begin(), logits.end());
    grad.resize(logits.size());
    float sum = 0.0f;
    for (size_t i = 0; i < logits.size(); ++i) {
        grad[i] = std::exp(logits[i] - mx);
        sum += grad[i];
    }
    const float loss = std::log(sum) - (logits[y] - mx);
    for (size_t i = 0; i < logits.size(); ++i) {
        grad[i] = grad[i] / sum - (static_cast<int>(i) == y ? 1.0f : 0.0f);
    }
    return loss;
}

std::vector<float> input_grad_ce_float(const Mlp& m, std::span<const float> x, int y) {
    auto acts = run_forward<float>(m, x);
    std::vector<float> grad;
    softmax_ce(acts.back(), y, grad);
    return run_backprop_input<float>(m, acts, std::move(grad));
}

}  // namespace

Mlp make_mlp(const std::vector<int>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw std::invalid_argument("need at least one layer");
    Mlp m;
    m.widths = widths;
    m.seed = seed;
    std::mt19937_64 gen(seed);
    for (size_t l = 0; l + 1 < widths.size(); ++l) {
        const int in = widths[l];
        const int out = widths[l + 1];
        std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / in));
        std::vector<float> w(static_cast<size_t>(out) * in);
        for (float& v : w) v = dist(gen);
        m.weights.push_back(std::move(w));
        m.biases.emplace_back(out, 0.0f);
        m.activations.push_back(l + 2 < widths.size() ? "relu" : "identity");
    }
    return m;
}

std::vector<double> forward(const Mlp& model, std::span<const float> x) {
    auto acts = run_forward<float>(model, x);
    return std::vector<double>(acts.back().begin(), acts.back().end());
}

std::vector<double> forward_check64(const Mlp& model, std::span<const double> x) {
    auto acts = run_forward<double>(model, x);
    return acts.back();
}

Tensor input_gradient(const Mlp& model, const Tensor& x, LossKind loss, AttackMode mode,
                      int label, const PrecisionProfile& profile) {
    auto acts = run_forward<float>(model, std::span<const float>(x.data));
    const std::vector<double> logits(acts.back().begin(), acts.back().end());
    const RankedLogits ranked = rank_logits(logits);
    const LossEvaluation eval = evaluate_loss(loss, ranked, label, mode, profile);

    std::vector<float> seed(eval.logit_gradient.begin(), eval.logit_gradient.end());
    std::vector<float> g = run_backprop_input<float>(model, acts, std::move(seed));

    Tensor out;
    out.shape = x.shape;
    out.data = std::move(g);
    return out;
}

std::vector<double> input_gradient_check64(const Mlp& model, std::span<const double> x,
                                           LossKind loss, AttackMode mode, int label) {
    auto acts = run_forward<double>(model, x);
    const RankedLogits ranked = rank_logits(acts.back());
    const LossEvaluation eval = evaluate_loss(loss, ranked, label, mode, profile_for(64));
    return run_backprop_input<double>(model, acts, eval.logit_gradient);
}

double accuracy(const Mlp& model, const std::vector<Tensor>& images,
                const std::vector<int>& labels) {
    if (images.empty()) return 0.0;
    int correct = 0;
    for (size_t i = 0; i < images.size(); ++i) {
        const auto logits = forward(model, images[i].data);
        const int pred = static_cast<int>(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        if (pred == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / images.size();
}

Mlp train_mlp(const std::vector<Tensor>& images, const std::vector<int>& labels,
              const std::vector<int>& widths, const TrainConfig& config,
              const std::vector<Tensor>* test_images, const std::vector<int>* test_labels,
              TrainReport* report) {
    if (images.empty()) throw std::invalid_argument("empty training set");
    if (images.size() != labels.size()) throw std::invalid_argument("image/label count mismatch");

    Mlp m = make_mlp(widths, config.seed);
    std::mt19937_64 shuffle_gen(config.seed ^ 0x5DEECE66Dull);

    LayerGrads grads, velocity;
    for (int l = 0; l < m.num_layers(); ++l) {
        grads.w.emplace_back(m.weights[l].size(), 0.0f);
        grads.b.emplace_back(m.biases[l].size(), 0.0f);
        velocity.w.emplace_back(m.weights[l].size(), 0.0f);
        velocity.b.emplace_back(m.biases[l].size(), 0.0f);
    }

    std::vector<int> order(images.size());
    std::iota(order.begin(), order.end(), 0);

    const bool adversarial = config.adversarial.steps > 0;
    const float adv_eps = static_cast<float>(config.adversarial.eps);
    const float adv_step = static_cast<float>(
        config.adversarial.step_size > 0 ? config.adversarial.step_size
                                         : 2.5 * config.adversarial.eps / config.adversarial.steps);

    if (report) report->epoch_mean_loss.clear();

    std::vector<float> x_adv;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_gen);
        std::mt19937 adv_gen(static_cast<std::uint32_t>(config.seed * 2654435761u + epoch));
        std::uniform_real_distribution<float> start(-adv_eps, adv_eps);

        double epoch_loss = 0.0;
        size_t seen = 0;
        for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const size_t end = std::min(begin + config.batch_size, order.size());
            const int batch = static_cast<int>(end - begin);
            for (int l = 0; l < m.num_layers(); ++l) {
                std::fill(grads.w[l].begin(), grads.w[l].end(), 0.0f);
                std::fill(grads.b[l].begin(), grads.b[l].end(), 0.0f);
            }

            float batch_loss = 0.0f;
            for (size_t s = begin; s < end; ++s) {
                const Tensor& img = images[order[s]];
                const int y = labels[order[s]];
                std::span<const float> x_in(img.data);

                if (adversarial) {
                    x_adv.assign(img.data.begin(), img.data.end());
                    if (adv_eps > 0.0f) {
                        for (float& v : x_adv) {
                            v = std::clamp(v + start(adv_gen), 0.0f, 1.0f);
                        }
                        for (int step = 0; step < config.adversarial.steps; ++step) {
                            const auto g = input_grad_ce_float(m, x_adv, y);
                            for (size_t i = 0; i < x_adv.size(); ++i) {
                                float v = x_adv[i];
                                if (g[i] > 0.0f) v += adv_step;
                                else if (g[i] < 0.0f) v -= adv_step;
                                v = std::clamp(v, img.data[i] - adv_eps, img.data[i] + adv_eps);
                                x_adv[i] = std::clamp(v, 0.0f, 1.0f);
                            }
                        }
                    }
                    x_in = std::span<const float>(x_adv);
                }

                auto acts = run_forward<float>(m, x_in);
                std::vector<float> grad;
                batch_loss += softmax_ce(acts.back(), y, grad);
                const float inv_batch = 1.0f / batch;
                for (float& g : grad) g *= inv_batch;
                accumulate_param_grads(m, acts, std::move(grad), grads);
            }

            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
            }
            epoch_loss += batch_loss;
            seen += batch;

            const float lr = static_cast<float>(config.learning_rate);
            const float mu = static_cast<float>(config.momentum);
            for (int l = 0; l < m.num_layers(); ++l) {
                for (size_t i = 0; i < m.weights[l].size(); ++i) {
                    velocity.w[l][i] = mu * velocity.w[l][i] - lr * grads.w[l][i];
                    m.weights[l][i] += velocity.w[l][i];
                }
                for (size_t i = 0; i < m.biases[l].size(); ++i) {
                    velocity.b[l][i] = mu * velocity.b[l][i] - lr * grads.b[l][i];
                    m.biases[l][i] += velocity.b[l][i];
                }
            }
        }
        // Exploding weights can hide behind rectifier-zeroed activations, so
        // the loss check alone is not enough.
        for (int l = 0; l < m.num_layers(); ++l) {
            for (float w : m.weights[l]) {
                if (!std::isfinite(w)) {
                    throw std::runtime_error("training diverged at epoch " +
                                             std::to_string(epoch));
                }
            }
        }
        if (report) report->epoch_mean_loss.push_back(epoch_loss / seen);
    }

    if (report) {
        report->train_accuracy = accuracy(m, images, labels);
        if (test_images && test_labels) {
            report->test_accuracy = accuracy(m, *test_images, *test_labels);
        }
    }
    return m;
}

}  // namespace fplab
