#include "fplab/attack.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace fplab {

const char* norm_name(NormKind norm) {
    return norm == NormKind::Linf ? "linf" : "l2";
}

NormKind norm_from_name(const std::string& name) {
    if (name == "linf") return NormKind::Linf;
    if (name == "l2") return NormKind::L2;
    throw std::invalid_argument("unknown norm: " + name);
}

double step_size(int i, int total_iterations, double eps) {
    if (i < 0 || i > total_iterations) throw std::invalid_argument("iteration index out of range");
    return eps * (1.0 + std::cos(M_PI * static_cast<double>(i) / total_iterations));
}

void project(std::span<float> delta, NormKind norm, double eps, std::span<const float> x) {
    if (delta.size() != x.size()) throw std::invalid_argument("shape mismatch in projection");
    const float feps = static_cast<float>(eps);
    if (norm == NormKind::Linf) {
        for (float& d : delta) d = std::clamp(d, -feps, feps);
    } else {
        double sq = 0.0;
        for (float d : delta) sq += static_cast<double>(d) * d;
        const double nrm = std::sqrt(sq);
        if (nrm > eps && nrm > 0.0) {
            const float scale = static_cast<float>(eps / nrm);
            for (float& d : delta) d *= scale;
        }
    }
    for (size_t i = 0; i < delta.size(); ++i) {
        const float lo = -x[i];
        const float hi = 1.0f - x[i];
        delta[i] = std::clamp(delta[i], lo, hi);
    }
}

namespace {

double perturbation_norm(std::span<const float> a, std::span<const float> b, NormKind norm) {
    if (norm == NormKind::Linf) {
        double mx = 0.0;
        for (size_t i = 0; i < a.size(); ++i) {
            mx = std::max(mx, std::fabs(static_cast<double>(a[i]) - b[i]));
        }
        return mx;
    }
    double sq = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

int argmax_class(const std::vector<double>& logits) {
    return static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

struct IterateEval {
    double loss = 0.0;
    bool success = false;
    ScenarioKind scenario = ScenarioKind::UntargetedUnsuccessful;
};

}  // namespace

AttackOutcome pgd_attack(const Mlp& model, const Tensor& x, int y, const AttackConfig& config,
                         int sample_index) {
    if (config.eps < 0.0) throw std::invalid_argument("eps must be non-negative");
    if (config.iterations < 1) throw std::invalid_argument("need at least one iteration");
    if (!(config.momentum >= 0.0 && config.momentum < 1.0)) {
        throw std::invalid_argument("momentum must be in [0, 1)");
    }

    const int d = x.numel();
    const std::vector<double> clean_logits = forward(model, x.data);
    const int clean_pred = argmax_class(clean_logits);

    int label = y;
    if (config.mode == AttackMode::Targeted) {
        if (config.target_rule.kind == TargetRule::Kind::Fixed) {
            label = config.target_rule.fixed_class;
        } else {
            const RankedLogits ranked = rank_logits(clean_logits);
            label = (ranked.index_at_rank(1) == y) ? ranked.index_at_rank(2)
                                                   : ranked.index_at_rank(1);
        }
        if (label == y || label < 0 || label >= model.num_classes()) {
            throw std::invalid_argument("targeted attack needs a valid target distinct from y");
        }
    }

    AttackOutcome out;
    out.clean_correct = clean_pred == y;

    // Random start derives from (seed, sample index) so per-sample attacks
    // are order-independent.
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(sample_index)};
    std::mt19937 gen(seq);

    std::vector<float> delta(d, 0.0f);
    if (config.eps > 0.0) {
        std::uniform_real_distribution<float> u(-static_cast<float>(config.eps),
                                                static_cast<float>(config.eps));
        for (float& v : delta) v = u(gen);
    }
    project(delta, config.norm, config.eps, x.data);

    std::vector<float> cur(d), prev(d);
    for (int i = 0; i < d; ++i) cur[i] = x.data[i] + delta[i];
    prev = cur;

    const bool track_scenario = config.loss == LossKind::Tmifpe;

    auto evaluate = [&](const std::vector<float>& point) {
        IterateEval ev;
        const std::vector<double> logits = forward(model, point);
        const RankedLogits ranked = rank_logits(logits);
        const LossEvaluation le =
            evaluate_loss(config.loss, ranked, label, config.mode, config.profile);
        ev.loss = le.value;
        const int pred = ranked.index_at_rank(1);
        ev.success = config.mode == AttackMode::Untargeted ? pred != y : pred == label;
        if (le.scenario) {
            ev.scenario = le.scenario->kind;
        } else {
            ev.scenario = classify_scenario(ranked, label, config.mode).kind;
        }
        return ev;
    };

    std::vector<float> best = cur;
    double best_loss;
    bool best_success;
    {
        const IterateEval ev0 = evaluate(cur);
        out.loss_trace.push_back(ev0.loss);
        if (track_scenario) out.scenario_trace.push_back(ev0.scenario);
        best_loss = ev0.loss;
        best_success = ev0.success;
        if (ev0.success) out.first_success_iteration = 0;
        out.max_perturbation_norm = perturbation_norm(cur, x.data, config.norm);
    }

    std::vector<float> grad_buf, z(d), next(d);
    Tensor probe;
    probe.shape = x.shape;

    for (int i = 0; i < config.iterations; ++i) {
        probe.data = cur;
        const Tensor grad = input_gradient(model, probe, config.loss, config.mode, label,
                                           config.profile);
        const bool all_zero = std::all_of(grad.data.begin(), grad.data.end(),
                                          [](float g) { return g == 0.0f; });
        if (all_zero) {
            ++out.skipped_steps;
            prev = cur;
        } else {
            const double alpha = step_size(i, config.iterations, config.eps);
            if (config.norm == NormKind::Linf) {
                for (int j = 0; j < d; ++j) {
                    const float s = grad.data[j] > 0.0f ? 1.0f : (grad.data[j] < 0.0f ? -1.0f : 0.0f);
                    z[j] = cur[j] + static_cast<float>(alpha) * s;
                }
            } else {
                double sq = 0.0;
                for (float g : grad.data) sq += static_cast<double>(g) * g;
                const double nrm = std::sqrt(sq);
                for (int j = 0; j < d; ++j) {
                    z[j] = cur[j] + static_cast<float>(alpha * grad.data[j] / nrm);
                }
            }
            for (int j = 0; j < d; ++j) z[j] -= x.data[j];
            project(z, config.norm, config.eps, x.data);
            for (int j = 0; j < d; ++j) z[j] += x.data[j];

            const float nu = static_cast<float>(config.momentum);
            for (int j = 0; j < d; ++j) {
                next[j] = cur[j] + nu * (z[j] - cur[j]) + (1.0f - nu) * (cur[j] - prev[j]);
                next[j] -= x.data[j];
            }
            project(next, config.norm, config.eps, x.data);
            for (int j = 0; j < d; ++j) next[j] += x.data[j];

            prev = cur;
            cur = next;
        }

        const IterateEval ev = evaluate(cur);
        out.loss_trace.push_back(ev.loss);
        if (track_scenario) out.scenario_trace.push_back(ev.scenario);
        if (ev.success && !out.first_success_iteration) out.first_success_iteration = i + 1;

        // Keep the highest-loss successful iterate; fall back to the
        // highest-loss iterate overall while none succeeds.
        if ((ev.success && !best_success) ||
            (ev.success == best_success && ev.loss > best_loss)) {
            best = cur;
            best_loss = ev.loss;
            best_success = ev.success;
        }

        out.max_perturbation_norm =
            std::max(out.max_perturbation_norm, perturbation_norm(cur, x.data, config.norm));
        for (int j = 0; j < d; ++j) {
            if (cur[j] < 0.0f || cur[j] > 1.0f) out.box_ok = false;
        }
    }

    out.success = out.first_success_iteration.has_value();
    out.best_adversarial.shape = x.shape;
    out.best_adversarial.data = std::move(best);
    out.final_norm = perturbation_norm(out.best_adversarial.data, x.data, config.norm);
    return out;
}

RobustReport robust_accuracy(const Mlp& model, const std::vector<Tensor>& images,
                             const std::vector<int>& labels, const AttackConfig& config) {
    if (images.empty()) throw std::invalid_argument("empty dataset");

    RobustReport report;
    report.config = config;
    report.samples.resize(images.size());
    std::vector<int> skipped(images.size(), 0);

    auto worker = [&](size_t begin, size_t stride) {
        for (size_t i = begin; i < images.size(); i += stride) {
            const AttackOutcome out = pgd_attack(model, images[i], labels[i], config,
                                                 static_cast<int>(i));
            SampleRecord& rec = report.samples[i];
            rec.index = static_cast<int>(i);
            rec.clean_correct = out.clean_correct;
            rec.success = out.success;
            rec.first_success_iteration =
                out.first_success_iteration ? *out.first_success_iteration : -1;
            rec.final_norm = out.final_norm;
            skipped[i] = out.skipped_steps;
        }
    };

    int threads = config.threads;
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads < 1) threads = 1;
    }
    threads = std::min<int>(threads, static_cast<int>(images.size()));
    if (threads <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
        for (auto& th : pool) th.join();
    }

    int clean = 0, attacked = 0;
    long first_sum = 0;
    int first_count = 0;
    for (size_t i = 0; i < report.samples.size(); ++i) {
        const SampleRecord& rec = report.samples[i];
        if (rec.clean_correct) ++clean;
        if (rec.success) {
            ++attacked;
            first_sum += rec.first_success_iteration;
            ++first_count;
        }
        report.total_skipped_steps += skipped[i];
    }
    const double n = static_cast<double>(report.samples.size());
    report.clean_accuracy = clean / n;
    report.robust_accuracy = (n - attacked) / n;
    report.mean_first_success = first_count > 0 ? static_cast<double>(first_sum) / first_count : 0.0;
    return report;
}

}  // namespace fplab
