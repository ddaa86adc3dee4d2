// Acceptance suite: one pass/fail line per criterion. Returns the number of
// failed criteria. Heavier experiments ride on the bundled digits fixture.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fplab/attack.hpp"
#include "fplab/data.hpp"
#include "fplab/losses.hpp"
#include "fplab/net.hpp"
#include "fplab/report.hpp"
#include "fplab/tstar.hpp"

using namespace fplab;
namespace fs = std::filesystem;

namespace {

struct Checker {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

std::vector<double> random_logits(std::mt19937_64& gen, int k) {
    std::normal_distribution<double> dist(0.0, 2.0);
    std::vector<double> z(k);
    for (double& v : z) v = dist(gen);
    return z;
}

double two_class_fixed_point() {
    double t = 1.0;
    for (int i = 0; i < 200; ++i) t = 1.0 + std::exp(-t);
    return t;
}

// ---------------------------------------------------------------- criteria

void criterion_precision_constants(Checker& c) {
    const PrecisionProfile p16 = profile_for(16);
    const PrecisionProfile p32 = profile_for(32);
    const PrecisionProfile p64 = profile_for(64);
    c.require(p16.eps_max == 0x1p-10 && p32.eps_max == 0x1p-23 && p64.eps_max == 0x1p-52,
              "eps_max constants");
    c.require(p16.lambda == 16.6355 && p32.lambda == 103.2789 && p64.lambda == 744.4401,
              "lambda constants");
    for (const PrecisionProfile& p : {p16, p32, p64}) {
        c.require(round_to_precision(std::exp(-(p.lambda + 1.0)), p) == 0.0,
                  "exp(-(lambda+1)) flushes to zero");
        c.require(round_to_precision(std::exp(-(p.lambda - 1.0)), p) > 0.0,
                  "exp(-(lambda-1)) stays positive");
    }
}

void check_solver_against_grid(Checker& c, const RankedLogits& r, const AttackScenario& s,
                               const std::string& tag) {
    const ScaleFactorSolution sol = solve_t_star(r, s, profile_for(32));
    const int n = 100000;
    const auto [bt, bg] = brute_force_t_star(r, s, 1e-3, 50.0, n);
    const double step = (50.0 - 1e-3) / (n - 1);
    c.require(std::fabs(sol.t_star - bt) <= step, tag + ": solver within one grid step");
    const double ref = std::max(1.0, std::fabs(g_derivative(r, s, 1.0)));
    c.require(sol.residual <= 1e-8 * ref, tag + ": residual bound");
}

void criterion_tstar_oracle(Checker& c) {
    {
        const RankedLogits a = rank_logits(reference_curve_cases()[0].logits);
        check_solver_against_grid(c, a, classify_scenario(a, 3, AttackMode::Untargeted),
                                  "fig1a");
        const RankedLogits d = rank_logits(reference_curve_cases()[3].logits);
        check_solver_against_grid(c, d, classify_scenario(d, 1, AttackMode::Targeted), "fig1d");
    }
    std::mt19937_64 gen(2024);
    int done = 0;
    const int ks[] = {2, 10, 100};
    for (int rep = 0; done < 100; ++rep) {
        const int k = ks[rep % 3];
        const auto z = random_logits(gen, k);
        const RankedLogits r = rank_logits(z);
        if (r.delta < 1e-4) continue;
        const AttackScenario uu = classify_scenario(r, r.index_at_rank(1), AttackMode::Untargeted);
        check_solver_against_grid(c, r, uu, "random k=" + std::to_string(k));
        ++done;
    }
}

void criterion_two_class(Checker& c) {
    const RankedLogits two = rank_logits(std::vector<double>{1.0, 0.0});
    const AttackScenario uu = classify_scenario(two, 0, AttackMode::Untargeted);
    const ScaleFactorSolution sol = solve_t_star(two, uu, profile_for(32));
    const double reference = two_class_fixed_point();
    c.require(std::fabs(sol.t_star - reference) < 1e-6, "two-class root matches fixed point");
    c.require(std::fabs(reference - 1.27846) < 1e-5, "fixed point near 1.27846");
}

void criterion_derivative_fidelity(Checker& c) {
    std::mt19937_64 gen(4096);
    int done = 0;
    while (done < 100) {
        const int k = 3 + static_cast<int>(gen() % 10);
        const auto z = random_logits(gen, k);
        const RankedLogits r = rank_logits(z);
        if (r.delta < 1e-4) continue;
        ++done;

        const int top = r.index_at_rank(1);
        const int low = r.index_at_rank(r.k());
        const AttackScenario scenarios[] = {
            classify_scenario(r, top, AttackMode::Untargeted),
            classify_scenario(r, low, AttackMode::Untargeted),
            classify_scenario(r, low, AttackMode::Targeted),
            classify_scenario(r, top, AttackMode::Targeted),
        };
        for (int ti = 0; ti < 10; ++ti) {
            const double t = 0.2 + ti * 0.7;
            for (const AttackScenario& s : scenarios) {
                const double h = 1e-6 * t;
                const double numeric =
                    (g_value(r, s, t + h) - g_value(r, s, t - h)) / (2.0 * h);
                const double analytic = g_derivative(r, s, t);
                const double scale = std::max({std::fabs(analytic), std::fabs(numeric), 1e-12});
                if (std::fabs(analytic - numeric) / scale > 1e-6) {
                    c.require(false, "derivative mismatch, scenario " +
                                         std::string(scenario_name(s.kind)));
                    return;
                }
                const bool monotone = s.kind == ScenarioKind::UntargetedSuccessful ||
                                      s.kind == ScenarioKind::TargetedUnsuccessful;
                if (monotone && analytic <= 0.0) {
                    c.require(false, "monotone scenario with non-positive derivative");
                    return;
                }
            }
        }
        // stationarity function: strictly decreasing until its single sign
        // change, never positive again after it
        double prev = stationarity(r, 0.05);
        bool crossed = prev < 0.0;
        for (double t = 0.15; t < 8.0; t += 0.1) {
            const double h = stationarity(r, t);
            if (!crossed) {
                if (!(h < prev)) {
                    c.require(false, "stationarity function not decreasing before its root");
                    return;
                }
                if (h < 0.0) crossed = true;
            } else if (h >= 0.0) {
                c.require(false, "stationarity function re-crossed zero");
                return;
            }
            prev = h;
        }
    }
}

void criterion_gradient_decomposition(Checker& c) {
    std::mt19937_64 gen(555);
    for (int rep = 0; rep < 50; ++rep) {
        const auto z = random_logits(gen, 10);
        const RankedLogits r = rank_logits(z);
        if (r.delta < 1e-4) continue;
        const int y = r.index_at_rank(1);
        const AttackScenario uu = classify_scenario(r, y, AttackMode::Untargeted);
        for (double t : {0.5, 1.0, 3.0}) {
            const LossEvaluation eval = scaled_ce_loss(r, y, t / r.delta);
            const double coefficient = -eval.logit_gradient[y];
            const double expected = g_value(r, uu, t);
            if (std::fabs(coefficient - expected) > 1e-12 * std::max(1.0, std::fabs(expected))) {
                c.require(false, "direction coefficient mismatch");
                return;
            }
        }
    }

    // reverse-mode input gradients against central differences
    const Mlp model = make_mlp({12, 16, 8, 5}, 99);
    std::mt19937_64 xg(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> x(12);
    for (double& v : x) v = unit(xg);

    const auto analytic64 = input_gradient_check64(model, x, LossKind::Ce,
                                                   AttackMode::Untargeted, 3);
    double grad_scale = 1e-12;
    for (double g : analytic64) grad_scale = std::max(grad_scale, std::fabs(g));

    std::vector<int> coords;
    for (int i = 0; i < 12; ++i) coords.push_back(i);
    for (int i : coords) {
        std::vector<double> xp = x, xm = x;
        const double h = 1e-4;
        xp[i] += h;
        xm[i] -= h;
        const double lp = ce_loss(rank_logits(forward_check64(model, xp)), 3).value;
        const double lm = ce_loss(rank_logits(forward_check64(model, xm)), 3).value;
        const double numeric = (lp - lm) / (2.0 * h);
        c.require(std::fabs(analytic64[i] - numeric) <= 1e-7 * grad_scale + 1e-9,
                  "64-bit check-mode gradient vs finite differences");
    }

    Tensor xt;
    xt.shape = {12};
    xt.data.assign(x.begin(), x.end());
    const Tensor g32 = input_gradient(model, xt, LossKind::Ce, AttackMode::Untargeted, 3,
                                      profile_for(32));
    for (int i = 0; i < 12; ++i) {
        c.require(std::fabs(g32.data[i] - analytic64[i]) <= 1e-4 * grad_scale,
                  "32-bit gradient within 1e-4 of the check mode");
    }
}

void criterion_attack_feasibility(Checker& c) {
    const Dataset data = synth_blobs(0, 4, 50, 16, 3.0);  // 200 samples
    TrainConfig tc;
    tc.epochs = 8;
    tc.batch_size = 25;
    tc.learning_rate = 0.1;
    const Mlp model = train_mlp(data.images, data.labels, {16, 24, 4}, tc);

    AttackConfig config;
    config.eps = 0.1;
    config.iterations = 25;
    config.seed = 0;
    config.loss = LossKind::Tmifpe;
    const float eps_slack = static_cast<float>(config.eps) * (1.0f + 4e-7f);

    for (int i = 0; i < data.size(); ++i) {
        const AttackOutcome a = pgd_attack(model, data.images[i], data.labels[i], config, i);
        const AttackOutcome b = pgd_attack(model, data.images[i], data.labels[i], config, i);
        if (a.max_perturbation_norm > eps_slack || !a.box_ok) {
            c.require(false, "iterate violated the ball or box at sample " + std::to_string(i));
            return;
        }
        if (a.best_adversarial.data != b.best_adversarial.data || a.loss_trace != b.loss_trace) {
            c.require(false, "seed-0 reruns differ at sample " + std::to_string(i));
            return;
        }
    }

    c.require(step_size(0, 100, 0.3) == 0.6, "step size at i=0 is 2*eps");
    c.require(std::fabs(step_size(50, 100, 0.3) - 0.3) < 1e-15, "step size at I/2 is eps");
    c.require(std::fabs(step_size(100, 100, 0.3)) < 1e-16, "step size at I is 0");
}

void criterion_desk_comparison(Checker& c) {
    const std::string dir = FPLAB_DATA_DIR;
    const Dataset digits = load_idx(dir + "/digits-images-idx3-ubyte",
                                    dir + "/digits-labels-idx1-ubyte");
    const Dataset train_pool = slice(digits, 0, 1497);
    const Dataset test_pool = slice(digits, 1497, digits.size());
    const Dataset train_set = upsample_augment(train_pool, 1, 10000, 28);
    const Dataset test_set = upsample_augment(test_pool, 2, 2000, 28);

    TrainConfig tc;
    tc.epochs = 6;
    tc.batch_size = 64;
    tc.learning_rate = 0.05;
    tc.seed = 0;
    tc.adversarial.eps = 0.1;
    tc.adversarial.steps = 5;

    TrainReport tr;
    const Mlp model = train_mlp(train_set.images, train_set.labels, {784, 128, 64, 10}, tc,
                                &test_set.images, &test_set.labels, &tr);
    std::printf("    desk model: train acc %.4f, test acc %.4f\n", tr.train_accuracy,
                tr.test_accuracy);
    c.require(tr.test_accuracy > 0.8, "desk model reaches usable test accuracy");

    AttackConfig config;
    config.eps = 0.3;
    config.iterations = 100;
    config.momentum = 0.75;
    config.seed = 0;

    const CompareResult result = compare_losses(model, test_set.images, test_set.labels, config);
    std::printf("    robust accuracy:");
    for (size_t i = 0; i < result.losses.size(); ++i) {
        std::printf(" %s %.4f", loss_name(result.losses[i]), result.robust[i]);
    }
    std::printf("\n");

    const double ce = result.robust[0];
    const double mifpe = result.robust[3];
    const double tmifpe = result.robust[4];
    c.require(tmifpe <= ce, "adaptive scale never regresses against plain CE");
    c.require(tmifpe <= mifpe + 0.002, "adaptive scale within 0.2pp of the unit scale");
}

void criterion_curve_regeneration(Checker& c) {
    const std::string out = (fs::temp_directory_path() / "fplab_accept_curves").string();
    fs::remove_all(out);
    const auto paths = emit_reference_curves(out);
    c.require(paths.size() == 4, "four scenario files");

    auto read_rows = [&](const std::string& path) {
        std::vector<std::vector<double>> rows;
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            std::vector<double> row;
            std::istringstream ss(line);
            std::string tok;
            while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
            rows.push_back(std::move(row));
        }
        return rows;
    };

    // (i) stationary scenarios: unimodal with argmax at the marker
    for (const std::string& path : {paths[0], paths[3]}) {
        const auto rows = read_rows(path);
        size_t peak = 0;
        long marked = -1;
        for (size_t i = 0; i < rows.size(); ++i) {
            if (rows[i][1] > rows[peak][1]) peak = i;
            if (rows[i][5] > 0.0) marked = static_cast<long>(i);
        }
        c.require(marked >= 0, "stationary curve has a marker");
        c.require(std::llabs(marked - static_cast<long>(peak)) <= 1,
                  "grid argmax within one step of the marker");
        bool unimodal = true;
        for (size_t i = 1; i <= peak; ++i) {
            if (rows[i][1] < rows[i - 1][1] - 1e-12) unimodal = false;
        }
        for (size_t i = peak + 1; i < rows.size(); ++i) {
            if (rows[i][1] > rows[i - 1][1] + 1e-12) unimodal = false;
        }
        c.require(unimodal, "stationary curve unimodal");
    }

    // (ii) monotone scenarios: non-decreasing up to the last marker
    for (const std::string& path : {paths[1], paths[2]}) {
        const auto rows = read_rows(path);
        long last_marker = 0;
        for (size_t i = 0; i < rows.size(); ++i) {
            if (rows[i][5] > 0.0) last_marker = static_cast<long>(i);
        }
        c.require(last_marker > 0, "monotone curve has a marker");
        bool non_decreasing = true;
        for (long i = 1; i <= last_marker; ++i) {
            if (rows[i][1] < rows[i - 1][1] - 1e-15) non_decreasing = false;
        }
        c.require(non_decreasing, "monotone curve non-decreasing up to the bound");
    }

    // (iii) fixed bound ratio between 16- and 64-bit columns
    for (const std::string& path : paths) {
        const auto rows = read_rows(path);
        for (size_t i = 0; i < rows.size(); i += 50) {
            if (std::isfinite(rows[i][2]) && std::isfinite(rows[i][4]) && rows[i][4] > 0.0) {
                const double ratio = rows[i][2] / rows[i][4];
                if (std::fabs(ratio / 0x1p42 - 1.0) > 1e-9) {
                    c.require(false, "bound ratio != 2^42");
                    return;
                }
            }
        }
    }
}

void criterion_idx_ingestion(Checker& c) {
    const std::string dir = FPLAB_DATA_DIR;
    const Dataset d = load_idx(dir + "/digits-images-idx3-ubyte",
                               dir + "/digits-labels-idx1-ubyte");
    c.require(d.size() == 1797, "bundled digits parse");

    const fs::path tmp = fs::temp_directory_path() / "fplab_accept_idx";
    fs::create_directories(tmp);
    auto be32 = [](std::ofstream& out, std::uint32_t v) {
        const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                    static_cast<unsigned char>(v >> 16),
                                    static_cast<unsigned char>(v >> 8),
                                    static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<const char*>(b), 4);
    };
    const std::string img_path = (tmp / "img").string();
    const std::string lbl_path = (tmp / "lbl").string();
    {
        std::ofstream img(img_path, std::ios::binary);
        be32(img, 0x00000803u);
        be32(img, 1);
        be32(img, 1);
        be32(img, 2);
        const unsigned char px[2] = {255, 0};
        img.write(reinterpret_cast<const char*>(px), 2);
        std::ofstream lbl(lbl_path, std::ios::binary);
        be32(lbl, 0x00000801u);
        be32(lbl, 1);
        const unsigned char y = 4;
        lbl.write(reinterpret_cast<const char*>(&y), 1);
    }
    const Dataset small = load_idx(img_path, lbl_path);
    c.require(small.images[0].data[0] == 1.0f, "pixel 255 maps to exactly 1.0");
    c.require(small.images[0].data[1] == 0.0f, "pixel 0 maps to exactly 0.0");

    bool rejected = false;
    try {
        static_cast<void>(load_idx(lbl_path, img_path));
    } catch (const std::runtime_error&) {
        rejected = true;
    }
    c.require(rejected, "corrupted magic rejected");
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<void(Checker&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"1. precision constants and underflow bracket", criterion_precision_constants},
        {"2. optimal-scale solver matches the grid oracle", criterion_tstar_oracle},
        {"3. two-class closed form", criterion_two_class},
        {"4. analytic derivative fidelity and sign claims", criterion_derivative_fidelity},
        {"5. gradient decomposition and reverse-mode fidelity", criterion_gradient_decomposition},
        {"6. attack feasibility and determinism", criterion_attack_feasibility},
        {"7. desk-scale loss comparison", criterion_desk_comparison},
        {"8. reference curve regeneration", criterion_curve_regeneration},
        {"9. idx ingestion", criterion_idx_ingestion},
    };

    int failed = 0;
    for (const Criterion& criterion : criteria) {
        Checker checker;
        const auto start = std::chrono::steady_clock::now();
        try {
            criterion.run(checker);
        } catch (const std::exception& e) {
            checker.failures.push_back(std::string("exception: ") + e.what());
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (checker.failures.empty()) {
            std::printf("[PASS] %s (%.2fs)\n", criterion.name, seconds);
        } else {
            ++failed;
            std::printf("[FAIL] %s (%.2fs)\n", criterion.name, seconds);
            for (const std::string& f : checker.failures) {
                std::printf("       - %s\n", f.c_str());
            }
        }
        std::fflush(stdout);
    }
    return failed;
}
