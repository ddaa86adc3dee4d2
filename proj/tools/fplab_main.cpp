#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fplab/attack.hpp"
#include "fplab/data.hpp"
#include "fplab/losses.hpp"
#include "fplab/net.hpp"
#include "fplab/report.hpp"
#include "fplab/tstar.hpp"

namespace {

using namespace fplab;

std::vector<double> parse_logits(const std::string& csv) {
    std::vector<double> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
    return out;
}

std::vector<int> parse_arch(const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

struct DatasetFlags {
    std::string kind = "synth";
    std::string images_path, labels_path;
    long limit = -1;
    int expand = 0;
    int side = 28;
    // synth parameters
    std::uint64_t seed = 0;
    int classes = 10;
    int per_class = 100;
    int dim = 64;
    double separation = 4.0;
};

void add_dataset_flags(CLI::App* cmd, DatasetFlags& flags) {
    cmd->add_option("--dataset", flags.kind, "dataset kind: synth or idx")
        ->check(CLI::IsMember({"synth", "idx"}));
    cmd->add_option("--images", flags.images_path, "IDX image file");
    cmd->add_option("--labels", flags.labels_path, "IDX label file");
    cmd->add_option("--limit", flags.limit, "truncate the dataset");
    cmd->add_option("--expand", flags.expand,
                    "grow the dataset to N samples by seeded upsampling augmentation");
    cmd->add_option("--side", flags.side, "target image side for --expand");
    cmd->add_option("--data-seed", flags.seed, "seed for synthetic data / augmentation");
    cmd->add_option("--classes", flags.classes, "synth: class count");
    cmd->add_option("--per-class", flags.per_class, "synth: samples per class");
    cmd->add_option("--dim", flags.dim, "synth: dimensionality");
    cmd->add_option("--sep", flags.separation, "synth: cluster separation");
}

Dataset resolve_dataset(const DatasetFlags& flags) {
    Dataset d;
    if (flags.kind == "idx") {
        if (flags.images_path.empty() || flags.labels_path.empty()) {
            throw std::invalid_argument("idx dataset needs --images and --labels");
        }
        d = load_idx(flags.images_path, flags.labels_path, flags.expand > 0 ? -1 : flags.limit);
        if (flags.expand > 0) {
            d = upsample_augment(d, flags.seed, flags.expand, flags.side);
            if (flags.limit >= 0) d = slice(d, 0, std::min<long>(flags.limit, d.size()));
        }
    } else {
        d = synth_blobs(flags.seed, flags.classes, flags.per_class, flags.dim, flags.separation);
        if (flags.limit >= 0) d = slice(d, 0, std::min<long>(flags.limit, d.size()));
    }
    return d;
}

nlohmann::json dataset_echo(const DatasetFlags& flags, const Dataset& d) {
    return {{"kind", flags.kind},          {"images", flags.images_path},
            {"labels", flags.labels_path}, {"limit", flags.limit},
            {"expand", flags.expand},      {"side", flags.side},
            {"data_seed", flags.seed},     {"classes", flags.classes},
            {"per_class", flags.per_class}, {"dim", flags.dim},
            {"sep", flags.separation},     {"size", d.size()}};
}

TargetRule parse_target_rule(const std::string& s) {
    TargetRule rule;
    if (s == "runner-up") return rule;
    if (s.rfind("fixed:", 0) == 0) {
        rule.kind = TargetRule::Kind::Fixed;
        rule.fixed_class = std::stoi(s.substr(6));
        return rule;
    }
    throw std::invalid_argument("bad target rule: " + s + " (expected runner-up or fixed:<k>)");
}

int cmd_analyze(const std::string& logits_csv, const std::string& scenario_flag, int label_flag,
                int precision) {
    const RankedLogits ranked = rank_logits(parse_logits(logits_csv));
    AttackMode mode = AttackMode::Untargeted;
    int label;
    if (scenario_flag == "uu") {
        label = ranked.index_at_rank(1);
    } else if (scenario_flag == "us") {
        label = label_flag >= 0 ? label_flag : ranked.index_at_rank(2);
    } else if (scenario_flag == "tu") {
        mode = AttackMode::Targeted;
        label = label_flag >= 0 ? label_flag : ranked.index_at_rank(2);
    } else if (scenario_flag == "ts") {
        mode = AttackMode::Targeted;
        label = label_flag >= 0 ? label_flag : ranked.index_at_rank(1);
    } else {
        throw std::invalid_argument("bad scenario: " + scenario_flag);
    }

    const AttackScenario scenario = classify_scenario(ranked, label, mode);
    const ScaleFactorSolution sol = solve_t_star(ranked, scenario, profile_for(precision));

    std::printf("config: analyze --logits %s --scenario %s --label %d --precision %d\n",
                logits_csv.c_str(), scenario_flag.c_str(), label, precision);
    std::printf("scenario %s\n", scenario_name(scenario.kind));
    std::printf("label_rank %d\n", scenario.label_rank);
    std::printf("gap %.10g\n", ranked.delta);
    std::printf("t_star %.10g\n", sol.t_star);
    std::printf("c_star %.10g\n", sol.c_star);
    std::printf("g_at_star %.10g\n", sol.g_at_star);
    for (const auto& [bits, bound] : sol.delta_sup_at_star) {
        std::printf("delta_sup_%d %.10g\n", bits, bound);
    }
    std::printf("method %s iterations %d residual %.3g%s\n",
                sol.method == SolveMethod::Bisection ? "bisection" : "clamped_formula",
                sol.iterations, sol.residual, sol.underflow_flagged ? " underflow_flagged" : "");
    return 0;
}

AttackConfig make_attack_config(const std::string& loss, const std::string& norm, double eps,
                                int iters, double momentum, std::uint64_t seed, int precision,
                                const std::string& mode, const std::string& target_rule) {
    AttackConfig config;
    config.loss = loss_from_name(loss);
    config.norm = norm_from_name(norm);
    config.eps = eps;
    config.iterations = iters;
    config.momentum = momentum;
    config.seed = seed;
    config.profile = profile_for(precision);
    config.mode = mode == "targeted" ? AttackMode::Targeted : AttackMode::Untargeted;
    config.target_rule = parse_target_rule(target_rule);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"floating-point error analysis and PGD attack laboratory"};
    app.require_subcommand(1);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "solve the optimal scale for a logit vector");
    std::string an_logits, an_scenario = "uu";
    int an_label = -1, an_precision = 32;
    analyze->add_option("--logits", an_logits, "comma-separated logits")->required();
    analyze->add_option("--scenario", an_scenario, "uu, us, tu, or ts");
    analyze->add_option("--label", an_label, "class index driving the scenario");
    analyze->add_option("--precision", an_precision, "lambda profile bits");

    // train
    auto* train = app.add_subcommand("train", "train the classifier");
    DatasetFlags tr_data;
    add_dataset_flags(train, tr_data);
    std::string tr_arch = "auto", tr_out = "model.weights";
    TrainConfig tr_config;
    double tr_holdout = 0.0;
    train->add_option("--arch", tr_arch, "layer widths, e.g. 784,128,64,10");
    train->add_option("--out", tr_out, "weights output path");
    train->add_option("--epochs", tr_config.epochs);
    train->add_option("--batch", tr_config.batch_size);
    train->add_option("--lr", tr_config.learning_rate);
    train->add_option("--train-momentum", tr_config.momentum);
    train->add_option("--seed", tr_config.seed);
    train->add_option("--adv-eps", tr_config.adversarial.eps, "adversarial training budget");
    train->add_option("--adv-steps", tr_config.adversarial.steps, "adversarial training steps");
    train->add_option("--adv-step-size", tr_config.adversarial.step_size);
    train->add_option("--holdout", tr_holdout, "fraction reserved for test accuracy");

    // attack
    auto* attack = app.add_subcommand("attack", "run the PGD attack and write a JSON report");
    DatasetFlags at_data;
    add_dataset_flags(attack, at_data);
    std::string at_model, at_loss = "ce", at_norm = "linf", at_mode = "untargeted";
    std::string at_target = "runner-up", at_out = "attack_report.json";
    double at_eps = 0.3, at_momentum = 0.75;
    int at_iters = 100, at_precision = 32;
    std::uint64_t at_seed = 0;
    attack->add_option("--model", at_model, "weights manifest path")->required();
    attack->add_option("--loss", at_loss)->check(CLI::IsMember({"ce", "cw", "dlr", "mifpe", "tmifpe"}));
    attack->add_option("--norm", at_norm)->check(CLI::IsMember({"linf", "l2"}));
    attack->add_option("--eps", at_eps);
    attack->add_option("--iters", at_iters);
    attack->add_option("--momentum", at_momentum);
    attack->add_option("--seed", at_seed);
    attack->add_option("--precision", at_precision);
    attack->add_option("--mode", at_mode)->check(CLI::IsMember({"untargeted", "targeted"}));
    attack->add_option("--target-rule", at_target);
    attack->add_option("--out", at_out, "report path");

    // compare
    auto* compare = app.add_subcommand("compare", "robust accuracy per surrogate loss");
    DatasetFlags cp_data;
    add_dataset_flags(compare, cp_data);
    std::string cp_model, cp_norm = "linf", cp_out;
    double cp_eps = 0.3, cp_momentum = 0.75;
    int cp_iters = 100, cp_precision = 32;
    std::uint64_t cp_seed = 0;
    compare->add_option("--model", cp_model)->required();
    compare->add_option("--norm", cp_norm)->check(CLI::IsMember({"linf", "l2"}));
    compare->add_option("--eps", cp_eps);
    compare->add_option("--iters", cp_iters);
    compare->add_option("--momentum", cp_momentum);
    compare->add_option("--seed", cp_seed);
    compare->add_option("--precision", cp_precision);
    compare->add_option("--out", cp_out, "optional JSON output path");

    // figure1
    auto* figure1 = app.add_subcommand("figure1", "emit the four reference error curves");
    std::string fg_out = "curves";
    figure1->add_option("--out", fg_out, "output directory");

    try {
        app.parse(argc, argv);

        if (analyze->parsed()) {
            return cmd_analyze(an_logits, an_scenario, an_label, an_precision);
        }

        if (train->parsed()) {
            Dataset d = resolve_dataset(tr_data);
            if (d.size() == 0) throw std::invalid_argument("empty training dataset");
            const int input_dim = d.images[0].numel();
            std::vector<int> widths = tr_arch == "auto"
                                          ? std::vector<int>{input_dim, 128, 64, d.num_classes}
                                          : parse_arch(tr_arch);

            Dataset train_set = d, test_set;
            if (tr_holdout > 0.0) {
                const int cut = static_cast<int>(d.size() * (1.0 - tr_holdout));
                train_set = slice(d, 0, cut);
                test_set = slice(d, cut, d.size());
            }

            TrainReport report;
            const Mlp model = train_mlp(train_set.images, train_set.labels, widths, tr_config,
                                        test_set.size() ? &test_set.images : nullptr,
                                        test_set.size() ? &test_set.labels : nullptr, &report);
            save_weights(model, tr_out);

            nlohmann::json echo;
            echo["command"] = "train";
            echo["dataset"] = dataset_echo(tr_data, d);
            echo["arch"] = widths;
            echo["epochs"] = tr_config.epochs;
            echo["batch"] = tr_config.batch_size;
            echo["lr"] = tr_config.learning_rate;
            echo["train_momentum"] = tr_config.momentum;
            echo["seed"] = tr_config.seed;
            echo["adv_eps"] = tr_config.adversarial.eps;
            echo["adv_steps"] = tr_config.adversarial.steps;
            echo["train_accuracy"] = report.train_accuracy;
            echo["test_accuracy"] = report.test_accuracy;
            write_text_atomic(tr_out + ".json", echo.dump(2) + "\n");
            std::printf("train_accuracy %.4f\n", report.train_accuracy);
            if (test_set.size()) std::printf("test_accuracy %.4f\n", report.test_accuracy);
            std::printf("weights %s\n", tr_out.c_str());
            return 0;
        }

        if (attack->parsed()) {
            const Mlp model = load_weights(at_model);
            Dataset d = resolve_dataset(at_data);
            const AttackConfig config = make_attack_config(at_loss, at_norm, at_eps, at_iters,
                                                           at_momentum, at_seed, at_precision,
                                                           at_mode, at_target);
            const RobustReport report = robust_accuracy(model, d.images, d.labels, config);
            nlohmann::json j = nlohmann::json::parse(attack_report_json(report));
            j["dataset"] = dataset_echo(at_data, d);
            j["model"] = at_model;
            write_text_atomic(at_out, j.dump(2) + "\n");
            std::printf("clean_accuracy %.4f\n", report.clean_accuracy);
            std::printf("robust_accuracy %.4f\n", report.robust_accuracy);
            std::printf("report %s\n", at_out.c_str());
            return 0;
        }

        if (compare->parsed()) {
            const Mlp model = load_weights(cp_model);
            Dataset d = resolve_dataset(cp_data);
            AttackConfig config = make_attack_config("ce", cp_norm, cp_eps, cp_iters, cp_momentum,
                                                     cp_seed, cp_precision, "untargeted",
                                                     "runner-up");
            const CompareResult result = compare_losses(model, d.images, d.labels, config);
            std::fputs(result.table_text.c_str(), stdout);
            if (!cp_out.empty()) {
                nlohmann::json j;
                j["command"] = "compare";
                j["dataset"] = dataset_echo(cp_data, d);
                j["model"] = cp_model;
                j["clean_accuracy"] = result.clean_accuracy;
                for (size_t i = 0; i < result.losses.size(); ++i) {
                    j["robust_accuracy"][loss_name(result.losses[i])] = result.robust[i];
                }
                j["table"] = result.table_text;
                write_text_atomic(cp_out, j.dump(2) + "\n");
            }
            return 0;
        }

        if (figure1->parsed()) {
            const auto paths = emit_reference_curves(fg_out);
            for (const auto& p : paths) std::printf("curve %s\n", p.c_str());
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
