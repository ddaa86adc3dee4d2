#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fplab/report.hpp"
#include "fplab/tstar.hpp"
#include "test_util.hpp"

using namespace fplab;
using doctest::Approx;

TEST_SUITE_BEGIN("report");

namespace {

namespace fs = std::filesystem;

std::vector<std::vector<double>> read_csv(const std::string& path, std::string* header) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::istringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

TEST_CASE("reference curve cases pin the exact logits") {
    const auto& cases = reference_curve_cases();
    REQUIRE(cases.size() == 4);
    CHECK(cases[0].logits == oracle::fig1a());
    CHECK(cases[1].logits == oracle::fig1b());
    CHECK(cases[2].logits == oracle::fig1a());
    CHECK(cases[3].logits == oracle::fig1d());
    CHECK(cases[3].label == 1);
    CHECK(cases[3].mode == AttackMode::Targeted);
}

TEST_CASE("curve emission writes four csv files with markers") {
    const auto dir = (fs::temp_directory_path() / "fplab_fig_test").string();
    fs::remove_all(dir);
    const auto paths = emit_reference_curves(dir);
    REQUIRE(paths.size() == 4);

    std::string header;
    const auto uu_rows = read_csv(paths[0], &header);
    CHECK(header == kCurveCsvHeader);
    REQUIRE(uu_rows.size() == 2500);
    CHECK(uu_rows.front()[0] == Approx(0.01));
    CHECK(uu_rows.back()[0] == Approx(50.0));

    // the g column reproduces the direct-summation oracle
    CHECK(uu_rows.front()[1] == Approx(oracle::g_uu(oracle::fig1a(), 0.01)).epsilon(1e-10));

    // exactly one marked row for a stationary scenario, at the curve's peak
    size_t marked = 0, marked_at = 0, peak = 0;
    for (size_t i = 0; i < uu_rows.size(); ++i) {
        if (uu_rows[i][5] > 0.0) {
            ++marked;
            marked_at = i;
        }
        if (uu_rows[i][1] > uu_rows[peak][1]) peak = i;
    }
    CHECK(marked == 1);
    CHECK(std::llabs(static_cast<long long>(marked_at) - static_cast<long long>(peak)) <= 1);

    // config echo sits beside the curves
    CHECK(fs::exists(fs::path(dir) / "figure1_config.json"));
}

TEST_CASE("monotone scenario curves carry per-profile markers") {
    const auto dir = (fs::temp_directory_path() / "fplab_fig_test2").string();
    fs::remove_all(dir);
    const auto paths = emit_reference_curves(dir);
    const auto us_rows = read_csv(paths[1], nullptr);

    // 16-bit bound lands inside the grid: lambda * 2.2 / 2.3
    const double bound16 = 16.6355 * 2.2 / 2.3;
    bool found16 = false;
    for (const auto& row : us_rows) {
        if (row[5] > 0.0 && row[5] == Approx(bound16).epsilon(1e-9)) found16 = true;
    }
    CHECK(found16);

    // g is non-decreasing up to each marker
    size_t last_marked = 0;
    for (size_t i = 0; i < us_rows.size(); ++i) {
        if (us_rows[i][5] > 0.0) last_marked = i;
    }
    for (size_t i = 1; i <= last_marked; ++i) CHECK(us_rows[i][1] >= us_rows[i - 1][1] - 1e-15);
}

TEST_CASE("bound columns scale by the format epsilon ratio") {
    const auto dir = (fs::temp_directory_path() / "fplab_fig_test3").string();
    fs::remove_all(dir);
    const auto paths = emit_reference_curves(dir);
    for (const auto& path : paths) {
        const auto rows = read_csv(path, nullptr);
        for (size_t i = 0; i < rows.size(); i += 100) {
            if (std::isfinite(rows[i][2]) && std::isfinite(rows[i][4])) {
                CHECK(rows[i][2] / rows[i][4] == Approx(0x1p42).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("loss comparison runs all five surrogates deterministically") {
    const Dataset d = synth_blobs(5, 3, 30, 8, 3.0);
    TrainConfig tc;
    tc.epochs = 10;
    tc.learning_rate = 0.1;
    const Mlp model = train_mlp(d.images, d.labels, {8, 12, 3}, tc);

    AttackConfig config;
    config.eps = 0.12;
    config.iterations = 10;
    config.seed = 0;
    config.threads = 2;

    const CompareResult a = compare_losses(model, d.images, d.labels, config);
    REQUIRE(a.losses.size() == 5);
    REQUIRE(a.robust.size() == 5);
    CHECK(a.table_text.find("clean") != std::string::npos);
    for (LossKind kind : a.losses) {
        CHECK(a.table_text.find(loss_name(kind)) != std::string::npos);
    }
    // deltas in the table are robust - ce
    const double ce = a.robust[0];
    char expect[32];
    std::snprintf(expect, sizeof(expect), "(%+.2f)", (a.robust[4] - ce) * 100.0);
    CHECK(a.table_text.find(expect) != std::string::npos);

    const CompareResult b = compare_losses(model, d.images, d.labels, config);
    CHECK(a.table_text == b.table_text);
}

TEST_CASE("attack report json round-trips") {
    const Dataset d = synth_blobs(6, 2, 10, 4, 3.0);
    TrainConfig tc;
    tc.epochs = 5;
    const Mlp model = train_mlp(d.images, d.labels, {4, 2}, tc);

    AttackConfig config;
    config.eps = 0.1;
    config.iterations = 4;
    config.threads = 1;
    const RobustReport report = robust_accuracy(model, d.images, d.labels, config);
    const nlohmann::json j = nlohmann::json::parse(attack_report_json(report));

    CHECK(j["config"]["loss"] == "ce");
    CHECK(j["config"]["eps"] == Approx(0.1));
    CHECK(j["config"]["seed"] == 0);
    CHECK(j["samples"].size() == d.images.size());
    CHECK(j["aggregate"]["robust_accuracy"].get<double>() == Approx(report.robust_accuracy));
    CHECK(j["samples"][0].contains("first_success_iteration"));
}

TEST_SUITE_END();
