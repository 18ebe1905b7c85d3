#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include "fedmt/config.hpp"
#include "fedmt/errors.hpp"
#include "fedmt/experiment.hpp"

using namespace fedmt;

namespace {

const char* kTinyConfig = R"(seed = 7
baseline-epochs = 2
fl-rounds = 2
epochs-per-round = 1
initial-lr = 0.01
batch-size = 8
bootstrap-replicates = 50
validation-fraction = 0.25
gradcam-samples = 2
model.conv-channels = 2,3,4
model.dense-width = 5

[task.alpha]
kind = blob
n = 32
hw = 8
positive-rate = 0.5
noise-sigma = 0.1

[task.beta]
kind = ring
n = 32
hw = 8
positive-rate = 0.5
noise-sigma = 0.1
)";

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("full config parses into the expected fields") {
    ExperimentConfig cfg = parse_config_text(kTinyConfig, "mem");
    CHECK(cfg.seed == 7);
    CHECK(cfg.baseline_epochs == 2);
    CHECK(cfg.fl_rounds == 2);
    CHECK(cfg.initial_lr == doctest::Approx(0.01));
    CHECK(cfg.batch_size == 8);
    CHECK(cfg.bootstrap_replicates == 50);
    CHECK(cfg.validation_fraction == doctest::Approx(0.25));
    CHECK(cfg.model.conv_channels == std::array<uint32_t, 3>{2, 3, 4});
    CHECK(cfg.model.dense_width == 5);
    CHECK(cfg.model.in_h == 8);
    REQUIRE(cfg.tasks.size() == 2);
    CHECK(cfg.tasks[0].name == "alpha");
    CHECK(cfg.tasks[0].kind == TaskKind::blob);
    CHECK(cfg.tasks[1].name == "beta");
    CHECK(cfg.tasks[1].kind == TaskKind::ring);
    cfg.validate();
}

TEST_CASE("defaults survive an empty task-only config") {
    ExperimentConfig cfg = parse_config_text("[task.a]\nkind = blob\n", "mem");
    CHECK(cfg.seed == 42);
    CHECK(cfg.baseline_epochs == 300);
    CHECK(cfg.fl_rounds == 300);
    CHECK(cfg.lr_schedule == LrSchedule::cosine_to_floor);
    CHECK(cfg.aggregation_weighting == Weighting::samples);
    CHECK(cfg.transport == TransportKind::in_process);
    CHECK(cfg.output_dir == "run");
}

TEST_CASE("parse errors carry the origin and line number") {
    std::string msg =
        message_of([] { parse_config_text("seed = 1\nbogus-key = 2\n", "conf"); });
    CHECK(msg.find("conf") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);

    msg = message_of([] { parse_config_text("seed = frog\n", "conf"); });
    CHECK(msg.find("1") != std::string::npos);

    CHECK_THROWS_AS(parse_config_text("kind = blob\n", "conf"), ConfigError);  // outside a task
    CHECK_THROWS_AS(parse_config_text("[task.a]\nseed = 1\n", "conf"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("just words\n", "conf"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[task.]\n", "conf"), ConfigError);
}

TEST_CASE("validation rejects inconsistent settings") {
    ExperimentConfig cfg = parse_config_text(kTinyConfig, "mem");
    SUBCASE("no tasks") {
        cfg.tasks.clear();
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("task grid differs from model input") {
        cfg.tasks[0].hw = 16;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("zero batch size") {
        cfg.batch_size = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
    SUBCASE("fraction out of range") {
        cfg.validation_fraction = 1.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    }
}

TEST_CASE("a tiny experiment runs end to end, deterministically, with artifacts") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fedmt_exp_test";
    fs::remove_all(dir);

    ExperimentConfig cfg = parse_config_text(kTinyConfig, "mem");
    cfg.output_dir = (dir / "a").string();
    cfg.validate();
    ExperimentResult r1 = run_experiment(cfg, true);
    cfg.output_dir = (dir / "b").string();
    ExperimentResult r2 = run_experiment(cfg, true);

    REQUIRE(r1.reports.size() == 4);  // 2 tasks x {baseline, fl}
    CHECK(r1.reports[0].model == "standard");
    CHECK(r1.reports[1].model == "standard-fl");
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(r1.reports[i].auroc == r2.reports[i].auroc);
        CHECK(r1.reports[i].loss == r2.reports[i].loss);
    }
    CHECK(r1.comparisons.at("alpha").p_value == r2.comparisons.at("alpha").p_value);
    CHECK(r1.round_log.size() == 2 * 2);  // rounds x nodes

    for (const char* name : {"metrics.csv", "comparison.json", "rounds.csv", "run-meta.json"}) {
        CHECK(fs::exists(dir / "a" / name));
    }
    std::ifstream metrics(dir / "a" / "metrics.csv");
    std::string header;
    std::getline(metrics, header);
    CHECK(header == "task,model,loss,sensitivity,specificity,aupr,auroc,p_value");
    int rows = 0;
    for (std::string line; std::getline(metrics, line);) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == 4);

    // identical runs write identical metrics files
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    CHECK(slurp(dir / "a" / "metrics.csv") == slurp(dir / "b" / "metrics.csv"));
    fs::remove_all(dir);
}

TEST_CASE("summary table mentions every task and model") {
    ExperimentConfig cfg = parse_config_text(kTinyConfig, "mem");
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fedmt_sum_test";
    cfg.output_dir = dir.string();
    ExperimentResult r = run_experiment(cfg, true);
    const std::string table = summary_table(r);
    CHECK(table.find("alpha") != std::string::npos);
    CHECK(table.find("beta") != std::string::npos);
    CHECK(table.find("standard-fl") != std::string::npos);
    fs::remove_all(dir);
}
