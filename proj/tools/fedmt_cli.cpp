#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fedmt/config.hpp"
#include "fedmt/errors.hpp"
#include "fedmt/experiment.hpp"
#include "fedmt/kernels.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitProtocol = 4;
constexpr int kExitInternal = 5;

struct CommonFlags {
    std::optional<uint64_t> seed;
    std::optional<std::string> output_dir;
    int threads = 1;
    std::optional<std::string> transport;
};

void apply_flags(fedmt::ExperimentConfig& cfg, const CommonFlags& flags) {
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.output_dir) cfg.output_dir = *flags.output_dir;
    if (flags.transport) {
        if (*flags.transport == "in-process") cfg.transport = fedmt::TransportKind::in_process;
        else if (*flags.transport == "stream") cfg.transport = fedmt::TransportKind::stream;
        else throw fedmt::ConfigError("--transport must be in-process or stream");
    }
}

int run_cmd(const std::string& config_path, const CommonFlags& flags) {
    fedmt::ExperimentConfig cfg = fedmt::parse_config_file(config_path);
    apply_flags(cfg, flags);
    fedmt::kernels::set_num_threads(flags.threads);
    fedmt::run_experiment(cfg);
    return 0;
}

int validate_cmd(const std::string& config_path) {
    fedmt::parse_config_file(config_path);
    std::cout << config_path << ": ok\n";
    return 0;
}

int gen_data_cmd(const std::string& spec_path, const std::string& out_prefix,
                 const CommonFlags& flags) {
    fedmt::ExperimentConfig cfg = fedmt::parse_config_file(spec_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (cfg.tasks.size() != 1) {
        throw fedmt::ConfigError("gen-data expects a task-spec with exactly one [task.<name>]");
    }
    const fedmt::TaskConfig& t = cfg.tasks.front();
    if (t.from_files) throw fedmt::ConfigError("gen-data task must use a generator, not files");
    const fedmt::LabeledImageSet set = fedmt::gen_synthetic_task(
        t.kind, t.n, t.hw, t.positive_rate, t.noise_sigma, cfg.seed, t.name);
    fedmt::save_idx_like(set, out_prefix + ".imgs", out_prefix + ".lbls");
    std::cout << "wrote " << set.count() << " samples to " << out_prefix << ".imgs/.lbls\n";
    return 0;
}

int report_cmd(const std::string& run_dir) {
    const std::filesystem::path path = std::filesystem::path(run_dir) / "metrics.csv";
    std::ifstream in(path);
    if (!in) throw fedmt::FormatError("no metrics.csv under '" + run_dir + "'");
    std::string line;
    while (std::getline(in, line)) std::cout << line << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated multi-task training experiments"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    CommonFlags flags;
    app.add_option("--seed", flags.seed, "override the experiment seed");
    app.add_option("--output-dir", flags.output_dir, "override the output directory");
    app.add_option("--threads", flags.threads, "kernel threads (results are identical)");
    app.add_option("--transport", flags.transport, "in-process or stream");

    std::string config_path, spec_path, out_prefix, run_dir;
    CLI::App* run = app.add_subcommand("run", "run a full experiment from a config file");
    run->add_option("config", config_path, "experiment config")->required();
    CLI::App* validate = app.add_subcommand("validate", "schema-check a config file");
    validate->add_option("config", config_path, "experiment config")->required();
    CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset to files");
    gen->add_option("task-spec", spec_path, "config with one [task.<name>] section")->required();
    gen->add_option("out", out_prefix, "output path prefix (.imgs/.lbls)")->required();
    CLI::App* report = app.add_subcommand("report", "print the metrics of a finished run");
    report->add_option("run-dir", run_dir, "run output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_cmd(config_path, flags);
        if (validate->parsed()) return validate_cmd(config_path);
        if (gen->parsed()) return gen_data_cmd(spec_path, out_prefix, flags);
        if (report->parsed()) return report_cmd(run_dir);
    } catch (const fedmt::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const fedmt::FormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fedmt::DomainError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fedmt::ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return kExitProtocol;
    } catch (const fedmt::ConnectionError& e) {
        std::cerr << "protocol error: " << e.what() << "\n";
        return kExitProtocol;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
    return kExitInternal;
}
