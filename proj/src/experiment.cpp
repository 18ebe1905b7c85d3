#include "fedmt/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "fedmt/errors.hpp"
#include "fedmt/gradcam.hpp"
#include "fedmt/rng.hpp"
#include "fedmt/train.hpp"

namespace fedmt {

namespace fs = std::filesystem;

namespace {

LabeledImageSet load_task(const TaskConfig& task, uint64_t seed) {
    if (task.from_files) {
        LabeledImageSet set = load_idx_like(task.images_path, task.labels_path);
        set.task_name = task.name;
        return set;
    }
    return gen_synthetic_task(task.kind, task.n, task.hw, task.positive_rate,
                              task.noise_sigma, seed, task.name);
}

stats::ScoredPredictions score_model(const ModelSpec& spec, const ParameterSet& params,
                                     const LabeledImageSet& validation,
                                     const std::string& model_name) {
    ComputationGraph graph = build_graph(spec);
    stats::ScoredPredictions pred;
    pred.scores = predict(graph, params, validation);
    pred.labels = validation.labels;
    pred.model_name = model_name;
    pred.task_name = validation.task_name;
    return pred;
}

stats::EvalReport evaluate(const stats::ScoredPredictions& pred) {
    stats::EvalReport report;
    report.task = pred.task_name;
    report.model = pred.model_name;

    Tensor scores({static_cast<uint32_t>(pred.scores.size())});
    Tensor labels({static_cast<uint32_t>(pred.labels.size())});
    for (std::size_t i = 0; i < pred.scores.size(); ++i) {
        scores[i] = static_cast<float>(pred.scores[i]);
        labels[i] = static_cast<float>(pred.labels[i]);
    }
    report.loss = bce_loss(scores, labels);
    const stats::SensSpec ss = stats::sens_spec_at(pred, stats::ThresholdPolicy::youden());
    report.sensitivity = ss.sensitivity;
    report.specificity = ss.specificity;
    report.aupr = stats::aupr(pred);
    report.auroc = stats::auroc(pred);
    return report;
}

void write_gradcam(const ExperimentConfig& cfg, const std::string& task,
                   const ParameterSet& params, const LabeledImageSet& validation,
                   const stats::ScoredPredictions& pred) {
    const stats::SensSpec ss = stats::sens_spec_at(pred, stats::ThresholdPolicy::youden());
    const fs::path dir = fs::path(cfg.output_dir) / "gradcam" / task;
    fs::create_directories(dir);
    ComputationGraph graph = build_graph(cfg.model);
    uint32_t written = 0;
    for (uint32_t i = 0; i < validation.count() && written < cfg.gradcam_samples; ++i) {
        if (!validation.labels[i] || pred.scores[i] < ss.threshold) continue;  // true positives
        SaliencyMap map = grad_cam(graph, params, validation.sample(i), i);
        if (!map.normalized) continue;  // identically zero map, nothing to render
        const std::vector<uint8_t> pgm = render_pgm(map, validation.height(), validation.width());
        std::ofstream out(dir / (std::to_string(i) + ".pgm"), std::ios::binary);
        out.write(reinterpret_cast<const char*>(pgm.data()),
                  static_cast<std::streamsize>(pgm.size()));
        ++written;
    }
}

}  // namespace

std::string summary_table(const ExperimentResult& result) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-16s %-12s %7s %12s %12s %7s %7s %8s\n", "Task", "Model",
                  "Loss", "Sensitivity", "Specificity", "AUPR", "AUROC", "p-value");
    out += buf;
    for (const stats::EvalReport& r : result.reports) {
        std::string p = "-";
        if (r.p_value) {
            std::snprintf(buf, sizeof(buf), "%.4f", *r.p_value);
            p = buf;
        }
        std::snprintf(buf, sizeof(buf), "%-16s %-12s %7.4f %12.2f %12.2f %7.4f %7.4f %8s\n",
                      r.task.c_str(), r.model.c_str(), r.loss, 100.0 * r.sensitivity,
                      100.0 * r.specificity, r.aupr, r.auroc, p.c_str());
        out += buf;
    }
    return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool quiet) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);

    // datasets and deterministic splits
    std::vector<DatasetSplit> splits;
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        const LabeledImageSet set =
            load_task(cfg.tasks[i], derive_seed(cfg.seed, hash_str("data"), i));
        splits.push_back(split_dataset(set, cfg.validation_fraction,
                                       derive_seed(cfg.seed, hash_str("split"), i)));
    }

    // one shared initialization for every arm
    const uint64_t init_seed = derive_seed(cfg.seed, hash_str("init"));
    const BuiltModel init = build_standard_cnn(cfg.model, init_seed);

    ExperimentResult result;
    std::vector<stats::ScoredPredictions> baseline_preds;

    // centralized baselines, one per task
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        const std::string& task = cfg.tasks[i].name;
        if (!quiet) std::cout << "training baseline for task '" << task << "'...\n";
        TrainOptions opts;
        opts.sgd.initial_lr = static_cast<float>(cfg.initial_lr);
        opts.sgd.lr_floor = static_cast<float>(cfg.lr_floor);
        opts.sgd.schedule = cfg.lr_schedule;
        opts.sgd.total_epochs = std::max<uint32_t>(cfg.baseline_epochs, 1);
        opts.batch_size = cfg.batch_size;
        opts.experiment_seed = cfg.seed;
        opts.shuffle_scope = task;

        ComputationGraph graph = build_graph(cfg.model);
        const EpochResult trained =
            train_epochs(graph, init.params, splits[i].train, opts, 0, cfg.baseline_epochs);
        stats::ScoredPredictions pred =
            score_model(cfg.model, trained.params, splits[i].validation, "standard");
        baseline_preds.push_back(pred);
        result.reports.push_back(evaluate(pred));
    }

    // federated run across all tasks
    if (!quiet) std::cout << "running federation across " << cfg.tasks.size() << " node(s)...\n";
    FederationConfig fl_cfg;
    fl_cfg.total_rounds = cfg.fl_rounds;
    fl_cfg.sgd.initial_lr = static_cast<float>(cfg.initial_lr);
    fl_cfg.sgd.lr_floor = static_cast<float>(cfg.lr_floor);
    fl_cfg.sgd.schedule = cfg.lr_schedule;
    fl_cfg.sgd.total_epochs = std::max<uint32_t>(cfg.fl_rounds * cfg.epochs_per_round, 1);
    fl_cfg.batch_size = cfg.batch_size;
    fl_cfg.weighting = cfg.aggregation_weighting;
    fl_cfg.transport = cfg.transport;
    fl_cfg.experiment_seed = cfg.seed;

    std::vector<NodeState> nodes;
    std::vector<LabeledImageSet> train_sets;
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        NodeState node;
        node.node_id = cfg.tasks[i].name;
        node.task_name = cfg.tasks[i].name;
        node.local_params = init.params;
        node.sample_count = splits[i].train.count();
        node.epochs_per_round = cfg.epochs_per_round;
        nodes.push_back(std::move(node));
        train_sets.push_back(splits[i].train);
    }
    FederationResult federation = run_federation(nodes, train_sets, cfg.model, fl_cfg);
    result.round_log = federation.round_log;

    // per-task FL models: shared representation plus that task's head
    std::vector<stats::EvalReport> fl_reports;
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        const std::string& task = cfg.tasks[i].name;
        ParameterSet fl_params = init.params;
        fl_params = merge(fl_params, federation.model.shared_representation);
        fl_params = merge(fl_params, federation.model.task_heads.at(task));

        stats::ScoredPredictions pred =
            score_model(cfg.model, fl_params, splits[i].validation, "standard-fl");
        stats::EvalReport report = evaluate(pred);
        const stats::ComparisonResult cmp = stats::compare_bootstrap_ttest(
            pred, baseline_preds[i], cfg.bootstrap_replicates,
            derive_seed(cfg.seed, hash_str("bootstrap"), i));
        report.p_value = cmp.p_value;
        result.comparisons.emplace(task, cmp);
        fl_reports.push_back(report);

        write_gradcam(cfg, task, fl_params, splits[i].validation, pred);
    }

    // interleave rows Table-style: per task, baseline then FL
    std::vector<stats::EvalReport> ordered;
    for (std::size_t i = 0; i < cfg.tasks.size(); ++i) {
        ordered.push_back(result.reports[i]);
        ordered.push_back(fl_reports[i]);
    }
    result.reports = std::move(ordered);

    // artifacts
    {
        std::ofstream out(fs::path(cfg.output_dir) / "metrics.csv");
        out << stats::csv_header() << "\n";
        for (const stats::EvalReport& r : result.reports) out << stats::csv_row(r) << "\n";
    }
    {
        nlohmann::ordered_json doc;
        for (const auto& [task, cmp] : result.comparisons) {
            doc[task] = {
                {"auroc_fl", cmp.auroc_a},
                {"auroc_baseline", cmp.auroc_b},
                {"t_statistic", cmp.t_statistic},
                {"p_value", cmp.p_value},
                {"significant", cmp.significant},
            };
        }
        std::ofstream out(fs::path(cfg.output_dir) / "comparison.json");
        out << doc.dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(cfg.output_dir) / "rounds.csv");
        out << "round,node,mean_loss\n";
        char buf[128];
        for (const RoundLogEntry& e : result.round_log) {
            std::snprintf(buf, sizeof(buf), "%u,%s,%.6f\n", e.round, e.node_id.c_str(),
                          e.mean_loss);
            out << buf;
        }
    }
    {
        // timestamps live here and only here so everything else stays
        // byte-reproducible
        const auto now = std::chrono::system_clock::now();
        nlohmann::ordered_json meta = {
            {"seed", cfg.seed},
            {"tasks", cfg.tasks.size()},
            {"fl_rounds", cfg.fl_rounds},
            {"baseline_epochs", cfg.baseline_epochs},
            {"finished_unix_ms",
             std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch())
                 .count()},
        };
        std::ofstream out(fs::path(cfg.output_dir) / "run-meta.json");
        out << meta.dump(2) << "\n";
    }

    if (!quiet) std::cout << "\n" << summary_table(result);
    return result;
}

}  // namespace fedmt
