// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier than the unit suites; the first criterion trains four
// full arms and dominates the runtime.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedmt/config.hpp"
#include "fedmt/experiment.hpp"
#include "fedmt/fl.hpp"
#include "fedmt/gradcam.hpp"
#include "fedmt/kernels.hpp"
#include "fedmt/rng.hpp"
#include "fedmt/stats.hpp"
#include "fedmt/wire.hpp"
#include "oracle.hpp"

using namespace fedmt;

namespace {

int failures = 0;
std::vector<std::string> detail;

void criterion(const std::string& name, const std::function<bool()>& body) {
    bool ok = false;
    std::string note;
    try {
        ok = body();
    } catch (const std::exception& e) {
        note = std::string(" (") + e.what() + ")";
    }
    std::printf("%-34s %s%s\n", name.c_str(), ok ? "PASS" : "FAIL", note.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

bool expect(bool cond, const std::string& why) {
    if (!cond) detail.push_back(why);
    return cond;
}

ModelSpec small_spec() {
    ModelSpec spec;
    spec.in_h = spec.in_w = 8;
    spec.conv_channels = {2, 3, 4};
    spec.dense_width = 5;
    return spec;
}

NodeState make_node(const std::string& id, const ParameterSet& params, uint64_t samples) {
    NodeState node;
    node.node_id = id;
    node.task_name = id;
    node.local_params = params;
    node.sample_count = samples;
    return node;
}

ParameterSet random_params(Rng& rng, int n_keys) {
    ParameterSet p;
    for (int k = 0; k < n_keys; ++k) {
        const std::size_t len = 1 + rng.index(30);
        Tensor t({static_cast<uint32_t>(len)});
        for (std::size_t i = 0; i < len; ++i) t[i] = static_cast<float>(rng.uniform(-3.0, 3.0));
        p.entries.emplace("k" + std::to_string(k), std::move(t));
    }
    return p;
}

// Reference experiment config for the central-claim analog. Pinned by the
// acceptance contract: two tasks, n=2000 each, 16x16 inputs, standard CNN,
// 60 rounds vs 60 epochs, seed 42.
const char* kReferenceConfig = R"(seed = 42
baseline-epochs = 60
fl-rounds = 60
epochs-per-round = 1
initial-lr = 0.02
lr-floor = 0.0001
batch-size = 32
bootstrap-replicates = 1000
validation-fraction = 0.2
gradcam-samples = 4

[task.blob-site]
kind = blob
n = 2000
hw = 16
positive-rate = 0.3
noise-sigma = 0.08

[task.ring-site]
kind = ring
n = 2000
hw = 16
positive-rate = 0.3
noise-sigma = 0.08
)";

bool central_claim() {
    namespace fs = std::filesystem;
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = parse_config_text(kReferenceConfig, "reference");
    const fs::path dir = fs::temp_directory_path() / "fedmt_acceptance_run";
    fs::remove_all(dir);
    cfg.output_dir = dir.string();
    cfg.validate();
    ExperimentResult res = run_experiment(cfg, true);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    bool ok = expect(secs <= 600.0, "runtime " + std::to_string(secs) + "s exceeds 600s");
    for (const auto& [task, cmp] : res.comparisons) {
        std::ostringstream line;
        line << task << ": auroc_fl=" << cmp.auroc_a << " auroc_baseline=" << cmp.auroc_b
             << " p=" << cmp.p_value;
        detail.push_back(line.str());
        ok &= expect(std::fabs(cmp.auroc_a - cmp.auroc_b) <= 0.05,
                     task + ": |auroc diff| > 0.05");
        ok &= expect(cmp.p_value > 0.05, task + ": p <= 0.05");
    }
    fs::remove_all(dir);
    return ok;
}

bool single_node_identity() {
    ModelSpec spec = small_spec();
    BuiltModel model = build_standard_cnn(spec, 6);
    LabeledImageSet data = gen_synthetic_task(TaskKind::blob, 32, 8, 0.5, 0.1, 5, "solo");
    bool ok = true;
    for (uint32_t rounds : {1u, 5u, 20u}) {
        FederationConfig cfg;
        cfg.total_rounds = rounds;
        cfg.sgd.initial_lr = 1e-2f;
        cfg.sgd.total_epochs = rounds;
        cfg.batch_size = 8;
        cfg.experiment_seed = 123;
        FederationResult fed = run_federation({make_node("solo", model.params, data.count())},
                                              {data}, spec, cfg);
        ComputationGraph graph = build_graph(spec);
        TrainOptions opts;
        opts.sgd = cfg.sgd;
        opts.batch_size = cfg.batch_size;
        opts.experiment_seed = cfg.experiment_seed;
        opts.shuffle_scope = "solo";
        ParameterSet central =
            train_epochs(graph, model.params, data, opts, 0, rounds).params;
        ok &= expect(fed.model.shared_representation.same_entries(
                         split(central, Block::representation)) &&
                         fed.model.task_heads.at("solo").same_entries(
                             split(central, Block::task)),
                     "mismatch at rounds=" + std::to_string(rounds));
    }
    return ok;
}

bool fedavg_oracle() {
    Rng rng(77);
    bool ok = true;
    for (int trial = 0; trial < 100; ++trial) {
        const int k = 2 + static_cast<int>(rng.index(5));
        const int n_keys = 1 + static_cast<int>(rng.index(4));
        ParameterSet proto = random_params(rng, n_keys);
        std::vector<std::pair<ParameterSet, uint64_t>> updates;
        for (int u = 0; u < k; ++u) {
            ParameterSet p = proto;
            for (auto& [name, t] : p.entries) {
                for (float& v : t.vec()) v = static_cast<float>(rng.uniform(-3.0, 3.0));
            }
            updates.emplace_back(std::move(p), 1 + rng.index(50));
        }
        ParameterSet out = fedavg_aggregate(updates);
        for (const auto& [name, t] : out.entries) {
            for (std::size_t i = 0; i < t.size(); ++i) {
                double num = 0.0, den = 0.0;
                for (const auto& [p, w] : updates) {
                    num += static_cast<double>(w) * p.at(name)[i];
                    den += static_cast<double>(w);
                }
                const double e = num / den;
                ok &= std::fabs(t[i] - e) <= 1e-6 * std::max<double>(1.0, std::fabs(e));
            }
        }
        // equal weights match the unweighted mean
        for (auto& [p, w] : updates) w = 9;
        ParameterSet eq = fedavg_aggregate(updates);
        for (const auto& [name, t] : eq.entries) {
            for (std::size_t i = 0; i < t.size(); ++i) {
                double sum = 0.0;
                for (const auto& [p, w] : updates) sum += p.at(name)[i];
                const double e = sum / k;
                ok &= std::fabs(t[i] - e) <= 1e-6 * std::max<double>(1.0, std::fabs(e));
            }
        }
        if (!ok) return expect(false, "trial " + std::to_string(trial));
    }
    return ok;
}

bool confidentiality() {
    ModelSpec spec = small_spec();
    BuiltModel model = build_standard_cnn(spec, 14);
    LabeledImageSet da = gen_synthetic_task(TaskKind::blob, 24, 8, 0.5, 0.1, 20, "a");
    LabeledImageSet db = gen_synthetic_task(TaskKind::ring, 24, 8, 0.5, 0.1, 21, "b");
    FederationConfig cfg;
    cfg.total_rounds = 3;
    cfg.sgd.total_epochs = 3;
    cfg.batch_size = 8;
    cfg.experiment_seed = 5;
    std::vector<NodeState> nodes = {make_node("a", model.params, da.count()),
                                    make_node("b", model.params, db.count())};
    FederationResult fed = run_federation(nodes, {da, db}, spec, cfg);
    const std::set<std::string> task_keys(model.params.partition.task_keys.begin(),
                                          model.params.partition.task_keys.end());
    std::size_t param_messages = 0;
    for (const wire::RoundMessage& msg : fed.trace->snapshot()) {
        if (msg.kind != wire::MsgKind::local_update &&
            msg.kind != wire::MsgKind::global_params) {
            continue;
        }
        ++param_messages;
        for (const auto& [name, t] : wire::decode_params(msg.payload).entries) {
            if (task_keys.count(name)) return expect(false, "task key on wire: " + name);
        }
    }
    return expect(param_messages == 12, "expected 12 parameter messages in the trace");
}

bool gradient_correctness() {
    Rng meta(31);
    for (int m = 0; m < 20; ++m) {
        ModelSpec spec;
        spec.in_h = spec.in_w = 8;
        spec.conv_channels = {1 + static_cast<uint32_t>(meta.index(3)),
                              1 + static_cast<uint32_t>(meta.index(3)),
                              1 + static_cast<uint32_t>(meta.index(3))};
        spec.dense_width = 2 + static_cast<uint32_t>(meta.index(5));
        BuiltModel model = build_standard_cnn(spec, meta.raw());
        ComputationGraph graph = build_graph(spec);

        Rng rng(meta.raw());
        Tensor x({1, 1, 8, 8});
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = static_cast<float>(rng.uniform(0.0, 1.0));
        }
        const uint8_t label = rng.index(2) ? 1 : 0;
        Tensor y = Tensor::scalar(static_cast<float>(label));

        graph.forward_loss(model.params, x, y);
        GradientMap grads = graph.backward(model.params);

        for (const auto& [name, g] : grads) {
            // sample a handful of coordinates per tensor
            for (int probe = 0; probe < 4; ++probe) {
                const std::size_t i = rng.index(g.size());
                const double fd =
                    oracle::fd_gradient(spec, model.params, name, i, x, {label}, 1e-3);
                const double an = g[i];
                if (oracle::rel_err(an, fd) >= 1e-3) {
                    return expect(false, "model " + std::to_string(m) + " " + name + "[" +
                                             std::to_string(i) + "]");
                }
            }
        }
    }
    return true;
}

bool auroc_oracle_criterion() {
    {
        stats::ScoredPredictions p;
        p.scores = {0.1, 0.4, 0.35, 0.8};
        p.labels = {0, 0, 1, 1};
        if (std::fabs(stats::auroc(p) - 0.75) > 1e-12) {
            return expect(false, "worked example != 0.75");
        }
    }
    Rng rng(55);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 4 + rng.index(997);
        stats::ScoredPredictions p;
        p.scores.resize(n);
        p.labels.resize(n);
        const bool ties = trial % 3 == 0;
        for (std::size_t i = 0; i < n; ++i) {
            double s = rng.uniform(0.0, 1.0);
            p.scores[i] = ties ? std::round(s * 16.0) / 16.0 : s;
            p.labels[i] = rng.index(2) ? 1 : 0;
        }
        p.labels[0] = 0;
        p.labels[1] = 1;
        double wins = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!p.labels[i]) continue;
            for (std::size_t j = 0; j < n; ++j) {
                if (p.labels[j]) continue;
                ++pairs;
                if (p.scores[i] > p.scores[j]) wins += 1.0;
                else if (p.scores[i] == p.scores[j]) wins += 0.5;
            }
        }
        const double brute = wins / static_cast<double>(pairs);
        if (std::fabs(stats::auroc(p) - brute) > 1e-10) {
            return expect(false, "trial " + std::to_string(trial));
        }
    }
    return true;
}

bool statistical_laws() {
    Rng rng(66);
    const std::size_t n = 40;
    stats::ScoredPredictions a;
    a.scores.resize(n);
    a.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        a.labels[i] = i % 2;
        a.scores[i] = rng.uniform(0.0, 1.0);
    }
    stats::ComparisonResult same = stats::compare_bootstrap_ttest(a, a, 1000, 3);
    bool ok = expect(same.p_value == 1.0 && !same.significant, "identical models p != 1");

    // perfect vs anti-perfect on well-separated samples
    stats::ScoredPredictions perfect = a, anti = a;
    for (std::size_t i = 0; i < n; ++i) {
        perfect.scores[i] = a.labels[i] ? 0.9 + 0.005 * i / n : 0.1 - 0.005 * i / n;
        anti.scores[i] = a.labels[i] ? 0.1 : 0.9;
    }
    stats::ComparisonResult sep = stats::compare_bootstrap_ttest(perfect, anti, 1000, 4);
    ok &= expect(sep.p_value < 0.001 && sep.significant, "separated models p >= 0.001");

    stats::ComparisonResult r1 = stats::compare_bootstrap_ttest(perfect, anti, 1000, 9);
    stats::ComparisonResult r2 = stats::compare_bootstrap_ttest(perfect, anti, 1000, 9);
    ok &= expect(r1.p_value == r2.p_value && r1.t_statistic == r2.t_statistic &&
                     r1.bootstrap_diffs == r2.bootstrap_diffs,
                 "fixed seed not reproducible");
    return ok;
}

bool wire_protocol() {
    Rng rng(88);
    for (int trial = 0; trial < 100; ++trial) {
        ParameterSet p = random_params(rng, 1 + static_cast<int>(rng.index(6)));
        std::vector<uint8_t> bytes = wire::encode_params(p);
        ParameterSet back = wire::decode_params(bytes);
        if (!(back.same_entries(p) && wire::encode_params(back) == bytes)) {
            return expect(false, "round trip trial " + std::to_string(trial));
        }
    }
    // CRC detects every single-byte payload corruption
    wire::RoundMessage msg;
    msg.kind = wire::MsgKind::local_update;
    msg.round_index = 2;
    msg.sender_id = "n";
    msg.sample_count = 10;
    ParameterSet p;
    p.entries.emplace("w", Tensor({3}, {1.0f, 2.0f, 3.0f}));
    msg.payload = wire::encode_params(p);
    std::vector<uint8_t> frame = wire::encode_frame(msg);
    for (std::size_t i = wire::kFrameHeaderSize; i < frame.size() - 4; ++i) {
        std::vector<uint8_t> bad = frame;
        bad[i] ^= 0x40;
        bool caught = false;
        try {
            wire::decode_frame(bad);
        } catch (const IntegrityError&) {
            caught = true;
        } catch (const DecodeError&) {
            caught = true;  // length fields live in the body too
        }
        if (!caught) return expect(false, "corruption at byte " + std::to_string(i));
    }

    // stream vs in-process federation, bitwise
    ModelSpec spec = small_spec();
    BuiltModel model = build_standard_cnn(spec, 15);
    LabeledImageSet da = gen_synthetic_task(TaskKind::blob, 24, 8, 0.5, 0.1, 30, "a");
    LabeledImageSet db = gen_synthetic_task(TaskKind::ring, 24, 8, 0.5, 0.1, 31, "b");
    auto run = [&](TransportKind t) {
        FederationConfig cfg;
        cfg.total_rounds = 2;
        cfg.sgd.total_epochs = 2;
        cfg.batch_size = 8;
        cfg.experiment_seed = 77;
        cfg.transport = t;
        std::vector<NodeState> nodes = {make_node("a", model.params, da.count()),
                                        make_node("b", model.params, db.count())};
        return run_federation(nodes, {da, db}, spec, cfg);
    };
    FederationResult in_proc = run(TransportKind::in_process);
    FederationResult stream = run(TransportKind::stream);
    bool same = in_proc.model.shared_representation.same_entries(
        stream.model.shared_representation);
    for (const auto& [task, head] : in_proc.model.task_heads) {
        same &= head.same_entries(stream.model.task_heads.at(task));
    }
    return expect(same, "stream and in-process outputs differ");
}

bool gradcam_laws() {
    ModelSpec spec;
    spec.in_h = spec.in_w = 16;
    spec.conv_channels = {2, 3, 4};
    spec.dense_width = 5;
    BuiltModel model = build_standard_cnn(spec, 7);
    // positive head so the base map cannot be identically zero
    for (const std::string& key : model.params.partition.task_keys) {
        Tensor& t = model.params.entries.at(key);
        for (float& v : t.vec()) v = std::fabs(v) + 0.01f;
    }
    ComputationGraph graph = build_graph(spec);
    Rng rng(8);
    Tensor sample({1, 1, 16, 16});
    for (std::size_t i = 0; i < sample.size(); ++i) {
        sample[i] = static_cast<float>(rng.uniform(0.0, 1.0));
    }

    SaliencyMap map = grad_cam(graph, model.params, sample);
    bool ok = expect(map.h == 4 && map.w == 4 && map.grid.size() == 16,
                     "map shape != last conv grid");
    for (double v : map.grid) ok &= expect(v >= 0.0, "negative map entry");

    ParameterSet zero_head = model.params;
    for (const std::string& key : zero_head.partition.task_keys) {
        Tensor& t = zero_head.entries.at(key);
        std::fill(t.vec().begin(), t.vec().end(), 0.0f);
    }
    SaliencyMap zero = grad_cam(graph, zero_head, sample);
    for (double v : zero.grid) ok &= expect(v == 0.0, "zero head gave nonzero map");

    ParameterSet scaled = model.params;
    for (const std::string& key : scaled.partition.task_keys) {
        Tensor& t = scaled.entries.at(key);
        for (float& v : t.vec()) v *= 2.5f;
    }
    SaliencyMap big = grad_cam(graph, scaled, sample);
    ok &= expect(map.normalized && big.normalized, "maps not normalized");
    for (std::size_t i = 0; i < map.grid.size(); ++i) {
        ok &= expect(std::fabs(map.grid[i] - big.grid[i]) <= 1e-6,
                     "scaling the head changed the normalized map");
    }
    return ok;
}

bool report_format() {
    if (stats::csv_header() != "task,model,loss,sensitivity,specificity,aupr,auroc,p_value") {
        return expect(false, "bad header");
    }
    stats::EvalReport r;
    r.task = "t";
    r.model = "standard";
    r.loss = 0.381234;
    r.sensitivity = 0.825678;
    r.specificity = 0.7197;
    r.aupr = 0.63;
    r.auroc = 0.85;
    bool ok = expect(stats::csv_row(r) == "t,standard,0.3812,82.57,71.97,0.6300,0.8500,",
                     "bad row without p");
    r.p_value = 0.0412;
    ok &= expect(stats::csv_row(r) == "t,standard,0.3812,82.57,71.97,0.6300,0.8500,0.0412",
                 "bad row with p");
    return ok;
}

}  // namespace

int main() {
    kernels::set_num_threads(4);

    criterion("central-claim-analog", central_claim);
    criterion("single-node-identity", single_node_identity);
    criterion("fedavg-oracle", fedavg_oracle);
    criterion("partial-aggregation-confidentiality", confidentiality);
    criterion("gradient-correctness", gradient_correctness);
    criterion("auroc-oracle", auroc_oracle_criterion);
    criterion("statistical-test-laws", statistical_laws);
    criterion("wire-protocol", wire_protocol);
    criterion("grad-cam-laws", gradcam_laws);
    criterion("report-format", report_format);

    for (const std::string& d : detail) std::printf("  note: %s\n", d.c_str());
    std::printf("%s\n", failures == 0 ? "ALL CRITERIA PASS" : "CRITERIA FAILED");
    return failures == 0 ? 0 : 1;
}
