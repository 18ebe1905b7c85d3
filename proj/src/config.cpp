#include "fedmt/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fedmt/errors.hpp"

namespace fedmt {

void ExperimentConfig::validate() const {
    if (tasks.empty()) throw ConfigError("config defines no [task.<name>] sections");
    if (initial_lr <= 0.0) throw ConfigError("initial-lr must be positive");
    if (lr_floor < 0.0 || lr_floor > initial_lr) {
        throw ConfigError("lr-floor must lie in [0, initial-lr]");
    }
    if (batch_size == 0) throw ConfigError("batch-size must be positive");
    if (bootstrap_replicates < 2) throw ConfigError("bootstrap-replicates must be >= 2");
    if (validation_fraction <= 0.0 || validation_fraction >= 1.0) {
        throw ConfigError("validation-fraction must lie strictly between 0 and 1");
    }
    model.validate();
    for (const TaskConfig& t : tasks) {
        if (t.from_files) {
            if (t.images_path.empty() || t.labels_path.empty()) {
                throw ConfigError("task '" + t.name + "' needs both images and labels paths");
            }
        } else {
            if (t.n < 2) throw ConfigError("task '" + t.name + "' needs n >= 2");
            if (t.hw % 8 != 0) throw ConfigError("task '" + t.name + "' hw must be divisible by 8");
            if (t.positive_rate <= 0.0 || t.positive_rate >= 1.0) {
                throw ConfigError("task '" + t.name + "' positive-rate must be in (0,1)");
            }
            if (t.hw != model.in_h) {
                throw ConfigError("task '" + t.name + "' hw " + std::to_string(t.hw) +
                                  " does not match the model input size " +
                                  std::to_string(model.in_h));
            }
        }
    }
}

namespace {

struct Line {
    int number;
    std::string key;
    std::string value;
};

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

uint64_t parse_uint(const std::string& origin, const Line& l) {
    uint64_t v = 0;
    auto [p, ec] = std::from_chars(l.value.data(), l.value.data() + l.value.size(), v);
    if (ec != std::errc{} || p != l.value.data() + l.value.size()) {
        fail(origin, l.number, "'" + l.key + "' expects an unsigned integer, got '" + l.value + "'");
    }
    return v;
}

double parse_double(const std::string& origin, const Line& l) {
    try {
        std::size_t used = 0;
        const double v = std::stod(l.value, &used);
        if (used != l.value.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(origin, l.number, "'" + l.key + "' expects a number, got '" + l.value + "'");
    }
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    TaskConfig* current_task = nullptr;

    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated section header");
            const std::string section = line.substr(1, line.size() - 2);
            if (section.rfind("task.", 0) != 0 || section.size() == 5) {
                fail(origin, line_no, "only [task.<name>] sections are allowed, got [" + section + "]");
            }
            const std::string name = section.substr(5);
            for (const TaskConfig& t : cfg.tasks) {
                if (t.name == name) fail(origin, line_no, "duplicate task '" + name + "'");
            }
            cfg.tasks.push_back(TaskConfig{});
            cfg.tasks.back().name = name;
            current_task = &cfg.tasks.back();
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(origin, line_no, "expected 'key = value'");
        Line l{line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
        if (l.key.empty()) fail(origin, line_no, "empty key");

        if (current_task) {
            TaskConfig& t = *current_task;
            if (l.key == "kind") t.kind = task_kind_from_string(l.value);
            else if (l.key == "n") t.n = static_cast<uint32_t>(parse_uint(origin, l));
            else if (l.key == "hw") t.hw = static_cast<uint32_t>(parse_uint(origin, l));
            else if (l.key == "positive-rate") t.positive_rate = parse_double(origin, l);
            else if (l.key == "noise-sigma") t.noise_sigma = parse_double(origin, l);
            else if (l.key == "images") { t.images_path = l.value; t.from_files = true; }
            else if (l.key == "labels") { t.labels_path = l.value; t.from_files = true; }
            else fail(origin, line_no, "unknown task key '" + l.key + "'");
            continue;
        }

        if (l.key == "seed") cfg.seed = parse_uint(origin, l);
        else if (l.key == "output-dir") cfg.output_dir = l.value;
        else if (l.key == "baseline-epochs") cfg.baseline_epochs = static_cast<uint32_t>(parse_uint(origin, l));
        else if (l.key == "fl-rounds") cfg.fl_rounds = static_cast<uint32_t>(parse_uint(origin, l));
        else if (l.key == "epochs-per-round") cfg.epochs_per_round = static_cast<uint32_t>(parse_uint(origin, l));
        else if (l.key == "initial-lr") cfg.initial_lr = parse_double(origin, l);
        else if (l.key == "lr-floor") cfg.lr_floor = parse_double(origin, l);
        else if (l.key == "batch-size") cfg.batch_size = static_cast<uint32_t>(parse_uint(origin, l));
        else if (l.key == "bootstrap-replicates") cfg.bootstrap_replicates = static_cast<uint32_t>(parse_uint(origin, l));
        else if (l.key == "validation-fraction") cfg.validation_fraction = parse_double(origin, l);
        else if (l.key == "gradcam-samples") cfg.gradcam_samples = static_cast<uint32_t>(parse_uint(origin, l));
        else if (l.key == "lr-schedule") {
            if (l.value == "cosine") cfg.lr_schedule = LrSchedule::cosine_to_floor;
            else if (l.value == "constant") cfg.lr_schedule = LrSchedule::constant;
            else fail(origin, line_no, "lr-schedule must be cosine or constant");
        } else if (l.key == "aggregation-weighting") {
            if (l.value == "samples") cfg.aggregation_weighting = Weighting::samples;
            else if (l.value == "equal") cfg.aggregation_weighting = Weighting::equal;
            else fail(origin, line_no, "aggregation-weighting must be samples or equal");
        } else if (l.key == "transport") {
            if (l.value == "in-process") cfg.transport = TransportKind::in_process;
            else if (l.value == "stream") cfg.transport = TransportKind::stream;
            else fail(origin, line_no, "transport must be in-process or stream");
        } else if (l.key == "model.input-hw") {
            cfg.model.in_h = cfg.model.in_w = static_cast<uint32_t>(parse_uint(origin, l));
        } else if (l.key == "model.conv-channels") {
            std::istringstream ss(l.value);
            std::string part;
            std::vector<uint32_t> channels;
            while (std::getline(ss, part, ',')) {
                Line pl{line_no, l.key, trim(part)};
                channels.push_back(static_cast<uint32_t>(parse_uint(origin, pl)));
            }
            if (channels.size() != 3) {
                fail(origin, line_no, "model.conv-channels expects exactly 3 values");
            }
            cfg.model.conv_channels = {channels[0], channels[1], channels[2]};
        } else if (l.key == "model.kernel-size") {
            cfg.model.kernel_size = static_cast<uint32_t>(parse_uint(origin, l));
        } else if (l.key == "model.dense-width") {
            cfg.model.dense_width = static_cast<uint32_t>(parse_uint(origin, l));
        } else {
            fail(origin, line_no, "unknown key '" + l.key + "'");
        }
    }

    // synthetic tasks fix the model input size
    for (const TaskConfig& t : cfg.tasks) {
        if (!t.from_files) {
            cfg.model.in_h = cfg.model.in_w = t.hw;
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

}  // namespace fedmt
