#include "fedmt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fedmt/errors.hpp"
#include "fedmt/rng.hpp"

namespace fedmt::stats {

void ScoredPredictions::validate() const {
    if (scores.size() != labels.size()) {
        throw DomainError("scores and labels must have equal length");
    }
    if (scores.empty()) throw DomainError("empty predictions");
    for (uint8_t l : labels) {
        if (l > 1) throw DomainError("labels must be 0 or 1");
    }
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("scores must lie in [0,1]");
    }
}

std::size_t ScoredPredictions::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::size_t ScoredPredictions::negatives() const { return labels.size() - positives(); }

namespace {

double auroc_impl(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midrank sum of positives (Mann-Whitney)
    double pos_rank_sum = 0.0;
    std::size_t pos = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) {
                pos_rank_sum += midrank;
                ++pos;
            }
        }
        i = j;
    }
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) {
        throw DomainError("auroc requires at least one positive and one negative");
    }
    return (pos_rank_sum - 0.5 * static_cast<double>(pos) * static_cast<double>(pos + 1)) /
           (static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace

double auroc(const ScoredPredictions& pred) {
    pred.validate();
    return auroc_impl(pred.scores, pred.labels);
}

double aupr(const ScoredPredictions& pred) {
    pred.validate();
    const std::size_t total_pos = pred.positives();
    if (total_pos == 0) throw DomainError("aupr requires at least one positive");

    const std::size_t n = pred.scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pred.scores[a] > pred.scores[b];
    });

    double ap = 0.0;
    std::size_t tp = 0, seen = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        std::size_t group_tp = 0;
        while (j < n && pred.scores[order[j]] == pred.scores[order[i]]) {
            if (pred.labels[order[j]]) ++group_tp;
            ++j;
        }
        tp += group_tp;
        seen = j;
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        const double recall_increment =
            static_cast<double>(group_tp) / static_cast<double>(total_pos);
        ap += precision * recall_increment;
        i = j;
    }
    return ap;
}

namespace {

SensSpec rates_at(const ScoredPredictions& pred, double tau) {
    std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < pred.scores.size(); ++i) {
        const bool predicted = pred.scores[i] >= tau;
        if (pred.labels[i]) {
            (predicted ? tp : fn)++;
        } else {
            (predicted ? fp : tn)++;
        }
    }
    SensSpec out;
    out.threshold = tau;
    out.sensitivity = static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.specificity = static_cast<double>(tn) / static_cast<double>(tn + fp);
    return out;
}

}  // namespace

SensSpec sens_spec_at(const ScoredPredictions& pred, const ThresholdPolicy& policy) {
    pred.validate();
    if (pred.positives() == 0 || pred.negatives() == 0) {
        throw DomainError("sensitivity/specificity require both classes");
    }
    if (policy.kind == ThresholdPolicy::Kind::fixed) {
        return rates_at(pred, policy.tau);
    }
    std::vector<double> cuts = pred.scores;
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    SensSpec best;
    double best_j = -2.0;
    for (double tau : cuts) {  // ascending, so ties keep the lowest tau
        const SensSpec s = rates_at(pred, tau);
        const double j = s.sensitivity + s.specificity - 1.0;
        if (j > best_j) {
            best_j = j;
            best = s;
        }
    }
    return best;
}

// Regularized incomplete beta via Lentz's continued fraction.
double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const double front = std::exp(log_beta + a * std::log(x) + b * std::log(1.0 - x));

    const bool swap = x > (a + 1.0) / (a + b + 2.0);
    if (swap) return 1.0 - incomplete_beta(b, a, 1.0 - x);

    constexpr double kTiny = 1e-300;
    constexpr double kEps = 1e-15;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double result = d;
    for (int m = 1; m <= 300; ++m) {
        const double dm = static_cast<double>(m);
        // even step
        double num = dm * (b - dm) * x / ((a + 2.0 * dm - 1.0) * (a + 2.0 * dm));
        d = 1.0 + num * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        d = 1.0 / d;
        c = 1.0 + num / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        result *= d * c;
        // odd step
        num = -(a + dm) * (a + b + dm) * x / ((a + 2.0 * dm) * (a + 2.0 * dm + 1.0));
        d = 1.0 + num * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        d = 1.0 / d;
        c = 1.0 + num / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        const double delta = d * c;
        result *= delta;
        if (std::fabs(delta - 1.0) < kEps) break;
    }
    return front * result / a;
}

double student_t_cdf(double t, double df) {
    const double x = df / (df + t * t);
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t >= 0.0 ? 1.0 - tail : tail;
}

ComparisonResult compare_bootstrap_ttest(const ScoredPredictions& a,
                                         const ScoredPredictions& b,
                                         uint32_t replicates, uint64_t seed) {
    a.validate();
    b.validate();
    if (a.scores.size() != b.scores.size() || a.labels != b.labels) {
        throw DomainError("compare_bootstrap_ttest: predictions are not paired over the same samples");
    }
    if (replicates < 2) throw DomainError("need at least 2 bootstrap replicates");

    ComparisonResult out;
    out.auroc_a = auroc(a);
    out.auroc_b = auroc(b);
    out.bootstrap_diffs.resize(replicates);

    const std::size_t n = a.scores.size();
    for (uint32_t r = 0; r < replicates; ++r) {
        // per-replicate stream: results are independent of evaluation order
        Rng rng(derive_seed(seed, r));
        std::vector<double> sa(n), sb(n);
        std::vector<uint8_t> lab(n);
        bool ok = false;
        for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
            bool any_pos = false, any_neg = false;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t idx = rng.index(n);
                sa[i] = a.scores[idx];
                sb[i] = b.scores[idx];
                lab[i] = a.labels[idx];
                (lab[i] ? any_pos : any_neg) = true;
            }
            ok = any_pos && any_neg;
        }
        if (!ok) {
            throw DomainError("bootstrap replicate " + std::to_string(r) +
                              " could not draw both classes in 100 attempts");
        }
        out.bootstrap_diffs[r] = auroc_impl(sa, lab) - auroc_impl(sb, lab);
    }

    double mean = 0.0;
    for (double d : out.bootstrap_diffs) mean += d;
    mean /= static_cast<double>(replicates);
    double var = 0.0;
    for (double d : out.bootstrap_diffs) var += (d - mean) * (d - mean);
    var /= static_cast<double>(replicates - 1);
    const double sd = std::sqrt(var);

    if (sd == 0.0) {
        out.t_statistic = 0.0;
        out.p_value = (mean == 0.0) ? 1.0 : 0.0;
    } else {
        out.t_statistic = mean / (sd / std::sqrt(static_cast<double>(replicates)));
        const double df = static_cast<double>(replicates) - 1.0;
        out.p_value = 2.0 * (1.0 - student_t_cdf(std::fabs(out.t_statistic), df));
    }
    out.significant = out.p_value < 0.05;
    return out;
}

std::string csv_header() {
    return "task,model,loss,sensitivity,specificity,aupr,auroc,p_value";
}

std::string csv_row(const EvalReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%.4f,%.2f,%.2f,%.4f,%.4f,", r.task.c_str(),
                  r.model.c_str(), r.loss, 100.0 * r.sensitivity, 100.0 * r.specificity,
                  r.aupr, r.auroc);
    std::string row(buf);
    if (r.p_value) {
        std::snprintf(buf, sizeof(buf), "%.4f", *r.p_value);
        row += buf;
    }
    return row;
}

}  // namespace fedmt::stats
