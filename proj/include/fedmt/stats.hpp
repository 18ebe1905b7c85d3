#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fedmt::stats {

struct ScoredPredictions {
    std::vector<double> scores;   // in [0,1]
    std::vector<uint8_t> labels;  // {0,1}
    std::string model_name;
    std::string task_name;

    void validate() const;
    std::size_t positives() const;
    std::size_t negatives() const;
};

struct EvalReport {
    std::string task;
    std::string model;
    double loss = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double aupr = 0.0;
    double auroc = 0.0;
    std::optional<double> p_value;
};

struct ComparisonResult {
    double auroc_a = 0.0;
    double auroc_b = 0.0;
    std::vector<double> bootstrap_diffs;
    double t_statistic = 0.0;
    double p_value = 1.0;
    bool significant = false;  // p < 0.05
};

// Mann-Whitney form: fraction of (positive, negative) pairs where the
// positive scores higher, ties counted 0.5. Needs both classes.
double auroc(const ScoredPredictions& pred);

// Average precision (step interpolation) over descending-score cuts; tied
// scores are processed as one group. Needs at least one positive.
double aupr(const ScoredPredictions& pred);

struct ThresholdPolicy {
    enum class Kind { fixed, youden } kind = Kind::youden;
    double tau = 0.5;  // used when fixed

    static ThresholdPolicy fixed(double tau) { return {Kind::fixed, tau}; }
    static ThresholdPolicy youden() { return {Kind::youden, 0.0}; }
};

struct SensSpec {
    double sensitivity = 0.0;
    double specificity = 0.0;
    double threshold = 0.5;
};

// Confusion-matrix rates with predicted-positive defined as score >= tau.
// Youden picks the observed cut maximizing sensitivity+specificity-1
// (ties -> lowest tau).
SensSpec sens_spec_at(const ScoredPredictions& pred, const ThresholdPolicy& policy);

// Paired bootstrap of the AUROC difference: each replicate resamples case
// indices with replacement (shared between the two models), then a paired
// t-test over the replicate diffs with replicates-1 degrees of freedom.
// Degenerate spread: sd==0 and mean==0 gives p=1, sd==0 and mean!=0 gives
// p=0. Replicates holding a single class are redrawn (up to 100 attempts).
ComparisonResult compare_bootstrap_ttest(const ScoredPredictions& a,
                                         const ScoredPredictions& b,
                                         uint32_t replicates, uint64_t seed);

// Student's t CDF via the regularized incomplete beta function.
double student_t_cdf(double t, double df);
double incomplete_beta(double a, double b, double x);

// CSV row in the report schema; sensitivity/specificity emitted as
// two-decimal percentages.
std::string csv_header();
std::string csv_row(const EvalReport& r);

}  // namespace fedmt::stats
