#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fedmt/errors.hpp"
#include "fedmt/rng.hpp"
#include "fedmt/stats.hpp"

using namespace fedmt;
using namespace fedmt::stats;

namespace {

ScoredPredictions make(std::vector<double> scores, std::vector<uint8_t> labels) {
    ScoredPredictions p;
    p.scores = std::move(scores);
    p.labels = std::move(labels);
    p.model_name = "m";
    p.task_name = "t";
    return p;
}

// brute-force Mann-Whitney pair count
double auroc_oracle(const ScoredPredictions& p) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < p.scores.size(); ++i) {
        if (p.labels[i] != 1) continue;
        for (std::size_t j = 0; j < p.scores.size(); ++j) {
            if (p.labels[j] != 0) continue;
            ++pairs;
            if (p.scores[i] > p.scores[j]) wins += 1.0;
            else if (p.scores[i] == p.scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

ScoredPredictions random_preds(Rng& rng, std::size_t n, bool ties) {
    std::vector<double> s(n);
    std::vector<uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = ties ? std::round(rng.uniform(0.0, 1.0) * 8.0) / 8.0 : rng.uniform(0.0, 1.0);
        y[i] = rng.index(2) ? 1 : 0;
    }
    y[0] = 0;
    y[1] = 1;  // both classes present
    return make(std::move(s), std::move(y));
}

}  // namespace

TEST_CASE("auroc worked example: 3 of 4 pairs win -> 0.75") {
    ScoredPredictions p = make({0.9, 0.4, 0.6, 0.3}, {1, 1, 0, 0});
    CHECK(auroc(p) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("auroc equals the brute-force pair count, with and without ties") {
    Rng rng(101);
    for (std::size_t n : {5u, 23u, 200u, 1000u}) {
        for (bool ties : {false, true}) {
            ScoredPredictions p = random_preds(rng, n, ties);
            CHECK(auroc(p) == doctest::Approx(auroc_oracle(p)).epsilon(1e-10));
        }
    }
}

TEST_CASE("auroc is invariant under strictly monotone score transforms") {
    Rng rng(102);
    ScoredPredictions p = random_preds(rng, 80, true);
    ScoredPredictions q = p;
    for (double& s : q.scores) s = s * s * 0.5 + 0.1 * s;  // increasing on [0,1]
    CHECK(auroc(p) == doctest::Approx(auroc(q)).epsilon(1e-12));
}

TEST_CASE("flipping labels and reversing scores complements the auroc") {
    Rng rng(103);
    ScoredPredictions p = random_preds(rng, 60, false);
    ScoredPredictions q = p;
    for (auto& y : q.labels) y = 1 - y;
    CHECK(auroc(p) + auroc(q) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("auroc needs both classes") {
    CHECK_THROWS_AS(auroc(make({0.1, 0.2}, {1, 1})), DomainError);
    CHECK_THROWS_AS(auroc(make({0.1, 0.2}, {0, 0})), DomainError);
}

TEST_CASE("aupr on a perfect ranking is 1, and is bounded below by useful cases") {
    CHECK(aupr(make({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0})) == doctest::Approx(1.0));
    // constant scores: one group, precision = prevalence, recall jumps to 1
    CHECK(aupr(make({0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 0})) == doctest::Approx(0.25));
}

namespace {

// independent average precision: sweep descending distinct scores, AP =
// sum precision(c) * (recall(c) - recall(prev))
double aupr_oracle(const ScoredPredictions& p) {
    std::vector<double> cuts(p.scores);
    std::sort(cuts.begin(), cuts.end(), std::greater<>());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total_pos = 0.0;
    for (uint8_t y : p.labels) total_pos += y;
    double ap = 0.0, prev_recall = 0.0;
    for (double c : cuts) {
        double tp = 0.0, fp = 0.0;
        for (std::size_t i = 0; i < p.scores.size(); ++i) {
            if (p.scores[i] >= c) {
                if (p.labels[i]) tp += 1.0;
                else fp += 1.0;
            }
        }
        const double recall = tp / total_pos;
        const double precision = tp / (tp + fp);
        ap += precision * (recall - prev_recall);
        prev_recall = recall;
    }
    return ap;
}

}  // namespace

TEST_CASE("aupr matches a threshold-sweep oracle") {
    Rng rng(104);
    for (std::size_t n : {6u, 40u, 300u}) {
        for (bool ties : {false, true}) {
            ScoredPredictions p = random_preds(rng, n, ties);
            CHECK(aupr(p) == doctest::Approx(aupr_oracle(p)).epsilon(1e-9));
        }
    }
}

TEST_CASE("sens/spec at a fixed threshold: worked example") {
    // tau = 0.5: predicted positive {0.9, 0.5, 0.7}; tp=2 fn=1 tn=2 fp=1
    ScoredPredictions p = make({0.9, 0.5, 0.2, 0.7, 0.4, 0.1}, {1, 1, 1, 0, 0, 0});
    SensSpec r = sens_spec_at(p, ThresholdPolicy::fixed(0.5));
    CHECK(r.sensitivity == doctest::Approx(2.0 / 3.0));
    CHECK(r.specificity == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("youden threshold maximizes sensitivity + specificity over all cuts") {
    Rng rng(105);
    for (int trial = 0; trial < 10; ++trial) {
        ScoredPredictions p = random_preds(rng, 50, trial % 2 == 0);
        SensSpec best = sens_spec_at(p, ThresholdPolicy::youden());
        double best_j = best.sensitivity + best.specificity - 1.0;
        // exhaustive sweep over every observed score as a cut
        double oracle_j = -2.0, oracle_tau = 0.0;
        std::vector<double> cuts(p.scores);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        for (double c : cuts) {
            SensSpec r = sens_spec_at(p, ThresholdPolicy::fixed(c));
            const double j = r.sensitivity + r.specificity - 1.0;
            if (j > oracle_j + 1e-12) {
                oracle_j = j;
                oracle_tau = c;
            }
        }
        CHECK(best_j == doctest::Approx(oracle_j).epsilon(1e-12));
        CHECK(best.threshold == doctest::Approx(oracle_tau));
    }
}

TEST_CASE("student t CDF against table quantiles") {
    // two-sided 95% critical values: t_{0.975}
    CHECK(student_t_cdf(2.228, 10) == doctest::Approx(0.975).epsilon(1e-3));
    CHECK(student_t_cdf(1.96, 1e6) == doctest::Approx(0.975).epsilon(1e-3));
    CHECK(student_t_cdf(0.0, 7) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(student_t_cdf(-2.228, 10) == doctest::Approx(0.025).epsilon(1e-3));
    CHECK(student_t_cdf(12.706, 1) == doctest::Approx(0.975).epsilon(1e-3));
}

TEST_CASE("incomplete beta basics") {
    CHECK(incomplete_beta(2.0, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(incomplete_beta(1.0, 1.0, 0.3) == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(incomplete_beta(3.0, 1.0, 0.4) == doctest::Approx(0.064).epsilon(1e-10));
}

TEST_CASE("bootstrap comparison of a model with itself gives p = 1") {
    Rng rng(106);
    ScoredPredictions a = random_preds(rng, 100, false);
    ScoredPredictions b = a;
    b.model_name = "m2";
    ComparisonResult r = compare_bootstrap_ttest(a, b, 200, 7);
    CHECK(r.p_value == doctest::Approx(1.0));
    CHECK_FALSE(r.significant);
    CHECK(r.t_statistic == doctest::Approx(0.0));
}

TEST_CASE("bootstrap comparison of clearly separated models is significant") {
    Rng rng(107);
    const std::size_t n = 200;
    std::vector<uint8_t> y(n);
    std::vector<double> good(n), bad(n);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = rng.index(2) ? 1 : 0;
        good[i] = y[i] ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);  // near-perfect
        bad[i] = rng.uniform(0.0, 1.0);                                  // chance
    }
    y[0] = 0;
    y[1] = 1;
    ComparisonResult r =
        compare_bootstrap_ttest(make(good, y), make(bad, y), 200, 8);
    CHECK(r.p_value < 0.001);
    CHECK(r.significant);
    CHECK(r.auroc_a > r.auroc_b);
}

TEST_CASE("bootstrap result is a pure function of the seed") {
    Rng rng(108);
    ScoredPredictions a = random_preds(rng, 120, false);
    ScoredPredictions b = random_preds(rng, 120, false);
    b.labels = a.labels;
    ComparisonResult r1 = compare_bootstrap_ttest(a, b, 150, 42);
    ComparisonResult r2 = compare_bootstrap_ttest(a, b, 150, 42);
    ComparisonResult r3 = compare_bootstrap_ttest(a, b, 150, 43);
    CHECK(r1.p_value == r2.p_value);
    CHECK(r1.t_statistic == r2.t_statistic);
    CHECK(r1.bootstrap_diffs == r2.bootstrap_diffs);
    CHECK(r1.bootstrap_diffs != r3.bootstrap_diffs);
}

TEST_CASE("bootstrap rejects unpaired inputs") {
    Rng rng(109);
    ScoredPredictions a = random_preds(rng, 50, false);
    ScoredPredictions b = random_preds(rng, 51, false);
    CHECK_THROWS_AS(compare_bootstrap_ttest(a, b, 10, 1), DomainError);
    ScoredPredictions c = random_preds(rng, 50, false);
    c.labels = a.labels;
    c.labels[5] = 1 - c.labels[5];
    if (c.labels == a.labels) c.labels[6] = 1 - c.labels[6];
    CHECK_THROWS_AS(compare_bootstrap_ttest(a, c, 10, 1), DomainError);
}

TEST_CASE("csv schema and formatting") {
    CHECK(csv_header() == "task,model,loss,sensitivity,specificity,aupr,auroc,p_value");
    EvalReport r;
    r.task = "pneumonia";
    r.model = "standard";
    r.loss = 0.381234;
    r.sensitivity = 0.825678;
    r.specificity = 0.7197;
    r.aupr = 0.63;
    r.auroc = 0.85;
    CHECK(csv_row(r) == "pneumonia,standard,0.3812,82.57,71.97,0.6300,0.8500,");
    r.p_value = 0.0412;
    CHECK(csv_row(r) == "pneumonia,standard,0.3812,82.57,71.97,0.6300,0.8500,0.0412");
}

TEST_CASE("validation catches out-of-range scores and labels") {
    CHECK_THROWS_AS(make({1.2, 0.5}, {1, 0}).validate(), DomainError);
    CHECK_THROWS_AS(make({0.2, 0.5}, {2, 0}).validate(), DomainError);
    CHECK_THROWS_AS(make({0.2}, {1, 0}).validate(), DomainError);
}
