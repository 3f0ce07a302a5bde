#include <doctest.h>

#include <cmath>

#include "synthcxr/metrics/clustering.hpp"
#include "synthcxr/metrics/ranking.hpp"
#include "test_support.hpp"

using namespace synthcxr;
using metrics::ScoredLabels;

namespace {

ScoredLabels random_instance(Rng& rng, int max_n) {
    const int n = 2 + static_cast<int>(rng.uniform_int(max_n - 1));
    ScoredLabels data;
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
        // Quantized scores so ties actually occur.
        data.scores.push_back(std::round(rng.uniform() * 8.0) / 8.0);
        const int label = rng.bernoulli(0.5) ? 1 : 0;
        data.labels.push_back(label);
        (label ? has_pos : has_neg) = true;
    }
    if (!has_pos) data.labels[0] = 1;
    if (!has_neg) data.labels.back() = 0;
    return data;
}

}  // namespace

TEST_CASE("auroc hand values") {
    CHECK(metrics::auroc({{0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}}) == doctest::Approx(0.75));
    // Perfect separation.
    CHECK(metrics::auroc({{0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1}}) == doctest::Approx(1.0));
    // All ties.
    CHECK(metrics::auroc({{0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1}}) == doctest::Approx(0.5));
}

TEST_CASE("auroc errors") {
    CHECK_THROWS_AS(metrics::auroc({{0.1, 0.2}, {1, 1}}), metrics::UndefinedMetricError);
    CHECK_THROWS_AS(metrics::auroc({{0.1}, {1, 0}}), Error);
    CHECK_THROWS_AS(metrics::auroc({{0.1, 0.2}, {0, 2}}), Error);
}

TEST_CASE("aupr hand values") {
    CHECK(metrics::aupr({{0.2, 0.9}, {0, 1}}) == doctest::Approx(1.0));
    CHECK(metrics::aupr({{0.9, 0.8, 0.7}, {1, 0, 1}}) == doctest::Approx(5.0 / 6.0));
    // All scores equal -> prevalence.
    CHECK(metrics::aupr({{0.3, 0.3, 0.3, 0.3}, {1, 0, 0, 1}}) == doctest::Approx(0.5));
    CHECK(metrics::aupr({{0.3, 0.3, 0.3, 0.3, 0.3}, {1, 0, 0, 0, 0}}) == doctest::Approx(0.2));
    CHECK_THROWS_AS(metrics::aupr({{0.1, 0.2}, {0, 0}}), metrics::UndefinedMetricError);
}

TEST_CASE("auroc and aupr match brute-force oracles on random instances") {
    Rng rng(20260809);
    for (int trial = 0; trial < 500; ++trial) {
        const ScoredLabels data = random_instance(rng, 12);
        CHECK(metrics::auroc(data) ==
              doctest::Approx(testsupport::oracle_auroc_pairs(data)).epsilon(1e-12));
        CHECK(metrics::aupr(data) ==
              doctest::Approx(testsupport::oracle_ap_threshold_sweep(data)).epsilon(1e-12));
    }
}

TEST_CASE("ranking metrics invariant under strictly increasing transforms") {
    Rng rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const ScoredLabels data = random_instance(rng, 12);
        ScoredLabels exp_data = data, affine_data = data;
        for (auto& s : exp_data.scores) s = std::exp(s);
        for (auto& s : affine_data.scores) s = 3.5 * s + 11.0;
        CHECK(metrics::auroc(data) == doctest::Approx(metrics::auroc(exp_data)).epsilon(1e-12));
        CHECK(metrics::auroc(data) ==
              doctest::Approx(metrics::auroc(affine_data)).epsilon(1e-12));
        CHECK(metrics::aupr(data) == doctest::Approx(metrics::aupr(exp_data)).epsilon(1e-12));
        CHECK(metrics::aupr(data) == doctest::Approx(metrics::aupr(affine_data)).epsilon(1e-12));
    }
}

TEST_CASE("auroc score-negation symmetry for tie-free scores") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        ScoredLabels data;
        for (int i = 0; i < 10; ++i) {
            data.scores.push_back(rng.uniform() + i * 10.0);  // distinct
            data.labels.push_back(i % 2);
        }
        ScoredLabels negated = data;
        for (auto& s : negated.scores) s = -s;
        CHECK(metrics::auroc(data) + metrics::auroc(negated) == doctest::Approx(1.0));
    }
}

TEST_CASE("prevalence baselines") {
    std::vector<int> labels(5856, 0);
    std::fill(labels.begin(), labels.begin() + 4273, 1);
    CHECK(metrics::prevalence_baseline(labels) == doctest::Approx(0.7297).epsilon(1e-3));

    labels.assign(14863, 0);
    std::fill(labels.begin(), labels.begin() + 6012, 1);
    CHECK(metrics::prevalence_baseline(labels) == doctest::Approx(0.4045).epsilon(1e-3));

    CHECK(metrics::prevalence_baseline({0, 0, 0}) == 0.0);
}

TEST_CASE("bootstrap records parameters and is seed-reproducible") {
    Rng rng(5);
    ScoredLabels data;
    for (int i = 0; i < 60; ++i) {
        data.labels.push_back(i % 2);
        data.scores.push_back(rng.uniform() + 0.3 * (i % 2));
    }
    const auto a = metrics::bootstrap_ci(metrics::auroc, data, 1000, 0.05, 42);
    const auto b = metrics::bootstrap_ci(metrics::auroc, data, 1000, 0.05, 42);
    CHECK(a.n_boot == 1000);
    CHECK(a.alpha == 0.05);
    CHECK(a.seed == 42);
    CHECK(a.point == b.point);
    CHECK(a.ci_low == b.ci_low);    // bit-identical
    CHECK(a.ci_high == b.ci_high);
    CHECK(a.ci_low <= a.ci_high);
}

TEST_CASE("bootstrap on one positive and one negative with distinct scores") {
    const ScoredLabels data{{0.9, 0.1}, {1, 0}};
    const auto est = metrics::bootstrap_ci(metrics::auroc, data, 200, 0.05, 7);
    CHECK(est.point == 1.0);
    // Every valid resample contains one of each class and ranks perfectly.
    CHECK(est.ci_low == 1.0);
    CHECK(est.ci_high == 1.0);
}

TEST_CASE("bootstrap redraw bound trips on perpetually undefined resamples") {
    const ScoredLabels data{{0.5, 0.6}, {1, 0}};
    int calls = 0;
    // Point estimate succeeds; every resample is reported undefined, so the
    // 100-redraw bound must fail loudly.
    auto metric = [&calls](const ScoredLabels& d) -> double {
        if (calls++ == 0) return metrics::auroc(d);
        throw metrics::UndefinedMetricError("forced");
    };
    CHECK_THROWS_WITH_AS(metrics::bootstrap_ci(metric, data, 10, 0.05, 1),
                         doctest::Contains("degenerate data for bootstrap"), Error);
}

TEST_CASE("adjusted rand index hand values and oracle") {
    CHECK(metrics::adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    CHECK(metrics::adjusted_rand_index({1, 1, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    CHECK(metrics::adjusted_rand_index({0, 1, 0, 1}, {0, 0, 1, 1}) == doctest::Approx(-0.5));
    CHECK(metrics::adjusted_rand_index({0, 0, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(0.0));

    Rng rng(31337);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(9));
        std::vector<int> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = static_cast<int>(rng.uniform_int(2));
            b[i] = static_cast<int>(rng.uniform_int(2));
        }
        CHECK(metrics::adjusted_rand_index(a, b) ==
              doctest::Approx(testsupport::oracle_ari_paircount(a, b)).epsilon(1e-12));
        // Symmetry and relabeling invariance.
        CHECK(metrics::adjusted_rand_index(a, b) ==
              doctest::Approx(metrics::adjusted_rand_index(b, a)).epsilon(1e-12));
        std::vector<int> a_flipped(n);
        for (int i = 0; i < n; ++i) a_flipped[i] = 1 - a[i];
        CHECK(metrics::adjusted_rand_index(a, b) ==
              doctest::Approx(metrics::adjusted_rand_index(a_flipped, b)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(metrics::adjusted_rand_index({0, 1}, {0, 1, 1}), Error);
}

TEST_CASE("cluster accuracy") {
    CHECK(metrics::cluster_accuracy({0, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    CHECK(metrics::cluster_accuracy({1, 1, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(1.0));
    CHECK(metrics::cluster_accuracy({0, 1, 0, 1}, {0, 0, 1, 1}) == doctest::Approx(0.5));
    CHECK_THROWS_AS(metrics::cluster_accuracy({0, 1}, {0, 1, 1}), Error);
    CHECK_THROWS_AS(metrics::cluster_accuracy({0, 1, 2}, {0, 1, 1}), Error);

    // Any 2-cluster assignment scores at least 0.5 on binary labels.
    Rng rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_int(20));
        std::vector<int> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = static_cast<int>(rng.uniform_int(2));
            b[i] = static_cast<int>(rng.uniform_int(2));
        }
        CHECK(metrics::cluster_accuracy(a, b) >= 0.5);
    }
}

TEST_CASE("roc and pr curves") {
    const ScoredLabels data{{0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0}};
    const auto roc = metrics::roc_curve(data);
    REQUIRE(roc.size() == 4);
    CHECK(roc.front().tpr == doctest::Approx(0.5));
    CHECK(roc.front().fpr == doctest::Approx(0.0));
    CHECK(roc.back().tpr == doctest::Approx(1.0));
    CHECK(roc.back().fpr == doctest::Approx(1.0));

    const auto pr = metrics::pr_curve(data);
    REQUIRE(pr.size() == 4);
    CHECK(pr.front().precision == doctest::Approx(1.0));
    CHECK(pr.front().recall == doctest::Approx(0.5));
}
