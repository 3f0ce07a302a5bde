#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "synthcxr/core/error.hpp"

namespace synthcxr::metrics {

/// Raised when a metric has no defined value on the given data (e.g. AUROC
/// with a single class present). bootstrap_ci treats it as a redraw signal.
class UndefinedMetricError : public Error {
public:
    explicit UndefinedMetricError(const std::string& what) : Error(what) {}
};

/// Binary scored sample: labels[i] in {0,1}, 1 = pneumonia.
struct ScoredLabels {
    std::vector<double> scores;
    std::vector<int> labels;

    std::size_t size() const { return scores.size(); }
};

/// Tie-aware AUROC: P(score_pos > score_neg) + 0.5 * P(score_pos == score_neg)
/// over all positive-negative pairs, computed via midranks.
double auroc(const ScoredLabels& data);

/// Average precision over descending-score thresholds, with tied scores
/// processed as a single group: sum_k (R_k - R_{k-1}) * P_k.
double aupr(const ScoredLabels& data);

/// Fraction of positive labels; the chance baseline for AUPR.
double prevalence_baseline(const std::vector<int>& labels);

/// Point estimate with a percentile-bootstrap confidence interval.
struct MetricEstimate {
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_boot = 0;
    double alpha = 0.0;
    std::uint64_t seed = 0;
};

using MetricFn = std::function<double(const ScoredLabels&)>;

/// Percentile bootstrap: draws n items with replacement per iteration,
/// redrawing (up to 100 times per iteration) when the metric is undefined on
/// the resample. Deterministic for a fixed seed; iteration i uses a stream
/// derived from seed + i, so iterations could run in any order.
MetricEstimate bootstrap_ci(const MetricFn& metric, const ScoredLabels& data,
                            int n_boot = 1000, double alpha = 0.05,
                            std::uint64_t seed = 0);

struct RocPoint {
    double threshold;
    double tpr;
    double fpr;
};

struct PrPoint {
    double threshold;
    double precision;
    double recall;
};

/// One point per distinct score, descending; positives predicted at
/// score >= threshold.
std::vector<RocPoint> roc_curve(const ScoredLabels& data);
std::vector<PrPoint> pr_curve(const ScoredLabels& data);

}  // namespace synthcxr::metrics
