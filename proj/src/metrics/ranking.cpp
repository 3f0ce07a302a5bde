#include "synthcxr/metrics/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synthcxr/core/rng.hpp"

namespace synthcxr::metrics {

namespace {

void check_binary(const ScoredLabels& data) {
    if (data.scores.size() != data.labels.size()) {
        fail("scores and labels have different lengths (", data.scores.size(), " vs ",
             data.labels.size(), ")");
    }
    if (data.scores.empty()) fail("empty scored sample");
    for (int v : data.labels) {
        if (v != 0 && v != 1) fail("labels must be 0/1, got ", v);
    }
}

std::vector<std::size_t> order_by_score_desc(const std::vector<double>& scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

}  // namespace

double auroc(const ScoredLabels& data) {
    check_binary(data);
    const std::size_t n = data.size();
    std::size_t n_pos = 0;
    for (int v : data.labels) n_pos += static_cast<std::size_t>(v);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedMetricError("auroc undefined: only one class present");
    }

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return data.scores[a] < data.scores[b]; });

    // Midranks over tie groups; rank sum of positives gives the tie-aware
    // pair statistic.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && data.scores[idx[j]] == data.scores[idx[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // (i+1 + j) / 2, 1-based
        for (std::size_t t = i; t < j; ++t) {
            if (data.labels[idx[t]] == 1) pos_rank_sum += midrank;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double aupr(const ScoredLabels& data) {
    check_binary(data);
    std::size_t n_pos = 0;
    for (int v : data.labels) n_pos += static_cast<std::size_t>(v);
    if (n_pos == 0) throw UndefinedMetricError("aupr undefined: no positives");

    const auto idx = order_by_score_desc(data.scores);
    const std::size_t n = idx.size();
    double ap = 0.0;
    double recall_prev = 0.0;
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && data.scores[idx[j]] == data.scores[idx[i]]) ++j;
        for (std::size_t t = i; t < j; ++t) {
            if (data.labels[idx[t]] == 1) ++tp; else ++fp;
        }
        const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - recall_prev) * precision;
        recall_prev = recall;
        i = j;
    }
    return ap;
}

double prevalence_baseline(const std::vector<int>& labels) {
    if (labels.empty()) fail("prevalence of an empty label set");
    std::size_t n_pos = 0;
    for (int v : labels) {
        if (v != 0 && v != 1) fail("labels must be 0/1, got ", v);
        n_pos += static_cast<std::size_t>(v);
    }
    return static_cast<double>(n_pos) / static_cast<double>(labels.size());
}

namespace {

double percentile_interp(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

MetricEstimate bootstrap_ci(const MetricFn& metric, const ScoredLabels& data, int n_boot,
                            double alpha, std::uint64_t seed) {
    check_binary(data);
    if (n_boot < 1) fail("n_boot must be >= 1, got ", n_boot);
    if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must be in (0,1), got ", alpha);

    MetricEstimate est;
    est.point = metric(data);
    est.n_boot = n_boot;
    est.alpha = alpha;
    est.seed = seed;

    const std::size_t n = data.size();
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n_boot));
    ScoredLabels resample;
    resample.scores.resize(n);
    resample.labels.resize(n);

    constexpr int kMaxRedraws = 100;
    for (int it = 0; it < n_boot; ++it) {
        Rng rng(mix_seed(seed + static_cast<std::uint64_t>(it), "bootstrap"));
        bool done = false;
        for (int attempt = 0; attempt < kMaxRedraws && !done; ++attempt) {
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t pick = static_cast<std::size_t>(rng.uniform_int(n));
                resample.scores[i] = data.scores[pick];
                resample.labels[i] = data.labels[pick];
            }
            try {
                values.push_back(metric(resample));
                done = true;
            } catch (const UndefinedMetricError&) {
                // resample degenerate; redraw
            }
        }
        if (!done) fail("degenerate data for bootstrap: 100 redraws exhausted at iteration ", it);
    }

    std::sort(values.begin(), values.end());
    est.ci_low = percentile_interp(values, alpha / 2.0);
    est.ci_high = percentile_interp(values, 1.0 - alpha / 2.0);
    return est;
}

std::vector<RocPoint> roc_curve(const ScoredLabels& data) {
    check_binary(data);
    const auto idx = order_by_score_desc(data.scores);
    std::size_t n_pos = 0;
    for (int v : data.labels) n_pos += static_cast<std::size_t>(v);
    const std::size_t n_neg = data.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedMetricError("roc curve undefined: only one class present");
    }
    std::vector<RocPoint> out;
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && data.scores[idx[j]] == data.scores[idx[i]]) ++j;
        for (std::size_t t = i; t < j; ++t) {
            if (data.labels[idx[t]] == 1) ++tp; else ++fp;
        }
        out.push_back({data.scores[idx[i]], static_cast<double>(tp) / static_cast<double>(n_pos),
                       static_cast<double>(fp) / static_cast<double>(n_neg)});
        i = j;
    }
    return out;
}

std::vector<PrPoint> pr_curve(const ScoredLabels& data) {
    check_binary(data);
    std::size_t n_pos = 0;
    for (int v : data.labels) n_pos += static_cast<std::size_t>(v);
    if (n_pos == 0) throw UndefinedMetricError("pr curve undefined: no positives");
    const auto idx = order_by_score_desc(data.scores);
    std::vector<PrPoint> out;
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && data.scores[idx[j]] == data.scores[idx[i]]) ++j;
        for (std::size_t t = i; t < j; ++t) {
            if (data.labels[idx[t]] == 1) ++tp; else ++fp;
        }
        out.push_back({data.scores[idx[i]],
                       static_cast<double>(tp) / static_cast<double>(tp + fp),
                       static_cast<double>(tp) / static_cast<double>(n_pos)});
        i = j;
    }
    return out;
}

}  // namespace synthcxr::metrics
