#include "synthcxr/metrics/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "synthcxr/core/error.hpp"

namespace synthcxr::metrics {

namespace {

std::vector<int> compact_ids(const std::vector<int>& raw, std::size_t* n_distinct) {
    std::map<int, int> remap;
    std::vector<int> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto [it, inserted] = remap.emplace(raw[i], static_cast<int>(remap.size()));
        out[i] = it->second;
    }
    *n_distinct = remap.size();
    return out;
}

double comb2(double n) { return n * (n - 1.0) / 2.0; }

}  // namespace

double adjusted_rand_index(const std::vector<int>& assignments, const std::vector<int>& labels) {
    if (assignments.size() != labels.size()) {
        fail("ari: length mismatch (", assignments.size(), " vs ", labels.size(), ")");
    }
    const std::size_t n = assignments.size();
    if (n < 2) fail("ari requires at least 2 items, got ", n);

    std::size_t ka = 0, kb = 0;
    const auto a = compact_ids(assignments, &ka);
    const auto b = compact_ids(labels, &kb);

    std::vector<std::vector<long long>> cont(ka, std::vector<long long>(kb, 0));
    std::vector<long long> row(ka, 0), col(kb, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++cont[a[i]][b[i]];
        ++row[a[i]];
        ++col[b[i]];
    }

    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (std::size_t i = 0; i < ka; ++i) {
        for (std::size_t j = 0; j < kb; ++j) sum_ij += comb2(static_cast<double>(cont[i][j]));
        sum_a += comb2(static_cast<double>(row[i]));
    }
    for (std::size_t j = 0; j < kb; ++j) sum_b += comb2(static_cast<double>(col[j]));

    const double expected = sum_a * sum_b / comb2(static_cast<double>(n));
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (denom == 0.0) {
        // Both partitions trivial (all singletons or one cluster each): they
        // agree on every pair.
        return 1.0;
    }
    return (sum_ij - expected) / denom;
}

double cluster_accuracy(const std::vector<int>& assignments, const std::vector<int>& labels) {
    if (assignments.size() != labels.size()) {
        fail("cluster accuracy: length mismatch (", assignments.size(), " vs ", labels.size(),
             ")");
    }
    if (assignments.empty()) fail("cluster accuracy of an empty sample");

    std::size_t ka = 0, kb = 0;
    const auto a = compact_ids(assignments, &ka);
    const auto b = compact_ids(labels, &kb);
    if (kb > 2) fail("cluster accuracy supports binary labels, got ", kb, " classes");
    if (ka > 2) fail("cluster accuracy: more clusters (", ka, ") than classes (2)");

    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == b[i]) ++agree;
    }
    const double frac = static_cast<double>(agree) / static_cast<double>(a.size());
    return std::max(frac, 1.0 - frac);
}

}  // namespace synthcxr::metrics
