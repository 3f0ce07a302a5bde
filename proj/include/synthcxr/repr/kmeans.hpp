#pragma once

#include <cstdint>
#include <vector>

#include "synthcxr/repr/feature_matrix.hpp"

namespace synthcxr::repr {

struct KmeansResult {
    std::vector<int> assignments;
    double inertia = 0.0;  // within-cluster sum of squares
    int iterations = 0;
    int best_restart = 0;
    int empty_clusters = 0;
    /// Objective after each Lloyd iteration of the winning restart;
    /// non-increasing by construction.
    std::vector<double> objective_trace;
};

/// Lloyd's algorithm with distance-weighted (k-means++ style) seeding per
/// restart; returns the restart with the lowest within-cluster sum of
/// squares (ties -> lowest restart index). Deterministic given the seed;
/// converges when assignments stabilize or after 300 iterations.
KmeansResult kmeans(const FeatureMatrix& features, int k = 2, std::uint64_t seed = 0,
                    int restarts = 10);

struct ClusterReport {
    std::vector<int> assignments;
    double accuracy = 0.0;
    double ari = 0.0;
    int k = 2;
    std::uint64_t seed = 0;
    int restarts = 10;
};

/// Clusters the features and scores the partition against the true labels
/// with permutation-matched accuracy and the adjusted Rand index.
ClusterReport evaluate_clustering(const FeatureMatrix& features, const std::vector<int>& labels,
                                  int k = 2, std::uint64_t seed = 0, int restarts = 10);

}  // namespace synthcxr::repr
