#pragma once

#include <vector>

namespace synthcxr::metrics {

/// Chance-corrected pair-counting agreement between two partitions:
/// (Index - Expected) / (Max - Expected). 1.0 when identical up to
/// relabeling, ~0 for independent partitions. Symmetric in its arguments.
double adjusted_rand_index(const std::vector<int>& assignments,
                           const std::vector<int>& labels);

/// Permutation-matched clustering accuracy for binary labels: with two
/// clusters this is max(agreement, 1 - agreement).
double cluster_accuracy(const std::vector<int>& assignments,
                        const std::vector<int>& labels);

}  // namespace synthcxr::metrics
