#include "synthcxr/repr/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synthcxr/core/rng.hpp"
#include "synthcxr/metrics/clustering.hpp"

namespace synthcxr::repr {

namespace {

constexpr int kMaxIterations = 300;

double sq_dist(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

struct SingleRun {
    std::vector<int> assignments;
    double inertia = 0.0;
    int iterations = 0;
    int empty_clusters = 0;
    std::vector<double> trace;
};

SingleRun lloyd_once(const FeatureMatrix& f, int k, Rng& rng) {
    const int n = f.n, d = f.d;

    // Distance-weighted seeding: first center uniform, then each next center
    // sampled proportional to squared distance from the nearest chosen one.
    std::vector<double> centers(static_cast<std::size_t>(k) * d);
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    {
        const int first = static_cast<int>(rng.uniform_int(n));
        std::copy(f.rows.begin() + static_cast<std::size_t>(first) * d,
                  f.rows.begin() + static_cast<std::size_t>(first + 1) * d, centers.begin());
        for (int c = 1; c < k; ++c) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                const double dist = sq_dist(f.rows.data() + static_cast<std::size_t>(i) * d,
                                            centers.data() + static_cast<std::size_t>(c - 1) * d, d);
                min_dist[i] = std::min(min_dist[i], dist);
                total += min_dist[i];
            }
            int pick;
            if (total <= 0.0) {
                pick = static_cast<int>(rng.uniform_int(n));  // all points identical
            } else {
                double target = rng.uniform() * total;
                pick = n - 1;
                for (int i = 0; i < n; ++i) {
                    target -= min_dist[i];
                    if (target <= 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
            std::copy(f.rows.begin() + static_cast<std::size_t>(pick) * d,
                      f.rows.begin() + static_cast<std::size_t>(pick + 1) * d,
                      centers.begin() + static_cast<std::size_t>(c) * d);
        }
    }

    SingleRun run;
    run.assignments.assign(n, -1);
    std::vector<double> sums(static_cast<std::size_t>(k) * d);
    std::vector<int> counts(k);

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dist = sq_dist(f.rows.data() + static_cast<std::size_t>(i) * d,
                                            centers.data() + static_cast<std::size_t>(c) * d, d);
                if (dist < best_dist) {
                    best_dist = dist;
                    best = c;
                }
            }
            if (run.assignments[i] != best) {
                run.assignments[i] = best;
                changed = true;
            }
        }

        // Update centers; an empty cluster keeps its previous position.
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            const int c = run.assignments[i];
            ++counts[c];
            const double* row = f.rows.data() + static_cast<std::size_t>(i) * d;
            double* sum = sums.data() + static_cast<std::size_t>(c) * d;
            for (int j = 0; j < d; ++j) sum[j] += row[j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            double* ctr = centers.data() + static_cast<std::size_t>(c) * d;
            const double* sum = sums.data() + static_cast<std::size_t>(c) * d;
            for (int j = 0; j < d; ++j) ctr[j] = sum[j] / counts[c];
        }

        double objective = 0.0;
        for (int i = 0; i < n; ++i) {
            objective += sq_dist(f.rows.data() + static_cast<std::size_t>(i) * d,
                                 centers.data() +
                                     static_cast<std::size_t>(run.assignments[i]) * d,
                                 d);
        }
        run.trace.push_back(objective);
        run.iterations = iter + 1;
        if (!changed) break;
    }

    run.inertia = run.trace.back();
    for (int c = 0; c < k; ++c) {
        if (std::count(run.assignments.begin(), run.assignments.end(), c) == 0) {
            ++run.empty_clusters;
        }
    }
    return run;
}

}  // namespace

KmeansResult kmeans(const FeatureMatrix& features, int k, std::uint64_t seed, int restarts) {
    features.validate();
    if (k < 1) fail("k must be >= 1, got ", k);
    if (features.n < k) fail("kmeans needs n >= k (n=", features.n, ", k=", k, ")");
    if (restarts < 1) fail("restarts must be >= 1, got ", restarts);

    KmeansResult best;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(mix_seed(mix_seed(seed, "kmeans_restart"), static_cast<std::uint64_t>(r)));
        SingleRun run = lloyd_once(features, k, rng);
        if (run.inertia < best_inertia) {
            best_inertia = run.inertia;
            best.assignments = std::move(run.assignments);
            best.inertia = run.inertia;
            best.iterations = run.iterations;
            best.best_restart = r;
            best.empty_clusters = run.empty_clusters;
            best.objective_trace = std::move(run.trace);
        }
    }
    return best;
}

ClusterReport evaluate_clustering(const FeatureMatrix& features, const std::vector<int>& labels,
                                  int k, std::uint64_t seed, int restarts) {
    if (static_cast<int>(labels.size()) != features.n) {
        fail("labels length ", labels.size(), " does not match feature rows ", features.n);
    }
    KmeansResult km = kmeans(features, k, seed, restarts);
    ClusterReport report;
    report.assignments = km.assignments;
    report.accuracy = metrics::cluster_accuracy(km.assignments, labels);
    report.ari = metrics::adjusted_rand_index(km.assignments, labels);
    report.k = k;
    report.seed = seed;
    report.restarts = restarts;
    return report;
}

}  // namespace synthcxr::repr
