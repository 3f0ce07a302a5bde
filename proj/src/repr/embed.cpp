#include "synthcxr/repr/embed.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "synthcxr/core/rng.hpp"

namespace synthcxr::repr {

EmbedMethod embed_method_from_string(const std::string& s) {
    if (s == "pca") return EmbedMethod::pca;
    if (s == "neighborhood_umap_style" || s == "neighborhood") {
        return EmbedMethod::neighborhood_umap_style;
    }
    fail("unknown embedding method '", s, "'");
}

std::string to_string(EmbedMethod m) {
    return m == EmbedMethod::pca ? "pca" : "neighborhood_umap_style";
}

Coords2d pca_embed_2d(const FeatureMatrix& features) {
    features.validate();
    const int n = features.n, d = features.d;
    if (n < 3) fail("pca embedding needs n >= 3, got ", n);

    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) x(i, j) = features.at(i, j);
    }
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    const Eigen::MatrixXd cov = (x.transpose() * x) / std::max(n - 1, 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) fail("pca eigendecomposition failed");

    // Eigenvalues ascending; take the top two columns.
    Coords2d out(n);
    Eigen::MatrixXd components(d, 2);
    for (int c = 0; c < 2; ++c) {
        Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - std::min(c, d - 1));
        // Sign convention: largest-magnitude loading positive.
        int arg = 0;
        for (int j = 1; j < d; ++j) {
            if (std::abs(v(j)) > std::abs(v(arg))) arg = j;
        }
        if (v(arg) < 0) v = -v;
        components.col(c) = v;
    }
    const Eigen::MatrixXd proj = x * components;
    for (int i = 0; i < n; ++i) out[i] = {proj(i, 0), proj(i, 1)};
    return out;
}

Coords2d KnnLayoutReducer::reduce(const FeatureMatrix& features, std::uint64_t seed) const {
    features.validate();
    const int n = features.n, d = features.d;
    const int k = std::min(n_neighbors_, n - 1);

    // Neighbor lists by squared euclidean distance.
    std::vector<std::vector<int>> neighbors(n);
    {
        std::vector<std::pair<double, int>> dist(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int c = 0; c < d; ++c) {
                    const double diff = features.at(i, c) - features.at(j, c);
                    s += diff * diff;
                }
                dist[j] = {s, j};
            }
            dist[i].first = std::numeric_limits<double>::infinity();
            std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
            for (int t = 0; t < k; ++t) neighbors[i].push_back(dist[t].second);
        }
    }

    // PCA start plus a small seeded jitter to break exact ties.
    Coords2d pos = pca_embed_2d(features);
    double scale = 0.0;
    for (const auto& p : pos) scale = std::max({scale, std::abs(p[0]), std::abs(p[1])});
    if (scale <= 0.0) scale = 1.0;
    Rng rng(mix_seed(seed, "knn_layout"));
    for (auto& p : pos) {
        p[0] = p[0] / scale + 1e-3 * rng.normal();
        p[1] = p[1] / scale + 1e-3 * rng.normal();
    }

    // Attraction along graph edges, repulsion from sampled non-neighbors.
    const double lr0 = 0.05;
    for (int it = 0; it < iterations_; ++it) {
        const double lr = lr0 * (1.0 - static_cast<double>(it) / iterations_);
        for (int i = 0; i < n; ++i) {
            for (int j : neighbors[i]) {
                const double dx = pos[j][0] - pos[i][0];
                const double dy = pos[j][1] - pos[i][1];
                pos[i][0] += lr * dx;
                pos[i][1] += lr * dy;
            }
            const int r = static_cast<int>(rng.uniform_int(n));
            if (r != i) {
                const double dx = pos[r][0] - pos[i][0];
                const double dy = pos[r][1] - pos[i][1];
                const double dsq = dx * dx + dy * dy + 1e-6;
                pos[i][0] -= lr * dx / (dsq * 10.0);
                pos[i][1] -= lr * dy / (dsq * 10.0);
            }
        }
    }
    for (const auto& p : pos) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1])) fail("layout diverged");
    }
    return pos;
}

Coords2d embed_2d(const FeatureMatrix& features, std::uint64_t seed, EmbedMethod method,
                  const NeighborhoodReducer* custom) {
    features.validate();
    if (features.n < 3) fail("embedding needs n >= 3, got ", features.n);
    if (method == EmbedMethod::pca) return pca_embed_2d(features);
    if (custom) return custom->reduce(features, seed);
    static const KnnLayoutReducer default_reducer;
    return default_reducer.reduce(features, seed);
}

}  // namespace synthcxr::repr
