#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "synthcxr/repr/feature_matrix.hpp"

namespace synthcxr::repr {

enum class EmbedMethod { neighborhood_umap_style, pca };

EmbedMethod embed_method_from_string(const std::string& s);
std::string to_string(EmbedMethod m);

using Coords2d = std::vector<std::array<double, 2>>;

/// Interchangeable nonlinear reducer behind the neighborhood method. The
/// contract the pipeline relies on: seeded (same seed, same output), n x 2,
/// all finite.
class NeighborhoodReducer {
public:
    virtual ~NeighborhoodReducer() = default;
    virtual Coords2d reduce(const FeatureMatrix& features, std::uint64_t seed) const = 0;
    virtual std::string name() const = 0;
};

/// Built-in stand-in reducer: PCA initialization refined by a seeded
/// attraction/repulsion pass over a k-nearest-neighbor graph. Honors the
/// contract above; swap in a full manifold learner through the seam for
/// publication figures.
class KnnLayoutReducer : public NeighborhoodReducer {
public:
    explicit KnnLayoutReducer(int n_neighbors = 10, int iterations = 120)
        : n_neighbors_(n_neighbors), iterations_(iterations) {}
    Coords2d reduce(const FeatureMatrix& features, std::uint64_t seed) const override;
    std::string name() const override { return "knn_layout"; }

private:
    int n_neighbors_;
    int iterations_;
};

/// Exact top-2 principal components, mean-centered, with a deterministic
/// sign convention (the largest-magnitude loading of each component is
/// positive).
Coords2d pca_embed_2d(const FeatureMatrix& features);

/// Seeded 2-D embedding for scatter-figure export. pca is always available
/// and exact; the neighborhood method goes through the reducer seam
/// (`custom`, or the built-in KnnLayoutReducer when null).
Coords2d embed_2d(const FeatureMatrix& features, std::uint64_t seed, EmbedMethod method,
                  const NeighborhoodReducer* custom = nullptr);

}  // namespace synthcxr::repr
