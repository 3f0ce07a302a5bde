#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "synthcxr/nn/layers.hpp"
#include "synthcxr/nn/tensor.hpp"

namespace synthcxr::model {

struct BackboneDescriptor {
    std::string name;
    int feature_dim = 0;
    std::string pretrained_corpus;  // "imagenet" or "none"
};

struct BackboneOutput {
    nn::Tensor conv_maps;  // (N, K, h, w): last convolutional activations
    nn::Tensor pooled;     // (N, d): features feeding the classification head
};

struct BackboneOptions {
    std::string name = "stub_conv";  // stub_conv | resnet50
    std::uint64_t stub_seed = 0;
    std::string weights_path;  // pretrained weights for resnet50 ("" = fresh init)

    bool operator==(const BackboneOptions&) const = default;
};

/// Pluggable convolutional feature extractor. Both built-in providers pool
/// the last convolutional maps by global averaging, so the pooled-to-maps
/// VJP needed by CAM computation is a uniform spread.
class BackboneProvider {
public:
    virtual ~BackboneProvider() = default;

    virtual BackboneDescriptor descriptor() const = 0;
    virtual BackboneOptions options() const = 0;

    virtual BackboneOutput forward(const nn::Tensor& batch, bool train) = 0;

    /// Backprop from the gradient w.r.t. pooled features through the whole
    /// backbone, accumulating parameter gradients. Requires a prior forward.
    virtual void backward_from_pooled(const nn::Tensor& grad_pooled) = 0;

    /// VJP of pooled features onto the conv maps only (no parameter
    /// gradients); (map_h, map_w) are the conv-map spatial dims.
    virtual nn::Tensor conv_grad_from_pooled(const nn::Tensor& grad_pooled, int map_h,
                                             int map_w) const {
        return nn::GlobalAvgPool::spread(grad_pooled, map_h, map_w);
    }

    virtual std::vector<nn::Param*> params() = 0;
    virtual std::vector<nn::Param*> buffers() { return {}; }

    virtual bool differentiable() const { return true; }
};

/// Small seeded convolutional net with the same contract as the pretrained
/// backbone, so the full pipeline and test suite run without any downloads.
std::shared_ptr<BackboneProvider> make_stub_backbone(std::uint64_t seed);

/// Deep residual backbone (50-layer bottleneck architecture, feature_dim
/// 2048). Loads pretrained weights from the project's binary tensor format
/// when a path is given; see tools/export_backbone_weights.py.
std::shared_ptr<BackboneProvider> make_resnet50_backbone(const std::string& weights_path);

std::shared_ptr<BackboneProvider> make_backbone(const BackboneOptions& options);

}  // namespace synthcxr::model
