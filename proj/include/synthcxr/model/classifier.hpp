#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "synthcxr/dataset/manifest.hpp"
#include "synthcxr/model/backbone.hpp"
#include "synthcxr/nn/layers.hpp"
#include "synthcxr/prep/preprocess.hpp"
#include "synthcxr/repr/feature_matrix.hpp"

namespace synthcxr::model {

struct TrainConfig {
    int epochs = 20;
    double learning_rate = 5e-5;
    int batch_size = 16;
    std::uint64_t seed = 0;
    std::string selection_metric = "auroc_val";
    int hidden_width = 512;

    void validate() const;
};

/// Pretrained (or stub) backbone plus a two-layer classification head:
/// feature_dim -> hidden -> 2 logits with a rectifier in between.
class ClassifierModel {
public:
    ClassifierModel(std::shared_ptr<BackboneProvider> backbone, int hidden_width,
                    std::uint64_t seed);

    /// Forward to logits (N, 2); caches intermediate state for backward and
    /// for pooled-feature / conv-map access.
    nn::Tensor forward_logits(const nn::Tensor& batch, bool train);

    /// Backprop from logit gradients through head and backbone, accumulating
    /// all parameter gradients.
    void backward(const nn::Tensor& grad_logits);

    /// d(logit_target)/d(pooled) for every item of the last forward batch,
    /// computed from head weights and the cached rectifier mask. Does not
    /// touch parameter gradients.
    nn::Tensor pooled_grad_for_logit(int target_class) const;

    const BackboneOutput& last_backbone_output() const { return last_; }
    BackboneProvider& backbone() { return *backbone_; }
    const BackboneProvider& backbone() const { return *backbone_; }
    int hidden_width() const { return hidden_width_; }

    std::vector<nn::Param*> trainable_params();
    /// Every tensor that belongs in a checkpoint (params + buffers).
    std::vector<nn::Param*> state_tensors();

private:
    std::shared_ptr<BackboneProvider> backbone_;
    int hidden_width_;
    nn::Linear fc1_;
    nn::ReLU relu_;
    nn::Linear fc2_;
    BackboneOutput last_;
    nn::Tensor hidden_relu_;  // cached head activation for the CAM VJP
};

/// Head initialized deterministically from the seed; backbone parameters are
/// whatever the provider holds (pretrained or seeded).
ClassifierModel build_model(std::shared_ptr<BackboneProvider> provider, int hidden_width,
                            std::uint64_t seed);

struct EpochLogEntry {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_auroc = 0.0;
    double wall_time_s = 0.0;
};

/// Self-describing trained-model container (versioned magic header, JSON
/// meta, raw parameter blobs).
struct Checkpoint {
    BackboneOptions backbone;
    int hidden_width = 512;
    TrainConfig config;
    prep::AugmentConfig augment;
    std::string provenance;
    std::string model_tag;
    int selected_epoch = 0;  // 1-based
    double val_metric = 0.0;
    std::map<std::string, nn::Tensor> tensors;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rebuilds the model architecture recorded in the checkpoint and installs
/// its parameter blobs.
ClassifierModel model_from_checkpoint(const Checkpoint& ckpt);

struct TrainOptions {
    TrainConfig config;
    prep::AugmentConfig augment;
    std::string model_tag = "model";
    std::filesystem::path epoch_log_path;  // JSONL; empty = no file
    bool verbose = false;
};

/// Runs exactly config.epochs epochs of mini-batch gradient descent on
/// cross-entropy over augmented train inputs, evaluating validation AUROC
/// after each epoch, and returns the checkpoint of the best validation epoch
/// (earliest on ties). Per-epoch entries are appended to *log when given.
Checkpoint train(ClassifierModel& model, const dataset::DatasetManifest& train_manifest,
                 const dataset::DatasetManifest& val_manifest, const TrainOptions& options,
                 std::vector<EpochLogEntry>* log = nullptr);

/// Argmax with earliest-index tie-breaking; the model-selection rule.
int select_best_epoch(const std::vector<double>& val_metrics);

struct ScoredRecord {
    std::string record_id;
    double score = 0.0;  // softmax pneumonia probability
};

std::vector<ScoredRecord> predict_proba(ClassifierModel& model,
                                        const dataset::DatasetManifest& manifest,
                                        int batch_size = 16);
std::vector<ScoredRecord> predict_proba(const Checkpoint& ckpt,
                                        const dataset::DatasetManifest& manifest,
                                        int batch_size = 16);

repr::FeatureMatrix extract_features(ClassifierModel& model,
                                     const dataset::DatasetManifest& manifest,
                                     int batch_size = 16);
repr::FeatureMatrix extract_features(const Checkpoint& ckpt,
                                     const dataset::DatasetManifest& manifest,
                                     int batch_size = 16);

/// Per-image class-activation map aligned to the model input resolution.
struct CamMap {
    int height = 0;
    int width = 0;
    std::vector<float> values;  // row-major, in [0, 1]
    std::string record_id;
    dataset::ClassLabel target = dataset::ClassLabel::pneumonia;
};

/// Core map construction: channel weights are the spatial means of the
/// per-channel gradients; the weighted sum is rectified, bilinearly
/// upsampled to (out_h, out_w) and min-max normalized. An identically-zero
/// rectified map stays all zeros.
std::vector<float> cam_from_maps(const nn::Tensor& conv_maps, const nn::Tensor& map_grads,
                                 int item, int out_h, int out_w);

/// target_class -1 = use the predicted class.
CamMap grad_cam(ClassifierModel& model, const Image& image, int target_class,
                const std::string& record_id = "");
CamMap grad_cam(const Checkpoint& ckpt, const Image& image, int target_class,
                const std::string& record_id = "");

}  // namespace synthcxr::model
