#include "synthcxr/model/classifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "synthcxr/core/rng.hpp"
#include "synthcxr/dataset/record_io.hpp"
#include "synthcxr/jsonio.hpp"
#include "synthcxr/metrics/ranking.hpp"
#include "synthcxr/nn/adam.hpp"

namespace synthcxr::model {

using dataset::ClassLabel;
using dataset::DatasetManifest;
using nlohmann::json;
using nn::Tensor;

namespace {
constexpr int kPneumoniaIndex = 1;  // logit/label index; healthy = 0
constexpr char kCheckpointMagic[8] = {'S', 'X', 'R', 'C', 'K', 'P', 'T', '1'};

int label_index(ClassLabel label) { return label == ClassLabel::pneumonia ? 1 : 0; }
}  // namespace

void TrainConfig::validate() const {
    if (epochs < 1) fail("epochs must be >= 1, got ", epochs);
    if (!(learning_rate > 0.0)) fail("learning_rate must be positive, got ", learning_rate);
    if (batch_size < 1) fail("batch_size must be >= 1, got ", batch_size);
    if (hidden_width < 1) fail("hidden_width must be >= 1, got ", hidden_width);
    if (selection_metric != "auroc_val") {
        fail("unknown selection metric '", selection_metric, "'");
    }
}

// ---------------------------------------------------------------------------
// ClassifierModel
// ---------------------------------------------------------------------------

ClassifierModel::ClassifierModel(std::shared_ptr<BackboneProvider> backbone, int hidden_width,
                                 std::uint64_t seed)
    : backbone_(std::move(backbone)),
      hidden_width_(hidden_width),
      fc1_("head.fc1", backbone_->descriptor().feature_dim, hidden_width),
      fc2_("head.fc2", hidden_width, 2) {
    Rng rng(mix_seed(seed, "head_init"));
    fc1_.init_he(rng);
    fc2_.init_he(rng);
}

Tensor ClassifierModel::forward_logits(const Tensor& batch, bool train) {
    last_ = backbone_->forward(batch, train);
    Tensor hidden = relu_.forward(fc1_.forward(last_.pooled, train), train);
    hidden_relu_ = hidden;
    return fc2_.forward(hidden, train);
}

void ClassifierModel::backward(const Tensor& grad_logits) {
    Tensor g = fc1_.backward(relu_.backward(fc2_.backward(grad_logits)));
    backbone_->backward_from_pooled(g);
}

Tensor ClassifierModel::pooled_grad_for_logit(int target_class) const {
    const int n = hidden_relu_.dim(0);
    const int hw = hidden_width_;
    const int d = backbone_->descriptor().feature_dim;
    if (target_class < 0 || target_class > 1) fail("target class index out of range");

    Tensor grad({n, d});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < hw; ++j) {
            if (hidden_relu_.data[static_cast<std::size_t>(i) * hw + j] <= 0.0) continue;
            const double gh = fc2_.weight.value.data[static_cast<std::size_t>(target_class) * hw + j];
            if (gh == 0.0) continue;
            const double* w1 = fc1_.weight.value.ptr() + static_cast<std::size_t>(j) * d;
            double* out = grad.ptr() + static_cast<std::size_t>(i) * d;
            for (int k = 0; k < d; ++k) out[k] += gh * w1[k];
        }
    }
    return grad;
}

std::vector<nn::Param*> ClassifierModel::trainable_params() {
    std::vector<nn::Param*> out = backbone_->params();
    fc1_.collect_params(out);
    fc2_.collect_params(out);
    return out;
}

std::vector<nn::Param*> ClassifierModel::state_tensors() {
    std::vector<nn::Param*> out = trainable_params();
    for (nn::Param* p : backbone_->buffers()) out.push_back(p);
    return out;
}

ClassifierModel build_model(std::shared_ptr<BackboneProvider> provider, int hidden_width,
                            std::uint64_t seed) {
    if (!provider) fail("null backbone provider");
    if (hidden_width < 1) fail("hidden_width must be >= 1, got ", hidden_width);
    if (provider->descriptor().feature_dim < 1) {
        fail("backbone descriptor reports invalid feature_dim ",
             provider->descriptor().feature_dim);
    }
    return ClassifierModel(std::move(provider), hidden_width, seed);
}

// ---------------------------------------------------------------------------
// Checkpoint IO
// ---------------------------------------------------------------------------

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    json meta;
    meta["format"] = 1;
    meta["backbone"] = ckpt.backbone;
    meta["hidden_width"] = ckpt.hidden_width;
    meta["train_config"] = {{"epochs", ckpt.config.epochs},
                            {"learning_rate", ckpt.config.learning_rate},
                            {"batch_size", ckpt.config.batch_size},
                            {"seed", ckpt.config.seed},
                            {"selection_metric", ckpt.config.selection_metric},
                            {"hidden_width", ckpt.config.hidden_width}};
    meta["augment"] = ckpt.augment;
    meta["provenance"] = ckpt.provenance;
    meta["model_tag"] = ckpt.model_tag;
    meta["selected_epoch"] = ckpt.selected_epoch;
    meta["val_metric"] = ckpt.val_metric;
    meta["tensors"] = json::array();
    for (const auto& [name, tensor] : ckpt.tensors) {
        meta["tensors"].push_back({{"name", name}, {"shape", tensor.shape}});
    }
    const std::string meta_text = meta.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open checkpoint for writing: ", path.string());
    out.write(kCheckpointMagic, 8);
    const std::uint32_t endian = 0x01020304;
    out.write(reinterpret_cast<const char*>(&endian), 4);
    const std::uint64_t meta_len = meta_text.size();
    out.write(reinterpret_cast<const char*>(&meta_len), 8);
    out.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
    for (const auto& t : meta["tensors"]) {
        const auto& tensor = ckpt.tensors.at(t["name"].get<std::string>());
        out.write(reinterpret_cast<const char*>(tensor.data.data()),
                  static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
    }
    if (!out) fail("short write: ", path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open checkpoint: ", path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
        fail("not a checkpoint file (bad magic): ", path.string());
    }
    std::uint32_t endian = 0;
    in.read(reinterpret_cast<char*>(&endian), 4);
    if (endian != 0x01020304) fail("checkpoint endianness mismatch: ", path.string());
    std::uint64_t meta_len = 0;
    in.read(reinterpret_cast<char*>(&meta_len), 8);
    std::string meta_text(meta_len, '\0');
    in.read(meta_text.data(), static_cast<std::streamsize>(meta_len));
    if (!in) fail("truncated checkpoint: ", path.string());

    json meta = json::parse(meta_text);
    if (meta.value("format", 0) != 1) fail("unsupported checkpoint format version");

    Checkpoint ckpt;
    ckpt.backbone = meta.at("backbone").get<BackboneOptions>();
    ckpt.hidden_width = meta.at("hidden_width").get<int>();
    const json& tc = meta.at("train_config");
    ckpt.config.epochs = tc.value("epochs", 20);
    ckpt.config.learning_rate = tc.value("learning_rate", 5e-5);
    ckpt.config.batch_size = tc.value("batch_size", 16);
    ckpt.config.seed = tc.value("seed", std::uint64_t{0});
    ckpt.config.selection_metric = tc.value("selection_metric", "auroc_val");
    ckpt.config.hidden_width = tc.value("hidden_width", ckpt.hidden_width);
    ckpt.augment = meta.value("augment", prep::AugmentConfig{});
    ckpt.provenance = meta.value("provenance", "");
    ckpt.model_tag = meta.value("model_tag", "");
    ckpt.selected_epoch = meta.value("selected_epoch", 0);
    ckpt.val_metric = meta.value("val_metric", 0.0);

    for (const auto& t : meta.at("tensors")) {
        const std::string name = t.at("name").get<std::string>();
        Tensor tensor(t.at("shape").get<std::vector<int>>());
        in.read(reinterpret_cast<char*>(tensor.data.data()),
                static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
        if (!in) fail("truncated checkpoint tensor '", name, "': ", path.string());
        ckpt.tensors.emplace(name, std::move(tensor));
    }
    return ckpt;
}

ClassifierModel model_from_checkpoint(const Checkpoint& ckpt) {
    BackboneOptions opts = ckpt.backbone;
    opts.weights_path.clear();  // parameters come from the checkpoint blobs
    auto provider = make_backbone(opts);

    const auto it = ckpt.tensors.find("head.fc1.weight");
    if (it == ckpt.tensors.end()) fail("checkpoint missing head tensors");
    const int head_input = it->second.dim(1);
    if (provider->descriptor().feature_dim != head_input) {
        fail("backbone feature_dim ", provider->descriptor().feature_dim,
             " does not match checkpoint head input ", head_input);
    }

    ClassifierModel model = build_model(provider, ckpt.hidden_width, ckpt.config.seed);
    for (nn::Param* p : model.state_tensors()) {
        const auto t = ckpt.tensors.find(p->name);
        if (t == ckpt.tensors.end()) fail("checkpoint missing tensor '", p->name, "'");
        if (t->second.shape != p->value.shape) {
            fail("checkpoint tensor '", p->name, "' has shape ", t->second.shape_str(),
                 ", model wants ", p->value.shape_str());
        }
        p->value = t->second;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Data loading helpers
// ---------------------------------------------------------------------------

namespace {

struct LoadedSet {
    std::vector<Image> images;
    std::vector<int> labels;
    std::vector<std::string> ids;
};

LoadedSet load_set(const DatasetManifest& manifest) {
    LoadedSet set;
    set.images.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        try {
            set.images.push_back(dataset::load_record_image(r.path));
        } catch (const Error& e) {
            fail("record '", r.id, "': ", e.what());
        }
        set.labels.push_back(label_index(r.label));
        set.ids.push_back(r.id);
    }
    return set;
}

Tensor batch_from_inputs(const std::vector<prep::ModelInput>& inputs) {
    const int n = static_cast<int>(inputs.size());
    const int side = prep::kInputSize;
    Tensor batch({n, 3, side, side});
    const std::size_t item = static_cast<std::size_t>(3) * side * side;
    for (int i = 0; i < n; ++i) {
        std::copy(inputs[i].chw.begin(), inputs[i].chw.end(),
                  batch.data.begin() + static_cast<std::size_t>(i) * item);
    }
    return batch;
}

/// Eval-path scores over a loaded set (resize only, no augmentation).
std::vector<double> eval_scores(ClassifierModel& model, const LoadedSet& set, int batch_size) {
    std::vector<double> scores;
    scores.reserve(set.images.size());
    for (std::size_t start = 0; start < set.images.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(set.images.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<prep::ModelInput> inputs;
        inputs.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
            inputs.push_back(prep::resize_normalize(set.images[i], set.ids[i]));
        }
        Tensor logits = model.forward_logits(batch_from_inputs(inputs), false);
        Tensor probs = nn::softmax(logits);
        for (std::size_t i = 0; i < end - start; ++i) {
            scores.push_back(probs.data[i * 2 + kPneumoniaIndex]);
        }
    }
    return scores;
}

void check_two_classes(const DatasetManifest& m, const char* which) {
    if (m.records.empty()) fail("empty ", which, " split");
    const auto counts = m.class_counts();
    if (counts.at(ClassLabel::healthy) == 0 || counts.at(ClassLabel::pneumonia) == 0) {
        fail("single-class ", which, " split");
    }
}

}  // namespace

int select_best_epoch(const std::vector<double>& val_metrics) {
    if (val_metrics.empty()) fail("no epochs to select from");
    int best = 0;
    for (int i = 1; i < static_cast<int>(val_metrics.size()); ++i) {
        if (val_metrics[i] > val_metrics[best]) best = i;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

Checkpoint train(ClassifierModel& model, const DatasetManifest& train_manifest,
                 const DatasetManifest& val_manifest, const TrainOptions& options,
                 std::vector<EpochLogEntry>* log) {
    const TrainConfig& cfg = options.config;
    cfg.validate();
    options.augment.validate();
    check_two_classes(train_manifest, "training");
    check_two_classes(val_manifest, "validation");

    const LoadedSet train_set = load_set(train_manifest);
    const LoadedSet val_set = load_set(val_manifest);
    std::vector<int> val_labels;
    for (const auto& r : val_manifest.records) val_labels.push_back(label_index(r.label));

    nn::Adam optimizer(model.trainable_params(), cfg.learning_rate);
    optimizer.zero_grad();

    std::ofstream log_file;
    if (!options.epoch_log_path.empty()) {
        log_file.open(options.epoch_log_path);
        if (!log_file) fail("cannot open epoch log: ", options.epoch_log_path.string());
    }

    const std::size_t n_train = train_set.images.size();
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    double best_metric = -1.0;
    int best_epoch = 0;
    std::map<std::string, Tensor> best_state;
    std::vector<double> epoch_metrics;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        Rng shuffle_rng(mix_seed(mix_seed(cfg.seed, "epoch_shuffle"),
                                 static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n_train; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(shuffle_rng.uniform_int(i));
            std::swap(order[i - 1], order[j]);
        }

        double loss_sum = 0.0;
        int batch_count = 0;
        for (std::size_t start = 0; start < n_train;
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(n_train, start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<prep::ModelInput> inputs;
            std::vector<int> labels;
            inputs.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                const std::size_t idx = order[i];
                // Per-item stream derived from (seed, record id, epoch) so
                // augmentation is reproducible regardless of batch layout.
                Rng aug_rng(mix_seed(mix_seed(mix_seed(cfg.seed, "augment"), train_set.ids[idx]),
                                     static_cast<std::uint64_t>(epoch)));
                Image augmented = prep::augment(train_set.images[idx], options.augment, aug_rng);
                inputs.push_back(prep::normalize_only(augmented, train_set.ids[idx]));
                labels.push_back(train_set.labels[idx]);
            }

            Tensor logits = model.forward_logits(batch_from_inputs(inputs), true);
            Tensor grad_logits;
            const double loss = nn::softmax_cross_entropy(logits, labels, &grad_logits);
            if (!std::isfinite(loss)) {
                fail("non-finite loss at epoch ", epoch, " batch ", batch_count);
            }
            model.backward(grad_logits);
            optimizer.step();
            optimizer.zero_grad();
            loss_sum += loss;
            ++batch_count;
        }

        const double train_loss = loss_sum / std::max(batch_count, 1);
        const std::vector<double> val_scores = eval_scores(model, val_set, cfg.batch_size);
        const double val_auroc = metrics::auroc({val_scores, val_labels});
        epoch_metrics.push_back(val_auroc);

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        EpochLogEntry entry{epoch, train_loss, val_auroc, wall};
        if (log) log->push_back(entry);
        if (log_file) {
            json line = {{"epoch", entry.epoch},
                         {"train_loss", entry.train_loss},
                         {"val_auroc", entry.val_auroc},
                         {"wall_time_s", entry.wall_time_s}};
            log_file << line.dump() << "\n";
            log_file.flush();
        }
        if (options.verbose) {
            std::fprintf(stderr, "epoch %d/%d loss=%.5f val_auroc=%.4f (%.1fs)\n", epoch,
                         cfg.epochs, train_loss, val_auroc, wall);
        }

        if (val_auroc > best_metric) {
            best_metric = val_auroc;
            best_epoch = epoch;
            best_state.clear();
            for (nn::Param* p : model.state_tensors()) best_state.emplace(p->name, p->value);
        }
    }

    // Consistency with the pure selector (earliest argmax).
    if (select_best_epoch(epoch_metrics) + 1 != best_epoch) {
        fail("internal error: selector disagreement");
    }

    Checkpoint ckpt;
    ckpt.backbone = model.backbone().options();
    ckpt.hidden_width = model.hidden_width();
    ckpt.config = cfg;
    ckpt.augment = options.augment;
    ckpt.model_tag = options.model_tag;
    ckpt.provenance = strf("train on [", train_manifest.provenance, "] (", n_train,
                           " records), val on [", val_manifest.provenance, "] (",
                           val_set.images.size(), " records), epochs=", cfg.epochs,
                           ", lr=", cfg.learning_rate, ", batch_size=", cfg.batch_size,
                           ", seed=", cfg.seed);
    ckpt.selected_epoch = best_epoch;
    ckpt.val_metric = best_metric;
    ckpt.tensors = std::move(best_state);
    return ckpt;
}

// ---------------------------------------------------------------------------
// Inference
// ---------------------------------------------------------------------------

std::vector<ScoredRecord> predict_proba(ClassifierModel& model, const DatasetManifest& manifest,
                                        int batch_size) {
    if (batch_size < 1) fail("batch_size must be >= 1");
    std::vector<ScoredRecord> out;
    out.reserve(manifest.records.size());
    for (std::size_t start = 0; start < manifest.records.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(manifest.records.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<prep::ModelInput> inputs;
        for (std::size_t i = start; i < end; ++i) {
            const auto& r = manifest.records[i];
            Image img;
            try {
                img = dataset::load_record_image(r.path);
            } catch (const Error& e) {
                fail("record '", r.id, "': ", e.what());
            }
            inputs.push_back(prep::resize_normalize(img, r.id));
        }
        Tensor probs = nn::softmax(model.forward_logits(batch_from_inputs(inputs), false));
        for (std::size_t i = start; i < end; ++i) {
            out.push_back({manifest.records[i].id,
                           probs.data[(i - start) * 2 + kPneumoniaIndex]});
        }
    }
    return out;
}

std::vector<ScoredRecord> predict_proba(const Checkpoint& ckpt, const DatasetManifest& manifest,
                                        int batch_size) {
    ClassifierModel model = model_from_checkpoint(ckpt);
    return predict_proba(model, manifest, batch_size);
}

repr::FeatureMatrix extract_features(ClassifierModel& model, const DatasetManifest& manifest,
                                     int batch_size) {
    if (batch_size < 1) fail("batch_size must be >= 1");
    const int d = model.backbone().descriptor().feature_dim;
    repr::FeatureMatrix fm;
    fm.n = static_cast<int>(manifest.records.size());
    fm.d = d;
    fm.rows.assign(static_cast<std::size_t>(fm.n) * d, 0.0);
    for (std::size_t start = 0; start < manifest.records.size();
         start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end =
            std::min(manifest.records.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<prep::ModelInput> inputs;
        for (std::size_t i = start; i < end; ++i) {
            const auto& r = manifest.records[i];
            Image img;
            try {
                img = dataset::load_record_image(r.path);
            } catch (const Error& e) {
                fail("record '", r.id, "': ", e.what());
            }
            inputs.push_back(prep::resize_normalize(img, r.id));
        }
        model.forward_logits(batch_from_inputs(inputs), false);
        const Tensor& pooled = model.last_backbone_output().pooled;
        for (std::size_t i = start; i < end; ++i) {
            std::copy(pooled.data.begin() + static_cast<std::size_t>(i - start) * d,
                      pooled.data.begin() + static_cast<std::size_t>(i - start + 1) * d,
                      fm.rows.begin() + i * static_cast<std::size_t>(d));
        }
    }
    for (const auto& r : manifest.records) fm.record_ids.push_back(r.id);
    fm.validate();
    return fm;
}

repr::FeatureMatrix extract_features(const Checkpoint& ckpt, const DatasetManifest& manifest,
                                     int batch_size) {
    ClassifierModel model = model_from_checkpoint(ckpt);
    repr::FeatureMatrix fm = extract_features(model, manifest, batch_size);
    fm.model_tag = ckpt.model_tag;
    return fm;
}

// ---------------------------------------------------------------------------
// Class-activation maps
// ---------------------------------------------------------------------------

namespace {

/// Float bilinear upsample with half-pixel centers.
std::vector<float> upsample_bilinear(const std::vector<double>& map, int h, int w, int out_h,
                                     int out_w) {
    std::vector<float> out(static_cast<std::size_t>(out_h) * out_w, 0.0f);
    const double sy = static_cast<double>(h) / out_h;
    const double sx = static_cast<double>(w) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, h - 1);
        const int y1 = std::clamp(y0 + 1, 0, h - 1);
        const double ay = std::clamp(fy - std::floor(fy), 0.0, 1.0);
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, w - 1);
            const int x1 = std::clamp(x0 + 1, 0, w - 1);
            const double ax = std::clamp(fx - std::floor(fx), 0.0, 1.0);
            const double top = map[static_cast<std::size_t>(y0) * w + x0] * (1 - ax) +
                               map[static_cast<std::size_t>(y0) * w + x1] * ax;
            const double bot = map[static_cast<std::size_t>(y1) * w + x0] * (1 - ax) +
                               map[static_cast<std::size_t>(y1) * w + x1] * ax;
            out[static_cast<std::size_t>(y) * out_w + x] =
                static_cast<float>(top * (1 - ay) + bot * ay);
        }
    }
    return out;
}

}  // namespace

std::vector<float> cam_from_maps(const Tensor& conv_maps, const Tensor& map_grads, int item,
                                 int out_h, int out_w) {
    if (conv_maps.shape != map_grads.shape || conv_maps.shape.size() != 4) {
        fail("conv maps and gradients must share an (N,K,h,w) shape");
    }
    const int k = conv_maps.dim(1), h = conv_maps.dim(2), w = conv_maps.dim(3);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t base = static_cast<std::size_t>(item) * k * plane;

    // Channel weights: spatial means of the gradients.
    std::vector<double> weights(k, 0.0);
    for (int c = 0; c < k; ++c) {
        double sum = 0.0;
        for (std::size_t j = 0; j < plane; ++j) sum += map_grads.data[base + c * plane + j];
        weights[c] = sum / static_cast<double>(plane);
    }

    std::vector<double> raw(plane, 0.0);
    for (int c = 0; c < k; ++c) {
        const double wc = weights[c];
        if (wc == 0.0) continue;
        for (std::size_t j = 0; j < plane; ++j) {
            raw[j] += wc * conv_maps.data[base + c * plane + j];
        }
    }
    double mx = 0.0;
    for (double& v : raw) {
        v = std::max(v, 0.0);
        mx = std::max(mx, v);
    }
    if (mx == 0.0) {
        return std::vector<float>(static_cast<std::size_t>(out_h) * out_w, 0.0f);
    }

    std::vector<float> up = upsample_bilinear(raw, h, w, out_h, out_w);
    float lo = up[0], hi = up[0];
    for (float v : up) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) {
        // Constant positive map normalizes to full intensity.
        std::fill(up.begin(), up.end(), 1.0f);
        return up;
    }
    for (float& v : up) v = (v - lo) / (hi - lo);
    return up;
}

CamMap grad_cam(ClassifierModel& model, const Image& image, int target_class,
                const std::string& record_id) {
    if (!model.backbone().differentiable()) {
        fail("backbone provider does not expose conv-map gradients");
    }
    std::vector<prep::ModelInput> inputs{prep::resize_normalize(image, record_id)};
    Tensor logits = model.forward_logits(batch_from_inputs(inputs), false);
    int target = target_class;
    if (target < 0) {
        target = logits.data[1] > logits.data[0] ? 1 : 0;
    }
    const Tensor pooled_grad = model.pooled_grad_for_logit(target);
    const Tensor& maps = model.last_backbone_output().conv_maps;
    const Tensor map_grads =
        model.backbone().conv_grad_from_pooled(pooled_grad, maps.dim(2), maps.dim(3));

    CamMap cam;
    cam.height = image.height;
    cam.width = image.width;
    cam.values = cam_from_maps(maps, map_grads, 0, image.height, image.width);
    cam.record_id = record_id;
    cam.target = target == kPneumoniaIndex ? ClassLabel::pneumonia : ClassLabel::healthy;
    return cam;
}

CamMap grad_cam(const Checkpoint& ckpt, const Image& image, int target_class,
                const std::string& record_id) {
    ClassifierModel model = model_from_checkpoint(ckpt);
    return grad_cam(model, image, target_class, record_id);
}

}  // namespace synthcxr::model
