#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "synthcxr/dataset/split.hpp"
#include "synthcxr/gen/http_provider.hpp"
#include "synthcxr/model/classifier.hpp"

namespace synthcxr::cli {

inline constexpr const char* kVersion = "0.1.0";

struct ProviderConfig {
    std::string kind = "stub";  // stub | remote
    gen::HttpProviderConfig http;
    int batch_size = 10;
    gen::RetryPolicy retry;
};

struct CurateParams {
    int per_class = 150;
    dataset::SplitSizes split_sizes;  // 220/30/50
    int balance_tolerance = 0;
};

struct BootstrapParams {
    int n_boot = 1000;
    double alpha = 0.05;
};

/// One JSON document drives every command; targeted flags override fields.
/// The top-level seed feeds every stochastic component (provider, split,
/// head init, training, bootstrap, clustering, embedding).
struct RunConfig {
    std::uint64_t seed = 0;
    std::string model_tag = "model";
    std::string output_dir = "runs";
    double crop_fraction = 0.30;

    std::string curated_store;  // "" = {run_dir}/curated
    std::string chest_xray_root;
    std::string rsna_images_dir;
    std::string rsna_labels_csv;

    ProviderConfig provider;
    model::BackboneOptions backbone;
    model::TrainConfig train;
    prep::AugmentConfig augment;
    BootstrapParams bootstrap;
    CurateParams curate;

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig from_file(const std::filesystem::path& path);

    /// Effective training config: the run seed propagated in.
    model::TrainConfig effective_train() const {
        model::TrainConfig t = train;
        t.seed = seed;
        return t;
    }
};

/// First 8 hex chars of the config digest.
std::string short_config_hash(const RunConfig& config);

/// timestamp + short config hash, e.g. 20260809-143210-1a2b3c4d.
std::string make_run_id(const RunConfig& config);

}  // namespace synthcxr::cli
