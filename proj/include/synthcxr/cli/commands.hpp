#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "synthcxr/cli/config.hpp"
#include "synthcxr/metrics/ranking.hpp"
#include "synthcxr/repr/embed.hpp"
#include "synthcxr/repr/kmeans.hpp"

namespace synthcxr::cli {

namespace fs = std::filesystem;

/// Creates {output_dir}/{run_id} (run_id generated from timestamp + config
/// hash unless pinned) and returns its path.
fs::path make_run_dir(const RunConfig& config, std::string* run_id,
                      const std::string& run_id_override = "");

struct CurateOutput {
    fs::path manifest_path;
    fs::path curation_log_path;
    fs::path split_report_path;
    dataset::DatasetManifest manifest;
};

/// Generates per-class quotas through the configured provider (raw images
/// persisted as received), curates, splits, and writes the manifest.
CurateOutput cmd_curate(const RunConfig& config, const std::string& run_id = "");

struct IngestOutput {
    fs::path manifest_path;
    fs::path skip_report_path;
    dataset::DatasetManifest manifest;
    int skipped = 0;
};

/// kind: chest_xray | rsna | folder. For "folder", source_tag names the
/// record source and split=true applies the configured stratified split.
IngestOutput cmd_ingest(const RunConfig& config, const std::string& kind,
                        const std::string& folder_root = "",
                        const std::string& source_tag = "roentgen_v2", bool apply_split = false,
                        const std::string& run_id = "");

struct TrainOutput {
    fs::path checkpoint_path;
    fs::path epoch_log_path;
    fs::path metrics_path;  // internal-test metric report (when a test split exists)
    int selected_epoch = 0;
    double val_metric = 0.0;
};

TrainOutput cmd_train(const RunConfig& config, const fs::path& manifest_path,
                      const std::string& run_id = "");

struct EvalOutput {
    fs::path metrics_path;
    fs::path roc_csv;
    fs::path pr_csv;
    fs::path scores_csv;
    metrics::MetricEstimate auroc;
    metrics::MetricEstimate aupr;
    double prevalence = 0.0;
};

EvalOutput cmd_eval(const RunConfig& config, const fs::path& checkpoint_path,
                    const fs::path& manifest_path, const std::string& dataset_name,
                    const std::string& run_id = "");

struct ClusterVariantSpec {
    std::string checkpoint_path;  // one of checkpoint_path / backbone set
    model::BackboneOptions pristine_backbone;
    bool is_pristine = false;
    std::string tag;
};

struct ClusterVariantOutput {
    std::string tag;
    repr::ClusterReport report;
    fs::path embedding_csv;
};

struct ClusterOutput {
    fs::path metrics_path;
    std::vector<ClusterVariantOutput> variants;
};

ClusterOutput cmd_cluster(const RunConfig& config, const fs::path& manifest_path,
                          const std::vector<ClusterVariantSpec>& variants,
                          const std::string& dataset_name, repr::EmbedMethod method,
                          const std::string& run_id = "");

struct ExplainOutput {
    std::vector<fs::path> cam_paths;
    std::vector<fs::path> overlay_paths;
};

/// target: "predicted" (default), "pneumonia" or "healthy".
ExplainOutput cmd_explain(const RunConfig& config, const fs::path& checkpoint_path,
                          const fs::path& manifest_path, const std::vector<std::string>& ids,
                          const std::string& target = "predicted",
                          const std::string& run_id = "");

struct ReportOutput {
    fs::path consolidated_json;
    fs::path summary_md;
    int metric_rows = 0;
    int cluster_rows = 0;
    int skipped_files = 0;
};

/// Scans output_dir recursively for metrics.json files and renders a
/// consolidated JSON plus a markdown summary table. Malformed files are
/// skipped with a warning.
ReportOutput cmd_report(const fs::path& output_dir);

}  // namespace synthcxr::cli
