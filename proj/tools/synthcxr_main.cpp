#include <CLI11.hpp>

#include <iostream>

#include "synthcxr/cli/commands.hpp"

namespace {

using synthcxr::cli::RunConfig;

RunConfig resolve_config(const std::string& config_path, std::uint64_t* seed_override,
                         std::string* output_dir_override) {
    RunConfig config;
    if (!config_path.empty()) config = RunConfig::from_file(config_path);
    if (seed_override) config.seed = *seed_override;
    if (output_dir_override && !output_dir_override->empty()) {
        config.output_dir = *output_dir_override;
    }
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic chest X-ray curation, training and external validation pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::string run_id;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "Run configuration JSON file")->envname("SYNTHCXR_CONFIG");
    app.add_option("--seed", seed, "Override the configured seed");
    app.add_option("--output-dir", output_dir, "Override the configured output directory");
    app.add_option("--run-id", run_id, "Pin the run id (default: timestamp + config hash)");

    // curate
    auto* curate = app.add_subcommand("curate", "Generate, curate and split a synthetic dataset");
    std::optional<double> crop_fraction;
    std::optional<int> per_class;
    std::string provider_kind;
    curate->add_option("--crop-fraction", crop_fraction, "Lower-crop fraction (0 = raw arm)");
    curate->add_option("--per-class", per_class, "Images to generate per class");
    curate->add_option("--provider", provider_kind, "Provider kind: stub | remote");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Ingest a corpus into a manifest");
    std::string ingest_kind, ingest_root, ingest_source = "roentgen_v2";
    bool ingest_split = false;
    ingest->add_option("--kind", ingest_kind, "chest_xray | rsna | folder")->required();
    ingest->add_option("--root", ingest_root, "Folder root (folder kind)");
    ingest->add_option("--source", ingest_source, "Source tag for folder ingestion");
    ingest->add_flag("--split", ingest_split, "Apply the configured stratified split (folder kind)");

    // train
    auto* train = app.add_subcommand("train", "Fine-tune the classifier on a split manifest");
    std::string train_manifest;
    train->add_option("--manifest", train_manifest, "Split manifest JSON")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Externally validate a checkpoint on a corpus manifest");
    std::string eval_checkpoint, eval_manifest, eval_dataset = "external";
    eval->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")->required();
    eval->add_option("--manifest", eval_manifest, "Corpus manifest JSON")->required();
    eval->add_option("--dataset", eval_dataset, "Dataset name for reports");

    // cluster
    auto* cluster = app.add_subcommand("cluster", "Unsupervised representation analysis");
    std::vector<std::string> cluster_checkpoints;
    std::vector<std::string> cluster_pristine;
    std::string cluster_manifest, cluster_dataset = "external", embed_method = "pca";
    cluster->add_option("--manifest", cluster_manifest, "Corpus manifest JSON")->required();
    cluster->add_option("--checkpoint", cluster_checkpoints, "Checkpoint file (repeatable)");
    cluster->add_option("--pristine", cluster_pristine,
                        "Un-fine-tuned backbone, e.g. stub_conv or resnet50:/path/weights.bin");
    cluster->add_option("--dataset", cluster_dataset, "Dataset name for reports");
    cluster->add_option("--embed", embed_method, "pca | neighborhood_umap_style");

    // explain
    auto* explain = app.add_subcommand("explain", "Class-activation maps and overlays");
    std::string explain_checkpoint, explain_manifest, explain_target = "predicted";
    std::vector<std::string> explain_ids;
    explain->add_option("--checkpoint", explain_checkpoint, "Checkpoint file")->required();
    explain->add_option("--manifest", explain_manifest, "Manifest holding the records")->required();
    explain->add_option("--id", explain_ids, "Record id (repeatable)")->required();
    explain->add_option("--target", explain_target, "predicted | pneumonia | healthy");

    // report
    auto* report = app.add_subcommand("report", "Consolidate metric reports under the output dir");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig config = resolve_config(config_path, seed ? &*seed : nullptr, &output_dir);

        if (curate->parsed()) {
            if (crop_fraction) config.crop_fraction = *crop_fraction;
            if (per_class) config.curate.per_class = *per_class;
            if (!provider_kind.empty()) config.provider.kind = provider_kind;
            auto out = synthcxr::cli::cmd_curate(config, run_id);
            std::cout << "manifest: " << out.manifest_path.string() << "\n";
        } else if (ingest->parsed()) {
            auto out = synthcxr::cli::cmd_ingest(config, ingest_kind, ingest_root, ingest_source,
                                                 ingest_split, run_id);
            std::cout << "manifest: " << out.manifest_path.string() << "\n";
        } else if (train->parsed()) {
            auto out = synthcxr::cli::cmd_train(config, train_manifest, run_id);
            std::cout << "checkpoint: " << out.checkpoint_path.string() << " (epoch "
                      << out.selected_epoch << ", val " << out.val_metric << ")\n";
        } else if (eval->parsed()) {
            synthcxr::cli::cmd_eval(config, eval_checkpoint, eval_manifest, eval_dataset, run_id);
        } else if (cluster->parsed()) {
            std::vector<synthcxr::cli::ClusterVariantSpec> specs;
            for (const auto& path : cluster_checkpoints) {
                synthcxr::cli::ClusterVariantSpec spec;
                spec.checkpoint_path = path;
                specs.push_back(spec);
            }
            for (const auto& text : cluster_pristine) {
                synthcxr::cli::ClusterVariantSpec spec;
                spec.is_pristine = true;
                const auto colon = text.find(':');
                spec.pristine_backbone.name = text.substr(0, colon);
                if (colon != std::string::npos) {
                    spec.pristine_backbone.weights_path = text.substr(colon + 1);
                }
                spec.tag = "pristine_" + spec.pristine_backbone.name;
                specs.push_back(spec);
            }
            synthcxr::cli::cmd_cluster(config, cluster_manifest, specs, cluster_dataset,
                                       synthcxr::repr::embed_method_from_string(embed_method),
                                       run_id);
        } else if (explain->parsed()) {
            auto out = synthcxr::cli::cmd_explain(config, explain_checkpoint, explain_manifest,
                                                  explain_ids, explain_target, run_id);
            std::cout << out.cam_paths.size() << " activation maps written\n";
        } else if (report->parsed()) {
            auto out = synthcxr::cli::cmd_report(config.output_dir);
            std::cout << "summary: " << out.summary_md.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
