#include "synthcxr/cli/commands.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include "synthcxr/core/npy.hpp"
#include "synthcxr/dataset/ingest.hpp"
#include "synthcxr/dataset/record_io.hpp"
#include "synthcxr/gen/curate.hpp"
#include "synthcxr/gen/stub_provider.hpp"
#include "synthcxr/jsonio.hpp"
#include "synthcxr/metrics/clustering.hpp"

namespace synthcxr::cli {

using dataset::ClassLabel;
using dataset::DatasetManifest;
using nlohmann::json;

namespace {

class StageTimer {
public:
    void start(const std::string& stage) {
        stage_ = stage;
        t0_ = std::chrono::steady_clock::now();
    }
    void stop() {
        if (stage_.empty()) return;
        timings_[stage_] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
        stage_.clear();
    }
    json to_json() const { return timings_; }

private:
    std::string stage_;
    std::chrono::steady_clock::time_point t0_;
    std::map<std::string, double> timings_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail("cannot open for writing: ", path.string());
    out << text;
}

void write_run_record(const fs::path& run_dir, const std::string& command,
                      const RunConfig& config, const std::string& run_id,
                      const StageTimer& timer, const std::vector<fs::path>& artifacts) {
    json j;
    j["command"] = command;
    j["run_id"] = run_id;
    j["seed"] = config.seed;
    j["code_version"] = kVersion;
    j["config"] = config.to_json();
    j["timings_s"] = timer.to_json();
    j["artifacts"] = json::array();
    for (const auto& a : artifacts) j["artifacts"].push_back(a.string());
    write_text(run_dir / "run_record.json", j.dump(2) + "\n");
}

/// Appends entries to {run_dir}/metrics.json (a JSON array).
fs::path append_metrics(const fs::path& run_dir, const std::vector<json>& entries) {
    const fs::path path = run_dir / "metrics.json";
    json arr = json::array();
    if (fs::exists(path)) {
        std::ifstream in(path);
        try {
            in >> arr;
        } catch (const json::exception&) {
            arr = json::array();
        }
        if (!arr.is_array()) arr = json::array();
    }
    for (const auto& e : entries) arr.push_back(e);
    write_text(path, arr.dump(2) + "\n");
    return path;
}

json metric_entry(const std::string& dataset, const std::string& model_tag,
                  const std::string& metric, const metrics::MetricEstimate& est) {
    return json{{"type", "metric"},   {"dataset", dataset}, {"model_tag", model_tag},
                {"metric", metric},   {"point", est.point}, {"ci_low", est.ci_low},
                {"ci_high", est.ci_high}, {"n_boot", est.n_boot}, {"alpha", est.alpha},
                {"seed", est.seed}};
}

metrics::ScoredLabels scored_labels(const std::vector<model::ScoredRecord>& scored,
                                    const DatasetManifest& manifest) {
    metrics::ScoredLabels data;
    for (std::size_t i = 0; i < scored.size(); ++i) {
        data.scores.push_back(scored[i].score);
        data.labels.push_back(manifest.records[i].label == ClassLabel::pneumonia ? 1 : 0);
    }
    return data;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    return out + "\"";
}

dataset::Source source_for_provider(const std::string& kind) {
    return kind == "stub" ? dataset::Source::procedural_stub : dataset::Source::nano_banana;
}

}  // namespace

fs::path make_run_dir(const RunConfig& config, std::string* run_id,
                      const std::string& run_id_override) {
    const std::string id = run_id_override.empty() ? make_run_id(config) : run_id_override;
    if (run_id) *run_id = id;
    const fs::path dir = fs::path(config.output_dir) / id;
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------
// curate
// ---------------------------------------------------------------------------

CurateOutput cmd_curate(const RunConfig& config, const std::string& run_id_override) {
    std::string run_id;
    const fs::path run_dir = make_run_dir(config, &run_id, run_id_override);
    StageTimer timer;

    std::unique_ptr<gen::GenerationProvider> provider;
    if (config.provider.kind == "stub") {
        provider = std::make_unique<gen::StubGenerationProvider>(config.seed);
    } else if (config.provider.kind == "remote") {
        provider = std::make_unique<gen::HttpGenerationProvider>(config.provider.http);
    } else {
        fail("unknown provider kind '", config.provider.kind, "'");
    }

    // Session tag derives from the seed (not the run id) so reruns with the
    // same config are byte-reproducible.
    const std::string session_tag = strf("curate-seed-", config.seed);

    timer.start("generate");
    std::vector<std::pair<gen::RawImage, ClassLabel>> raws;
    for (ClassLabel label : {ClassLabel::healthy, ClassLabel::pneumonia}) {
        const fs::path raw_dir = run_dir / "raw" / dataset::to_string(label);
        fs::create_directories(raw_dir);
        int received = 0;
        gen::RawSink sink = [&](const gen::RawImage& img) {
            const std::string stem = strf(std::setw(4), std::setfill('0'), received);
            save_png(img.pixels, raw_dir / (stem + ".png"));
            write_text(raw_dir / (stem + ".meta.json"), img.provider_metadata + "\n");
            ++received;
        };
        int stalled = 0;
        while (received < config.curate.per_class) {
            gen::GenerationRequest req;
            req.count = std::min(config.provider.batch_size,
                                 config.curate.per_class - received);
            req.prompt = gen::build_prompt(label, req.count);
            req.target_class = label;
            req.session_tag = session_tag;
            const int before = received;
            auto batch = gen::request_batch(*provider, req, sink, config.provider.retry);
            for (auto& img : batch) raws.emplace_back(std::move(img), label);
            if (received == before && ++stalled >= 5) {
                fail("provider made no progress after ", stalled, " rounds");
            }
        }
    }
    timer.stop();

    timer.start("curate");
    gen::CurationOptions options;
    options.crop_fraction = config.crop_fraction;
    options.balance_tolerance = config.curate.balance_tolerance;
    options.source = source_for_provider(config.provider.kind);
    const fs::path store = config.curated_store.empty() ? run_dir / "curated"
                                                        : fs::path(config.curated_store);
    gen::CurationResult curated = gen::curate_dataset(raws, options, config.seed, store);
    timer.stop();

    timer.start("split");
    DatasetManifest manifest =
        dataset::stratified_split(curated.manifest, config.curate.split_sizes, config.seed);
    timer.stop();

    CurateOutput out;
    out.manifest = manifest;
    out.manifest_path = run_dir / "manifest.json";
    dataset::save_manifest(manifest, out.manifest_path);
    out.curation_log_path = run_dir / "curation_log.json";
    write_text(out.curation_log_path, gen::curation_log_to_json(curated.log));

    json split_report;
    for (dataset::Split s : {dataset::Split::train, dataset::Split::val, dataset::Split::test}) {
        const DatasetManifest sub = manifest.subset(s);
        split_report[dataset::to_string(s)] = {
            {"total", sub.records.size()},
            {"healthy", sub.count(ClassLabel::healthy)},
            {"pneumonia", sub.count(ClassLabel::pneumonia)}};
    }
    out.split_report_path = run_dir / "split_report.json";
    write_text(out.split_report_path, split_report.dump(2) + "\n");

    write_run_record(run_dir, "curate", config, run_id, timer,
                     {out.manifest_path, out.curation_log_path, out.split_report_path});
    return out;
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

IngestOutput cmd_ingest(const RunConfig& config, const std::string& kind,
                        const std::string& folder_root, const std::string& source_tag,
                        bool apply_split, const std::string& run_id_override) {
    std::string run_id;
    const fs::path run_dir = make_run_dir(config, &run_id, run_id_override);
    StageTimer timer;
    timer.start("ingest");

    dataset::IngestResult result;
    std::string name = kind;
    if (kind == "chest_xray") {
        if (config.chest_xray_root.empty()) fail("paths.chest_xray_root not configured");
        result = dataset::ingest_chest_xray_folder(config.chest_xray_root);
    } else if (kind == "rsna") {
        if (config.rsna_images_dir.empty() || config.rsna_labels_csv.empty()) {
            fail("paths.rsna_images_dir / paths.rsna_labels_csv not configured");
        }
        result = dataset::ingest_rsna(config.rsna_images_dir, config.rsna_labels_csv);
    } else if (kind == "folder") {
        if (folder_root.empty()) fail("--root is required for folder ingestion");
        result = dataset::ingest_class_folder(folder_root,
                                              dataset::source_from_string(source_tag));
        if (apply_split) {
            result.manifest = dataset::stratified_split(result.manifest,
                                                        config.curate.split_sizes, config.seed);
        }
    } else {
        fail("unknown ingest kind '", kind, "' (expected chest_xray, rsna or folder)");
    }
    timer.stop();

    IngestOutput out;
    out.manifest = result.manifest;
    out.skipped = static_cast<int>(result.skipped.size());
    out.manifest_path = run_dir / ("manifest_" + name + ".json");
    dataset::save_manifest(result.manifest, out.manifest_path);
    out.skip_report_path = run_dir / ("skip_report_" + name + ".json");
    write_text(out.skip_report_path, dataset::skip_report_to_json(result.skipped));

    const auto counts = result.manifest.class_counts();
    std::cout << "ingested " << result.manifest.records.size() << " records ("
              << counts.at(ClassLabel::healthy) << " healthy, "
              << counts.at(ClassLabel::pneumonia) << " pneumonia), skipped " << out.skipped
              << "\n";

    write_run_record(run_dir, "ingest-" + name, config, run_id, timer,
                     {out.manifest_path, out.skip_report_path});
    return out;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

TrainOutput cmd_train(const RunConfig& config, const fs::path& manifest_path,
                      const std::string& run_id_override) {
    if (!fs::exists(manifest_path)) fail("manifest not found: ", manifest_path.string());
    std::string run_id;
    const fs::path run_dir = make_run_dir(config, &run_id, run_id_override);
    StageTimer timer;

    const DatasetManifest manifest = dataset::load_manifest(manifest_path);
    const DatasetManifest train_split = manifest.subset(dataset::Split::train);
    const DatasetManifest val_split = manifest.subset(dataset::Split::val);
    const DatasetManifest test_split = manifest.subset(dataset::Split::test);

    model::BackboneOptions backbone_opts = config.backbone;
    if (backbone_opts.name == "stub_conv") backbone_opts.stub_seed = config.seed;
    auto provider = model::make_backbone(backbone_opts);
    model::ClassifierModel classifier =
        model::build_model(provider, config.train.hidden_width, config.seed);

    model::TrainOptions options;
    options.config = config.effective_train();
    options.augment = config.augment;
    options.model_tag = config.model_tag;
    options.epoch_log_path = run_dir / "epochs.jsonl";
    options.verbose = true;

    timer.start("train");
    model::Checkpoint ckpt = model::train(classifier, train_split, val_split, options);
    timer.stop();

    TrainOutput out;
    out.checkpoint_path = run_dir / "checkpoint.ckpt";
    out.epoch_log_path = options.epoch_log_path;
    out.selected_epoch = ckpt.selected_epoch;
    out.val_metric = ckpt.val_metric;
    model::save_checkpoint(ckpt, out.checkpoint_path);

    std::vector<fs::path> artifacts{out.checkpoint_path, out.epoch_log_path};
    if (!test_split.records.empty()) {
        timer.start("internal_test_eval");
        model::ClassifierModel restored = model::model_from_checkpoint(ckpt);
        const auto scored =
            model::predict_proba(restored, test_split, config.train.batch_size);
        const metrics::ScoredLabels data = scored_labels(scored, test_split);
        const auto auroc_est =
            metrics::bootstrap_ci(metrics::auroc, data, config.bootstrap.n_boot,
                                  config.bootstrap.alpha, config.seed);
        const auto aupr_est =
            metrics::bootstrap_ci(metrics::aupr, data, config.bootstrap.n_boot,
                                  config.bootstrap.alpha, config.seed);
        out.metrics_path = append_metrics(
            run_dir, {metric_entry("internal_test", config.model_tag, "auroc", auroc_est),
                      metric_entry("internal_test", config.model_tag, "aupr", aupr_est)});
        timer.stop();
        artifacts.push_back(out.metrics_path);
        std::cout << "internal test auroc=" << auroc_est.point << " [" << auroc_est.ci_low
                  << ", " << auroc_est.ci_high << "] aupr=" << aupr_est.point << " ["
                  << aupr_est.ci_low << ", " << aupr_est.ci_high << "]\n";
    }

    write_run_record(run_dir, "train", config, run_id, timer, artifacts);
    return out;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

EvalOutput cmd_eval(const RunConfig& config, const fs::path& checkpoint_path,
                    const fs::path& manifest_path, const std::string& dataset_name,
                    const std::string& run_id_override) {
    if (!fs::exists(checkpoint_path)) fail("checkpoint not found: ", checkpoint_path.string());
    if (!fs::exists(manifest_path)) fail("manifest not found: ", manifest_path.string());
    std::string run_id;
    const fs::path run_dir = make_run_dir(config, &run_id, run_id_override);
    StageTimer timer;

    const model::Checkpoint ckpt = model::load_checkpoint(checkpoint_path);
    const DatasetManifest manifest = dataset::load_manifest(manifest_path);
    if (manifest.records.empty()) fail("empty manifest: ", manifest_path.string());
    const std::string tag = ckpt.model_tag.empty() ? config.model_tag : ckpt.model_tag;

    timer.start("predict");
    model::ClassifierModel classifier = model::model_from_checkpoint(ckpt);
    const auto scored = model::predict_proba(classifier, manifest, config.train.batch_size);
    timer.stop();

    timer.start("metrics");
    const metrics::ScoredLabels data = scored_labels(scored, manifest);
    EvalOutput out;
    out.auroc = metrics::bootstrap_ci(metrics::auroc, data, config.bootstrap.n_boot,
                                      config.bootstrap.alpha, config.seed);
    out.aupr = metrics::bootstrap_ci(metrics::aupr, data, config.bootstrap.n_boot,
                                     config.bootstrap.alpha, config.seed);
    out.prevalence = metrics::prevalence_baseline(data.labels);
    timer.stop();

    out.metrics_path = append_metrics(
        run_dir,
        {metric_entry(dataset_name, tag, "auroc", out.auroc),
         metric_entry(dataset_name, tag, "aupr", out.aupr),
         json{{"type", "baseline"},
              {"dataset", dataset_name},
              {"model_tag", tag},
              {"metric", "prevalence_baseline"},
              {"point", out.prevalence}}});

    // Curve CSVs for plotting.
    {
        std::ostringstream roc;
        roc << "threshold,tpr,fpr\n";
        for (const auto& p : metrics::roc_curve(data)) {
            roc << p.threshold << "," << p.tpr << "," << p.fpr << "\n";
        }
        out.roc_csv = run_dir / strf("roc_", dataset_name, "_", tag, ".csv");
        write_text(out.roc_csv, roc.str());

        std::ostringstream pr;
        pr << "threshold,precision,recall\n";
        for (const auto& p : metrics::pr_curve(data)) {
            pr << p.threshold << "," << p.precision << "," << p.recall << "\n";
        }
        out.pr_csv = run_dir / strf("pr_", dataset_name, "_", tag, ".csv");
        write_text(out.pr_csv, pr.str());

        std::ostringstream sc;
        sc << "record_id,score,label\n";
        for (std::size_t i = 0; i < scored.size(); ++i) {
            sc << csv_escape(scored[i].record_id) << "," << scored[i].score << ","
               << data.labels[i] << "\n";
        }
        out.scores_csv = run_dir / strf("scores_", dataset_name, "_", tag, ".csv");
        write_text(out.scores_csv, sc.str());
    }

    std::cout << dataset_name << " " << tag << ": auroc=" << out.auroc.point << " ["
              << out.auroc.ci_low << ", " << out.auroc.ci_high << "], aupr=" << out.aupr.point
              << " [" << out.aupr.ci_low << ", " << out.aupr.ci_high
              << "], prevalence=" << out.prevalence << "\n";

    write_run_record(run_dir, "eval", config, run_id, timer,
                     {out.metrics_path, out.roc_csv, out.pr_csv, out.scores_csv});
    return out;
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

ClusterOutput cmd_cluster(const RunConfig& config, const fs::path& manifest_path,
                          const std::vector<ClusterVariantSpec>& variants,
                          const std::string& dataset_name, repr::EmbedMethod method,
                          const std::string& run_id_override) {
    if (!fs::exists(manifest_path)) fail("manifest not found: ", manifest_path.string());
    if (variants.empty()) fail("no model variants given to cluster");
    std::string run_id;
    const fs::path run_dir = make_run_dir(config, &run_id, run_id_override);
    StageTimer timer;

    const DatasetManifest manifest = dataset::load_manifest(manifest_path);
    std::vector<int> labels;
    for (const auto& r : manifest.records) {
        labels.push_back(r.label == ClassLabel::pneumonia ? 1 : 0);
    }

    ClusterOutput out;
    std::vector<json> entries;
    for (const auto& spec : variants) {
        timer.start("features_" + spec.tag);
        repr::FeatureMatrix features;
        if (spec.is_pristine) {
            auto provider = model::make_backbone(spec.pristine_backbone);
            model::ClassifierModel probe = model::build_model(provider, 8, config.seed);
            features = model::extract_features(probe, manifest, config.train.batch_size);
            features.model_tag = spec.tag;
        } else {
            model::Checkpoint ckpt = model::load_checkpoint(spec.checkpoint_path);
            features = model::extract_features(ckpt, manifest, config.train.batch_size);
            if (!spec.tag.empty()) features.model_tag = spec.tag;
            else if (features.model_tag.empty()) features.model_tag = config.model_tag;
        }
        timer.stop();

        timer.start("kmeans_" + spec.tag);
        repr::ClusterReport report =
            repr::evaluate_clustering(features, labels, 2, config.seed, 10);
        timer.stop();

        timer.start("embed_" + spec.tag);
        const repr::Coords2d coords = repr::embed_2d(features, config.seed, method);
        timer.stop();

        ClusterVariantOutput vout;
        vout.tag = features.model_tag;
        vout.report = report;
        vout.embedding_csv =
            run_dir / strf("embedding_", dataset_name, "_", features.model_tag, ".csv");
        std::ostringstream csv;
        csv << "record_id,x,y,label,cluster\n";
        for (int i = 0; i < features.n; ++i) {
            csv << csv_escape(features.record_ids[i]) << "," << coords[i][0] << ","
                << coords[i][1] << "," << labels[i] << "," << report.assignments[i] << "\n";
        }
        write_text(vout.embedding_csv, csv.str());

        entries.push_back(json{{"type", "cluster_report"},
                               {"dataset", dataset_name},
                               {"model_tag", features.model_tag},
                               {"accuracy", report.accuracy},
                               {"ari", report.ari},
                               {"k", report.k},
                               {"seed", report.seed},
                               {"restarts", report.restarts},
                               {"embed_method", repr::to_string(method)}});
        std::cout << dataset_name << " " << features.model_tag
                  << ": acc=" << report.accuracy << " ari=" << report.ari << "\n";
        out.variants.push_back(std::move(vout));
    }

    out.metrics_path = append_metrics(run_dir, entries);
    std::vector<fs::path> artifacts{out.metrics_path};
    for (const auto& v : out.variants) artifacts.push_back(v.embedding_csv);
    write_run_record(run_dir, "cluster", config, run_id, timer, artifacts);
    return out;
}

// ---------------------------------------------------------------------------
// explain
// ---------------------------------------------------------------------------

namespace {

/// Classic blue-to-red heat colormap.
void heat_color(float v, std::uint8_t* rgb) {
    const double r = std::clamp(1.5 - std::abs(4.0 * v - 3.0), 0.0, 1.0);
    const double g = std::clamp(1.5 - std::abs(4.0 * v - 2.0), 0.0, 1.0);
    const double b = std::clamp(1.5 - std::abs(4.0 * v - 1.0), 0.0, 1.0);
    rgb[0] = static_cast<std::uint8_t>(std::lround(255.0 * r));
    rgb[1] = static_cast<std::uint8_t>(std::lround(255.0 * g));
    rgb[2] = static_cast<std::uint8_t>(std::lround(255.0 * b));
}

Image render_overlay(const Image& base, const model::CamMap& cam) {
    constexpr double kAlpha = 0.4;
    Image out(base.height, base.width, 3);
    for (int y = 0; y < base.height; ++y) {
        for (int x = 0; x < base.width; ++x) {
            const std::uint8_t gray = base.at(y, x, 0);
            std::uint8_t rgb[3];
            heat_color(cam.values[static_cast<std::size_t>(y) * base.width + x], rgb);
            for (int c = 0; c < 3; ++c) {
                const double blended = (1.0 - kAlpha) * gray + kAlpha * rgb[c];
                out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(blended));
            }
        }
    }
    return out;
}

}  // namespace

ExplainOutput cmd_explain(const RunConfig& config, const fs::path& checkpoint_path,
                          const fs::path& manifest_path, const std::vector<std::string>& ids,
                          const std::string& target, const std::string& run_id_override) {
    if (!fs::exists(checkpoint_path)) fail("checkpoint not found: ", checkpoint_path.string());
    if (!fs::exists(manifest_path)) fail("manifest not found: ", manifest_path.string());
    if (ids.empty()) fail("no image ids given");
    std::string run_id;
    const fs::path run_dir = make_run_dir(config, &run_id, run_id_override);
    StageTimer timer;

    int target_index = -1;
    if (target == "pneumonia") target_index = 1;
    else if (target == "healthy") target_index = 0;
    else if (target != "predicted") fail("unknown CAM target '", target, "'");

    const model::Checkpoint ckpt = model::load_checkpoint(checkpoint_path);
    model::ClassifierModel classifier = model::model_from_checkpoint(ckpt);
    const DatasetManifest manifest = dataset::load_manifest(manifest_path);

    ExplainOutput out;
    timer.start("cam");
    for (const std::string& id : ids) {
        const dataset::ImageRecord* record = nullptr;
        for (const auto& r : manifest.records) {
            if (r.id == id) {
                record = &r;
                break;
            }
        }
        if (!record) fail("unknown record id '", id, "'");
        const Image img = dataset::load_record_image(record->path);
        const model::CamMap cam = model::grad_cam(classifier, img, target_index, id);

        std::string safe_id = id;
        for (char& c : safe_id) {
            if (c == '/' || c == '\\') c = '_';
        }
        const fs::path cam_path = run_dir / strf("cam_", safe_id, ".npy");
        save_npy_f32(cam_path, cam.values,
                     {static_cast<std::size_t>(cam.height), static_cast<std::size_t>(cam.width)});
        const fs::path overlay_path = run_dir / strf("cam_", safe_id, "_overlay.png");
        save_png(render_overlay(img, cam), overlay_path);
        out.cam_paths.push_back(cam_path);
        out.overlay_paths.push_back(overlay_path);
    }
    timer.stop();

    std::vector<fs::path> artifacts = out.cam_paths;
    artifacts.insert(artifacts.end(), out.overlay_paths.begin(), out.overlay_paths.end());
    write_run_record(run_dir, "explain", config, run_id, timer, artifacts);
    return out;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

ReportOutput cmd_report(const fs::path& output_dir) {
    ReportOutput out;
    json consolidated = json::array();
    std::vector<json> metric_rows, cluster_rows;

    if (fs::exists(output_dir)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(output_dir)) {
            if (entry.is_regular_file() && entry.path().filename() == "metrics.json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            json arr;
            try {
                std::ifstream in(file);
                in >> arr;
                if (!arr.is_array()) throw Error("metrics file is not an array");
            } catch (const std::exception& e) {
                std::cerr << "warning: skipping malformed report " << file.string() << " ("
                          << e.what() << ")\n";
                ++out.skipped_files;
                continue;
            }
            for (auto& entry : arr) {
                entry["source"] = file.string();
                if (entry.value("type", "") == "metric") metric_rows.push_back(entry);
                else if (entry.value("type", "") == "cluster_report") cluster_rows.push_back(entry);
                consolidated.push_back(entry);
            }
        }
    }

    std::ostringstream md;
    md << "# Results\n\n## Ranking metrics\n\n";
    md << "| dataset | model | metric | point | 95% CI |\n";
    md << "|---|---|---|---|---|\n";
    for (const auto& r : metric_rows) {
        md << "| " << r.value("dataset", "?") << " | " << r.value("model_tag", "?") << " | "
           << r.value("metric", "?") << " | " << r.value("point", 0.0) << " | ["
           << r.value("ci_low", 0.0) << ", " << r.value("ci_high", 0.0) << "] |\n";
    }
    md << "\n## Clustering\n\n";
    md << "| dataset | model | accuracy | ari |\n";
    md << "|---|---|---|---|\n";
    for (const auto& r : cluster_rows) {
        md << "| " << r.value("dataset", "?") << " | " << r.value("model_tag", "?") << " | "
           << r.value("accuracy", 0.0) << " | " << r.value("ari", 0.0) << " |\n";
    }

    fs::create_directories(output_dir);
    out.consolidated_json = output_dir / "consolidated_report.json";
    write_text(out.consolidated_json, consolidated.dump(2) + "\n");
    out.summary_md = output_dir / "summary.md";
    write_text(out.summary_md, md.str());
    out.metric_rows = static_cast<int>(metric_rows.size());
    out.cluster_rows = static_cast<int>(cluster_rows.size());
    std::cout << "report: " << out.metric_rows << " metric rows, " << out.cluster_rows
              << " cluster rows, " << out.skipped_files << " files skipped\n";
    return out;
}

}  // namespace synthcxr::cli
