#include "synthcxr/cli/config.hpp"

#include <ctime>
#include <fstream>

#include "synthcxr/jsonio.hpp"

namespace synthcxr::cli {

using nlohmann::json;

json RunConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["model_tag"] = model_tag;
    j["output_dir"] = output_dir;
    j["crop_fraction"] = crop_fraction;
    j["paths"] = {{"curated_store", curated_store},
                  {"chest_xray_root", chest_xray_root},
                  {"rsna_images_dir", rsna_images_dir},
                  {"rsna_labels_csv", rsna_labels_csv}};
    j["provider"] = {{"kind", provider.kind},
                     {"base_url", provider.http.base_url},
                     {"path", provider.http.path},
                     {"token_env", provider.http.token_env},
                     {"timeout_s", provider.http.timeout_s},
                     {"batch_size", provider.batch_size},
                     {"max_attempts", provider.retry.max_attempts},
                     {"base_delay_ms", provider.retry.base_delay_ms}};
    j["backbone"] = backbone;
    j["train"] = {{"epochs", train.epochs},
                  {"learning_rate", train.learning_rate},
                  {"batch_size", train.batch_size},
                  {"hidden_width", train.hidden_width},
                  {"selection_metric", train.selection_metric}};
    j["augment"] = augment;
    j["bootstrap"] = {{"n_boot", bootstrap.n_boot}, {"alpha", bootstrap.alpha}};
    j["curate"] = {{"per_class", curate.per_class},
                   {"split_sizes",
                    {curate.split_sizes.train, curate.split_sizes.val, curate.split_sizes.test}},
                   {"balance_tolerance", curate.balance_tolerance}};
    return j;
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    c.model_tag = j.value("model_tag", c.model_tag);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.crop_fraction = j.value("crop_fraction", c.crop_fraction);
    if (j.contains("paths")) {
        const json& p = j["paths"];
        c.curated_store = p.value("curated_store", c.curated_store);
        c.chest_xray_root = p.value("chest_xray_root", c.chest_xray_root);
        c.rsna_images_dir = p.value("rsna_images_dir", c.rsna_images_dir);
        c.rsna_labels_csv = p.value("rsna_labels_csv", c.rsna_labels_csv);
    }
    if (j.contains("provider")) {
        const json& p = j["provider"];
        c.provider.kind = p.value("kind", c.provider.kind);
        c.provider.http.base_url = p.value("base_url", c.provider.http.base_url);
        c.provider.http.path = p.value("path", c.provider.http.path);
        c.provider.http.token_env = p.value("token_env", c.provider.http.token_env);
        c.provider.http.timeout_s = p.value("timeout_s", c.provider.http.timeout_s);
        c.provider.batch_size = p.value("batch_size", c.provider.batch_size);
        c.provider.retry.max_attempts = p.value("max_attempts", c.provider.retry.max_attempts);
        c.provider.retry.base_delay_ms = p.value("base_delay_ms", c.provider.retry.base_delay_ms);
    }
    if (j.contains("backbone")) c.backbone = j["backbone"].get<model::BackboneOptions>();
    if (j.contains("train")) {
        const json& t = j["train"];
        c.train.epochs = t.value("epochs", c.train.epochs);
        c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        c.train.batch_size = t.value("batch_size", c.train.batch_size);
        c.train.hidden_width = t.value("hidden_width", c.train.hidden_width);
        c.train.selection_metric = t.value("selection_metric", c.train.selection_metric);
    }
    if (j.contains("augment")) c.augment = j["augment"].get<prep::AugmentConfig>();
    if (j.contains("bootstrap")) {
        c.bootstrap.n_boot = j["bootstrap"].value("n_boot", c.bootstrap.n_boot);
        c.bootstrap.alpha = j["bootstrap"].value("alpha", c.bootstrap.alpha);
    }
    if (j.contains("curate")) {
        const json& cu = j["curate"];
        c.curate.per_class = cu.value("per_class", c.curate.per_class);
        if (cu.contains("split_sizes")) {
            const auto sizes = cu["split_sizes"].get<std::vector<int>>();
            if (sizes.size() != 3) fail("curate.split_sizes must have 3 entries");
            c.curate.split_sizes = {sizes[0], sizes[1], sizes[2]};
        }
        c.curate.balance_tolerance = cu.value("balance_tolerance", c.curate.balance_tolerance);
    }
    return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file: ", path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail("malformed config json (", path.string(), "): ", e.what());
    }
    return from_json(j);
}

std::string short_config_hash(const RunConfig& config) {
    const std::string text = config.to_json().dump();
    return sha256_hex(text.data(), text.size()).substr(0, 8);
}

std::string make_run_id(const RunConfig& config) {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm_utc);
    return strf(stamp, "-", short_config_hash(config));
}

}  // namespace synthcxr::cli
