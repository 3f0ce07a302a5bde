#include "synthcxr/gen/curate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace synthcxr::gen {

using dataset::ClassLabel;
using nlohmann::json;

Image crop_lower_fraction(const Image& image, double fraction) {
    if (image.height < 2) fail("crop needs image height >= 2, got ", image.height);
    if (fraction < 0.0) fail("crop fraction must be >= 0, got ", fraction);
    if (fraction >= 1.0) fail("crop fraction must be < 1, got ", fraction);

    // ceil(H * (1 - fraction)); the epsilon guards against decimal fractions
    // whose binary representation lands a hair above an exact integer.
    const double retained_real = static_cast<double>(image.height) * (1.0 - fraction);
    int retained = static_cast<int>(std::ceil(retained_real - 1e-9));
    retained = std::clamp(retained, 1, image.height);

    Image out(retained, image.width, image.channels);
    const std::size_t row_bytes = static_cast<std::size_t>(image.width) * image.channels;
    std::copy(image.pixels.begin(),
              image.pixels.begin() + static_cast<std::size_t>(retained) * row_bytes,
              out.pixels.begin());
    return out;
}

CurationResult curate_dataset(const std::vector<std::pair<RawImage, ClassLabel>>& raw,
                              const CurationOptions& options, std::uint64_t seed,
                              const std::filesystem::path& store_root) {
    if (raw.empty()) fail("curate_dataset: no raw images");

    namespace fs = std::filesystem;
    for (ClassLabel label : {ClassLabel::healthy, ClassLabel::pneumonia}) {
        fs::create_directories(store_root / dataset::to_string(label));
    }

    CurationResult result;
    std::set<std::string> seen_hashes;
    int index = 0;
    for (const auto& [image, label] : raw) {
        CurationEntry entry;
        entry.input_index = index++;
        entry.provider_metadata = image.provider_metadata;

        if (image.pixels.height <= image.pixels.width) {
            entry.reason = "not portrait";
            result.log.push_back(std::move(entry));
            continue;
        }
        const Image cropped = crop_lower_fraction(image.pixels, options.crop_fraction);
        const std::string hash = content_hash_hex(cropped);
        if (!seen_hashes.insert(hash).second) {
            entry.reason = "duplicate";
            result.log.push_back(std::move(entry));
            continue;
        }

        const std::string id = dataset::to_string(label) + "_" + hash.substr(0, 12);
        const fs::path path = store_root / dataset::to_string(label) / (id + ".png");
        save_png(cropped, path);

        dataset::ImageRecord record;
        record.id = id;
        record.path = fs::absolute(path).string();
        record.label = label;
        record.source = options.source;
        record.split = dataset::Split::unassigned;
        record.content_hash = hash;
        result.manifest.records.push_back(std::move(record));

        entry.id = id;
        entry.accepted = true;
        result.log.push_back(std::move(entry));
    }

    const auto counts = result.manifest.class_counts();
    const int healthy = counts.at(ClassLabel::healthy);
    const int pneumonia = counts.at(ClassLabel::pneumonia);
    if (std::abs(healthy - pneumonia) > options.balance_tolerance) {
        fail("curated classes imbalanced beyond tolerance ", options.balance_tolerance,
             ": healthy=", healthy, " pneumonia=", pneumonia);
    }

    std::sort(result.manifest.records.begin(), result.manifest.records.end(),
              [](const dataset::ImageRecord& a, const dataset::ImageRecord& b) {
                  return a.id < b.id;
              });
    result.manifest.seed = seed;
    result.manifest.provenance =
        strf("curate_dataset source=", dataset::to_string(options.source),
             " crop_fraction=", options.crop_fraction, " seed=", seed, " accepted=",
             result.manifest.records.size(), "/", raw.size());
    return result;
}

std::string curation_log_to_json(const std::vector<CurationEntry>& log) {
    json j;
    j["entries"] = json::array();
    for (const auto& e : log) {
        json meta;
        if (!e.provider_metadata.empty()) {
            try {
                meta = json::parse(e.provider_metadata);
            } catch (const json::exception&) {
                meta = e.provider_metadata;
            }
        }
        j["entries"].push_back({{"input_index", e.input_index},
                                {"id", e.id},
                                {"accepted", e.accepted},
                                {"reason", e.reason},
                                {"provider_metadata", meta}});
    }
    return j.dump(2) + "\n";
}

}  // namespace synthcxr::gen
