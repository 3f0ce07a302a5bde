#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "synthcxr/dataset/manifest.hpp"
#include "synthcxr/gen/provider.hpp"

namespace synthcxr::gen {

/// Keeps the top ceil(H * (1 - fraction)) rows; columns and channels
/// untouched, retained pixels bit-identical. fraction must be in [0, 1).
Image crop_lower_fraction(const Image& image, double fraction);

struct CurationOptions {
    double crop_fraction = 0.30;
    /// Maximum allowed |healthy - pneumonia| count difference post-curation.
    int balance_tolerance = 0;
    dataset::Source source = dataset::Source::nano_banana;
};

struct CurationEntry {
    int input_index = 0;
    std::string id;  // empty when rejected
    bool accepted = false;
    std::string reason;  // rejection reason, empty when accepted
    std::string provider_metadata;
};

struct CurationResult {
    dataset::DatasetManifest manifest;
    std::vector<CurationEntry> log;
};

/// Crops every raw image, rejects non-portrait inputs and exact post-crop
/// pixel duplicates, writes survivors to {store_root}/{class}/{id}.png and
/// assembles an unassigned-split manifest. Fails when the surviving classes
/// are imbalanced beyond the tolerance.
CurationResult curate_dataset(const std::vector<std::pair<RawImage, dataset::ClassLabel>>& raw,
                              const CurationOptions& options, std::uint64_t seed,
                              const std::filesystem::path& store_root);

std::string curation_log_to_json(const std::vector<CurationEntry>& log);

}  // namespace synthcxr::gen
