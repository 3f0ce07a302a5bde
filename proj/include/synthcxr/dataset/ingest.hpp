#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "synthcxr/dataset/dicom.hpp"
#include "synthcxr/dataset/manifest.hpp"

namespace synthcxr::dataset {

struct SkipEntry {
    std::string path;
    std::string reason;
};

struct IngestResult {
    DatasetManifest manifest;
    std::vector<SkipEntry> skipped;
};

/// Walks the corpus layout (split directories each holding NORMAL/ and
/// PNEUMONIA/ class directories), merging every partition into a single
/// eval_external manifest. Unreadable images land in the skip report; a
/// missing root or an empty result is fatal.
IngestResult ingest_chest_xray_folder(const std::filesystem::path& root);

/// Reads the labels table (header with image-id and class columns), maps
/// "Lung Opacity" to pneumonia and "Normal" to healthy, excludes
/// "No Lung Opacity / Not Normal", and decodes {id}.dcm from images_dir.
/// Unknown class strings are fatal; ids without an image file are skipped.
/// Duplicate ids collapse to one record.
IngestResult ingest_rsna(const std::filesystem::path& images_dir,
                         const std::filesystem::path& labels_table,
                         const DicomDecoder& decoder);

inline IngestResult ingest_rsna(const std::filesystem::path& images_dir,
                                const std::filesystem::path& labels_table) {
    MinimalDicomDecoder decoder;
    return ingest_rsna(images_dir, labels_table, decoder);
}

/// Ingests a pre-generated image folder with healthy/ and pneumonia/
/// subdirectories (e.g. an externally produced synthetic set) as an
/// unassigned-split manifest with the given source tag.
IngestResult ingest_class_folder(const std::filesystem::path& root, Source source);

std::string skip_report_to_json(const std::vector<SkipEntry>& skipped);

}  // namespace synthcxr::dataset
