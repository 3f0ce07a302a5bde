#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace synthcxr::dataset {

enum class ClassLabel { healthy, pneumonia };

enum class Source {
    nano_banana,
    roentgen_v2,
    chest_xray_corpus,
    rsna_corpus,
    procedural_stub,
};

enum class Split { train, val, test, eval_external, unassigned };

std::string to_string(ClassLabel v);
std::string to_string(Source v);
std::string to_string(Split v);
ClassLabel class_label_from_string(const std::string& s);
Source source_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct ImageRecord {
    std::string id;
    std::string path;
    ClassLabel label = ClassLabel::healthy;
    Source source = Source::procedural_stub;
    Split split = Split::unassigned;
    std::string content_hash;  // hex sha256 over decoded pixels

    bool operator==(const ImageRecord&) const = default;
};

/// Labeled image inventory exchanged between all pipeline stages. Immutable
/// by convention after construction; operations return new manifests.
struct DatasetManifest {
    std::string provenance;
    std::uint64_t seed = 0;
    std::vector<ImageRecord> records;

    std::map<ClassLabel, int> class_counts() const;
    int count(ClassLabel label) const;
    int count(Split split) const;

    /// Records with the given split assignment, in manifest order.
    DatasetManifest subset(Split split) const;

    bool operator==(const DatasetManifest&) const = default;
};

std::string manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const std::string& text);

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

struct ValidationIssue {
    std::string kind;  // missing_file | undecodable_file | duplicate_content |
                       // hash_mismatch | class_count_mismatch | duplicate_id
    std::vector<std::string> record_ids;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool clean() const { return issues.empty(); }
};

/// Report-only check: missing files, undecodable files, stale or duplicate
/// content hashes, duplicate ids. Never modifies the manifest.
ValidationReport validate_manifest(const DatasetManifest& m);

std::string validation_report_to_json(const ValidationReport& report);

}  // namespace synthcxr::dataset
