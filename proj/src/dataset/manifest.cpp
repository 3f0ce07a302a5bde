#include "synthcxr/dataset/manifest.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <unordered_map>

#include "synthcxr/core/error.hpp"
#include "synthcxr/core/image.hpp"
#include "synthcxr/dataset/record_io.hpp"

namespace synthcxr::dataset {

using nlohmann::json;

namespace {
constexpr int kManifestVersion = 1;
}

std::string to_string(ClassLabel v) {
    return v == ClassLabel::healthy ? "healthy" : "pneumonia";
}

std::string to_string(Source v) {
    switch (v) {
        case Source::nano_banana: return "nano_banana";
        case Source::roentgen_v2: return "roentgen_v2";
        case Source::chest_xray_corpus: return "chest_xray_corpus";
        case Source::rsna_corpus: return "rsna_corpus";
        case Source::procedural_stub: return "procedural_stub";
    }
    fail("invalid source enum value");
}

std::string to_string(Split v) {
    switch (v) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
        case Split::eval_external: return "eval_external";
        case Split::unassigned: return "unassigned";
    }
    fail("invalid split enum value");
}

ClassLabel class_label_from_string(const std::string& s) {
    if (s == "healthy") return ClassLabel::healthy;
    if (s == "pneumonia") return ClassLabel::pneumonia;
    fail("unknown class label: '", s, "'");
}

Source source_from_string(const std::string& s) {
    if (s == "nano_banana") return Source::nano_banana;
    if (s == "roentgen_v2") return Source::roentgen_v2;
    if (s == "chest_xray_corpus") return Source::chest_xray_corpus;
    if (s == "rsna_corpus") return Source::rsna_corpus;
    if (s == "procedural_stub") return Source::procedural_stub;
    fail("unknown source: '", s, "'");
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    if (s == "eval_external") return Split::eval_external;
    if (s == "unassigned") return Split::unassigned;
    fail("unknown split: '", s, "'");
}

std::map<ClassLabel, int> DatasetManifest::class_counts() const {
    std::map<ClassLabel, int> counts{{ClassLabel::healthy, 0}, {ClassLabel::pneumonia, 0}};
    for (const auto& r : records) ++counts[r.label];
    return counts;
}

int DatasetManifest::count(ClassLabel label) const {
    int n = 0;
    for (const auto& r : records) {
        if (r.label == label) ++n;
    }
    return n;
}

int DatasetManifest::count(Split split) const {
    int n = 0;
    for (const auto& r : records) {
        if (r.split == split) ++n;
    }
    return n;
}

DatasetManifest DatasetManifest::subset(Split split) const {
    DatasetManifest out;
    out.provenance = provenance;
    out.seed = seed;
    for (const auto& r : records) {
        if (r.split == split) out.records.push_back(r);
    }
    return out;
}

std::string manifest_to_json(const DatasetManifest& m) {
    json j;
    j["version"] = kManifestVersion;
    j["provenance"] = m.provenance;
    j["seed"] = m.seed;
    json counts = json::object();
    for (const auto& [label, n] : m.class_counts()) counts[to_string(label)] = n;
    j["class_counts"] = counts;
    j["records"] = json::array();
    for (const auto& r : m.records) {
        j["records"].push_back({{"id", r.id},
                                {"path", r.path},
                                {"label", to_string(r.label)},
                                {"source", to_string(r.source)},
                                {"split", to_string(r.split)},
                                {"content_hash", r.content_hash}});
    }
    return j.dump(2) + "\n";
}

DatasetManifest manifest_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail("malformed manifest json: ", e.what());
    }
    if (!j.contains("version") || j["version"].get<int>() != kManifestVersion) {
        fail("unsupported manifest version");
    }
    DatasetManifest m;
    m.provenance = j.value("provenance", "");
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& rj : j.at("records")) {
        ImageRecord r;
        r.id = rj.at("id").get<std::string>();
        r.path = rj.at("path").get<std::string>();
        r.label = class_label_from_string(rj.at("label").get<std::string>());
        r.source = source_from_string(rj.at("source").get<std::string>());
        r.split = split_from_string(rj.at("split").get<std::string>());
        r.content_hash = rj.at("content_hash").get<std::string>();
        m.records.push_back(std::move(r));
    }
    if (j.contains("class_counts")) {
        const auto counts = m.class_counts();
        for (const auto& [key, value] : j["class_counts"].items()) {
            if (counts.at(class_label_from_string(key)) != value.get<int>()) {
                fail("manifest class_counts does not match record tally for '", key, "'");
            }
        }
    }
    return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail("cannot open manifest for writing: ", path.string());
    out << manifest_to_json(m);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open manifest: ", path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return manifest_from_json(text);
}

ValidationReport validate_manifest(const DatasetManifest& m) {
    ValidationReport report;
    std::unordered_map<std::string, std::string> seen_hash;  // hash -> first id
    std::unordered_map<std::string, int> seen_id;

    for (const auto& r : m.records) {
        if (++seen_id[r.id] == 2) {
            report.issues.push_back({"duplicate_id", {r.id}, "record id appears more than once"});
        }
        if (!std::filesystem::exists(r.path)) {
            report.issues.push_back({"missing_file", {r.id}, "file not found: " + r.path});
            continue;
        }
        Image img;
        try {
            img = load_record_image(r.path);
        } catch (const Error& e) {
            report.issues.push_back({"undecodable_file", {r.id}, e.what()});
            continue;
        }
        const std::string actual = content_hash_hex(img);
        if (actual != r.content_hash) {
            report.issues.push_back(
                {"hash_mismatch", {r.id}, "stored content_hash does not match decoded pixels"});
        }
        auto [it, inserted] = seen_hash.emplace(actual, r.id);
        if (!inserted) {
            report.issues.push_back({"duplicate_content",
                                     {it->second, r.id},
                                     "records decode to identical pixel content"});
        }
    }
    return report;
}

std::string validation_report_to_json(const ValidationReport& report) {
    json j;
    j["issues"] = json::array();
    for (const auto& issue : report.issues) {
        j["issues"].push_back(
            {{"kind", issue.kind}, {"record_ids", issue.record_ids}, {"message", issue.message}});
    }
    j["clean"] = report.clean();
    return j.dump(2) + "\n";
}

}  // namespace synthcxr::dataset
