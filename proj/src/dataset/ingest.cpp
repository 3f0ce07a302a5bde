#include "synthcxr/dataset/ingest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "synthcxr/core/error.hpp"
#include "synthcxr/dataset/record_io.hpp"

namespace synthcxr::dataset {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string upper(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return s;
}

bool looks_like_image(const fs::path& p) {
    static const std::set<std::string> kExts = {".png", ".jpg", ".jpeg", ".bmp", ".dcm"};
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return kExts.count(ext) > 0;
}

std::string relative_id(const fs::path& file, const fs::path& root) {
    return fs::relative(file, root).generic_string();
}

void sort_by_id(DatasetManifest& m) {
    std::sort(m.records.begin(), m.records.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
}

// Minimal CSV reader: header row + rows, handles quoted fields.
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open labels table: ", path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cur.push_back(c);
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        fields.push_back(cur);
        rows.push_back(std::move(fields));
    }
    return rows;
}

int find_column(const std::vector<std::string>& header,
                const std::vector<std::string>& candidates) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        for (const auto& cand : candidates) {
            if (upper(header[i]) == upper(cand)) return static_cast<int>(i);
        }
    }
    return -1;
}

}  // namespace

IngestResult ingest_chest_xray_folder(const fs::path& root) {
    if (!fs::exists(root) || !fs::is_directory(root)) {
        fail("corpus root not found: ", root.string());
    }

    IngestResult result;
    std::vector<std::pair<fs::path, ClassLabel>> class_dirs;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const std::string name = upper(entry.path().filename().string());
        if (name == "NORMAL") class_dirs.emplace_back(entry.path(), ClassLabel::healthy);
        else if (name == "PNEUMONIA") class_dirs.emplace_back(entry.path(), ClassLabel::pneumonia);
    }
    std::sort(class_dirs.begin(), class_dirs.end());

    for (const auto& [dir, label] : class_dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && looks_like_image(entry.path())) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            Image img;
            try {
                img = load_record_image(file);
            } catch (const Error& e) {
                result.skipped.push_back({file.string(), e.what()});
                continue;
            }
            ImageRecord r;
            r.id = relative_id(file, root);
            r.path = fs::absolute(file).string();
            r.label = label;
            r.source = Source::chest_xray_corpus;
            r.split = Split::eval_external;
            r.content_hash = content_hash_hex(img);
            result.manifest.records.push_back(std::move(r));
        }
    }

    if (result.manifest.records.empty()) fail("no records ingested from ", root.string());
    sort_by_id(result.manifest);
    result.manifest.provenance =
        strf("ingest_chest_xray_folder root=", root.string(), " all partitions merged");
    return result;
}

IngestResult ingest_rsna(const fs::path& images_dir, const fs::path& labels_table,
                         const DicomDecoder& decoder) {
    if (!fs::exists(images_dir) || !fs::is_directory(images_dir)) {
        fail("images directory not found: ", images_dir.string());
    }
    const auto rows = read_csv(labels_table);
    if (rows.size() < 2) fail("labels table has no data rows: ", labels_table.string());

    const int id_col = find_column(rows[0], {"patientId", "image_id", "imageId", "id"});
    const int class_col = find_column(rows[0], {"class", "label"});
    if (id_col < 0) fail("labels table missing an image-id column: ", labels_table.string());
    if (class_col < 0) fail("labels table missing a class column: ", labels_table.string());

    // First pass: map every id to a label, collapsing duplicates and failing
    // on unknown class strings or conflicting duplicates.
    std::map<std::string, ClassLabel> by_id;
    std::set<std::string> excluded;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (static_cast<int>(row.size()) <= std::max(id_col, class_col)) {
            fail("labels table row ", i + 1, " has too few columns");
        }
        const std::string& id = row[id_col];
        const std::string& cls = row[class_col];
        if (cls == "No Lung Opacity / Not Normal") {
            excluded.insert(id);
            continue;
        }
        ClassLabel label;
        if (cls == "Lung Opacity") label = ClassLabel::pneumonia;
        else if (cls == "Normal") label = ClassLabel::healthy;
        else fail("unknown class string '", cls, "' at row ", i + 1, " (id=", id, ")");
        auto [it, inserted] = by_id.emplace(id, label);
        if (!inserted && it->second != label) {
            fail("conflicting classes for duplicate id '", id, "' at row ", i + 1);
        }
    }

    IngestResult result;
    for (const auto& [id, label] : by_id) {
        const fs::path file = images_dir / (id + ".dcm");
        if (!fs::exists(file)) {
            result.skipped.push_back({file.string(), "listed in labels table but no image file"});
            continue;
        }
        Image img;
        try {
            img = dicom_to_gray8(decoder.decode(file));
        } catch (const Error& e) {
            result.skipped.push_back({file.string(), e.what()});
            continue;
        }
        ImageRecord r;
        r.id = id;
        r.path = fs::absolute(file).string();
        r.label = label;
        r.source = Source::rsna_corpus;
        r.split = Split::eval_external;
        r.content_hash = content_hash_hex(img);
        result.manifest.records.push_back(std::move(r));
    }

    if (result.manifest.records.empty()) {
        fail("no records ingested from ", images_dir.string());
    }
    sort_by_id(result.manifest);
    result.manifest.provenance =
        strf("ingest_rsna images=", images_dir.string(), " labels=", labels_table.string(),
             " third class excluded (", excluded.size(),
             " ids); duplicate table ids collapsed to one record");
    return result;
}

IngestResult ingest_class_folder(const fs::path& root, Source source) {
    if (!fs::exists(root) || !fs::is_directory(root)) {
        fail("folder not found: ", root.string());
    }
    IngestResult result;
    for (ClassLabel label : {ClassLabel::healthy, ClassLabel::pneumonia}) {
        const fs::path dir = root / to_string(label);
        if (!fs::exists(dir)) continue;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && looks_like_image(entry.path())) {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& file : files) {
            Image img;
            try {
                img = load_record_image(file);
            } catch (const Error& e) {
                result.skipped.push_back({file.string(), e.what()});
                continue;
            }
            ImageRecord r;
            r.id = relative_id(file, root);
            r.path = fs::absolute(file).string();
            r.label = label;
            r.source = source;
            r.split = Split::unassigned;
            r.content_hash = content_hash_hex(img);
            result.manifest.records.push_back(std::move(r));
        }
    }
    if (result.manifest.records.empty()) fail("no records ingested from ", root.string());
    sort_by_id(result.manifest);
    result.manifest.provenance =
        strf("ingest_class_folder root=", root.string(), " source=", to_string(source));
    return result;
}

std::string skip_report_to_json(const std::vector<SkipEntry>& skipped) {
    json j;
    j["skipped"] = json::array();
    for (const auto& s : skipped) j["skipped"].push_back({{"path", s.path}, {"reason", s.reason}});
    j["count"] = skipped.size();
    return j.dump(2) + "\n";
}

}  // namespace synthcxr::dataset
