#include "synthcxr/dataset/split.hpp"

#include <algorithm>

#include "synthcxr/core/error.hpp"
#include "synthcxr/core/rng.hpp"

namespace synthcxr::dataset {

DatasetManifest stratified_split(const DatasetManifest& manifest, const SplitSizes& sizes,
                                 std::uint64_t seed) {
    const int total = sizes.train + sizes.val + sizes.test;
    if (total != static_cast<int>(manifest.records.size())) {
        fail("sizes do not sum: ", sizes.train, "+", sizes.val, "+", sizes.test, " = ", total,
             " but manifest has ", manifest.records.size(), " records");
    }
    for (int s : {sizes.train, sizes.val, sizes.test}) {
        if (s < 0) fail("negative split size ", s);
        if (s % 2 != 0) {
            fail("split size ", s, " infeasible under exact class balance (must be even)");
        }
    }
    for (const auto& r : manifest.records) {
        if (r.split != Split::unassigned) {
            fail("record '", r.id, "' already assigned to split ", to_string(r.split));
        }
    }

    DatasetManifest out = manifest;
    for (ClassLabel label : {ClassLabel::healthy, ClassLabel::pneumonia}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < out.records.size(); ++i) {
            if (out.records[i].label == label) idx.push_back(i);
        }
        const int need = total / 2;
        if (static_cast<int>(idx.size()) != need) {
            fail("class '", to_string(label), "' has ", idx.size(), " records but exact balance needs ",
                 need);
        }

        // Canonical order first, then a seeded Fisher-Yates shuffle, so the
        // assignment depends only on (contents, sizes, seed).
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const auto& ra = out.records[a];
            const auto& rb = out.records[b];
            return std::tie(ra.content_hash, ra.id) < std::tie(rb.content_hash, rb.id);
        });
        Rng rng(mix_seed(mix_seed(seed, "stratified_split"), to_string(label)));
        for (std::size_t i = idx.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
            std::swap(idx[i - 1], idx[j]);
        }

        std::size_t pos = 0;
        for (int i = 0; i < sizes.train / 2; ++i) out.records[idx[pos++]].split = Split::train;
        for (int i = 0; i < sizes.val / 2; ++i) out.records[idx[pos++]].split = Split::val;
        for (int i = 0; i < sizes.test / 2; ++i) out.records[idx[pos++]].split = Split::test;
    }

    std::sort(out.records.begin(), out.records.end(),
              [](const ImageRecord& a, const ImageRecord& b) { return a.id < b.id; });
    out.seed = seed;
    out.provenance = manifest.provenance +
                     strf(" | stratified_split sizes=(", sizes.train, ",", sizes.val, ",",
                          sizes.test, ") seed=", seed, " class-balanced per split");
    return out;
}

}  // namespace synthcxr::dataset
