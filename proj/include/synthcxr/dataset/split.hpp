#pragma once

#include <cstdint>

#include "synthcxr/dataset/manifest.hpp"

namespace synthcxr::dataset {

struct SplitSizes {
    int train = 220;
    int val = 30;
    int test = 50;
};

/// Assigns train/val/test splits with exact class balance in every split
/// (so each split takes size/2 records per class; odd sizes are infeasible).
/// The assignment is a pure function of (record content hashes, sizes, seed):
/// records are ordered by (content_hash, id) before the seeded shuffle, so
/// the incoming record order never matters. Returns a new manifest sorted by
/// id; the input must be entirely unassigned.
DatasetManifest stratified_split(const DatasetManifest& manifest, const SplitSizes& sizes,
                                 std::uint64_t seed);

}  // namespace synthcxr::dataset
