#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "synthcxr/core/error.hpp"

namespace synthcxr::repr {

/// n x d penultimate-layer features with their record ids.
struct FeatureMatrix {
    int n = 0;
    int d = 0;
    std::vector<double> rows;  // row-major n*d
    std::vector<std::string> record_ids;
    std::string model_tag;

    double at(int i, int j) const { return rows[static_cast<std::size_t>(i) * d + j]; }
    double& at(int i, int j) { return rows[static_cast<std::size_t>(i) * d + j]; }

    void validate() const {
        if (n < 0 || d < 0 || rows.size() != static_cast<std::size_t>(n) * d) {
            fail("feature matrix shape mismatch");
        }
        if (!record_ids.empty() && static_cast<int>(record_ids.size()) != n) {
            fail("feature matrix has ", record_ids.size(), " ids for ", n, " rows");
        }
        for (double v : rows) {
            if (!std::isfinite(v)) fail("feature matrix contains a non-finite entry");
        }
    }
};

}  // namespace synthcxr::repr
