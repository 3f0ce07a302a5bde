#pragma once

#include <filesystem>
#include <vector>

namespace synthcxr {

/// Writes a float32 array in NPY format (v1.0, C order) so downstream
/// plotting tools can load exported maps directly.
void save_npy_f32(const std::filesystem::path& path, const std::vector<float>& data,
                  const std::vector<std::size_t>& shape);

}  // namespace synthcxr
