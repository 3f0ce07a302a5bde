#pragma once

#include <filesystem>

#include "synthcxr/core/image.hpp"

namespace synthcxr::dataset {

/// Loads the image behind a manifest record. Medical-format files (.dcm) go
/// through the decoder seam and come back as 8-bit grayscale; everything else
/// is decoded as PNG/JPEG.
Image load_record_image(const std::filesystem::path& path);

}  // namespace synthcxr::dataset
