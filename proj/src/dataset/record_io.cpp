#include "synthcxr/dataset/record_io.hpp"

#include <algorithm>

#include "synthcxr/dataset/dicom.hpp"

namespace synthcxr::dataset {

namespace {
std::string lower_ext(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}
}  // namespace

Image load_record_image(const std::filesystem::path& path) {
    if (lower_ext(path) == ".dcm") {
        MinimalDicomDecoder decoder;
        return dicom_to_gray8(decoder.decode(path));
    }
    return load_raster(path);
}

}  // namespace synthcxr::dataset
