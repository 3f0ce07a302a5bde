#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "synthcxr/core/image.hpp"

namespace synthcxr::dataset {

/// Decoded medical-format pixel data: a single-frame 2-D unsigned-integer
/// array plus its photometric interpretation.
struct DicomPixelData {
    int rows = 0;
    int cols = 0;
    int bits_allocated = 0;
    int bits_stored = 0;
    bool signed_values = false;
    std::string photometric;  // MONOCHROME1 (white-is-low) or MONOCHROME2
    std::vector<std::int32_t> values;  // row-major, rows*cols
};

/// Interchangeable medical-format decoder. The pipeline depends only on this
/// contract, so a full-featured decoder can be swapped in without touching
/// ingestion.
class DicomDecoder {
public:
    virtual ~DicomDecoder() = default;
    virtual DicomPixelData decode(const std::filesystem::path& path) const = 0;
};

/// Built-in decoder for uncompressed single-frame grayscale files with
/// implicit or explicit VR little-endian transfer syntax (covers the RSNA
/// corpus). Compressed transfer syntaxes raise an error naming the syntax.
class MinimalDicomDecoder : public DicomDecoder {
public:
    DicomPixelData decode(const std::filesystem::path& path) const override;
    DicomPixelData decode_bytes(const std::vector<std::uint8_t>& bytes,
                                const std::string& origin) const;
};

/// Maps decoded values to 8-bit grayscale by linear rescale of the stored
/// value range, inverting when the photometric interpretation is white-is-low.
Image dicom_to_gray8(const DicomPixelData& px);

}  // namespace synthcxr::dataset
