#pragma once

#include <array>
#include <string>
#include <vector>

#include "synthcxr/core/image.hpp"
#include "synthcxr/core/rng.hpp"

namespace synthcxr::prep {

/// Model input side length; every network input is 3 x kInputSize x kInputSize.
inline constexpr int kInputSize = 224;

/// Canonical natural-image-corpus normalization constants.
inline constexpr std::array<double, 3> kChannelMean{0.485, 0.456, 0.406};
inline constexpr std::array<double, 3> kChannelStd{0.229, 0.224, 0.225};

/// Normalized network input, CHW layout, 3 x 224 x 224.
struct ModelInput {
    std::vector<double> chw;
    std::string record_id;
};

/// Affine map from output pixel centers to source pixel centers:
/// sx = m00*x + m01*y + m02, sy = m10*x + m11*y + m12.
struct AffineMap {
    double m00 = 1, m01 = 0, m02 = 0;
    double m10 = 0, m11 = 1, m12 = 0;

    /// this-after-inner: applies `inner` to the coordinate first.
    AffineMap compose(const AffineMap& inner) const;
};

/// Training-time augmentation parameters. Ranges are magnitudes; the
/// identity() configuration reproduces a plain resize exactly.
struct AugmentConfig {
    double crop_scale_min = 0.8;       // area fraction for random resized crop
    double crop_scale_max = 1.0;
    double max_translate_frac = 0.05;  // of the output side, per axis
    double max_shear_deg = 5.0;        // x-shear
    double max_rotate_deg = 10.0;
    double hflip_prob = 0.5;

    static AugmentConfig identity();
    void validate() const;
};

/// Bilinear warp with edge clamping; samples outside the source rectangle
/// fill with 0. Used by both the resize and augmentation paths so they share
/// one sampling convention (half-pixel centers).
Image warp_affine_u8(const Image& src, const AffineMap& map, int out_h, int out_w);

/// Plain bilinear resize (no aspect preservation).
Image resize_bilinear(const Image& src, int out_h, int out_w);

/// Resize to 224x224 in floating point (no 8-bit quantization), replicate
/// grayscale to 3 channels, and normalize per channel: (x/255 - mean)/std.
ModelInput resize_normalize(const Image& img, std::string record_id = "");

/// Converts an already-224x224 raster to a normalized ModelInput.
ModelInput normalize_only(const Image& img224, std::string record_id = "");

/// Applies, in order: random resized crop, random affine (translate + shear),
/// horizontal flip, rotation — composed into a single warp. Output is a
/// kInputSize x kInputSize raster with the input's channel count. The rng
/// stream is always advanced by the same number of draws, so configs with
/// degenerate ranges stay stream-compatible.
Image augment(const Image& img, const AugmentConfig& config, Rng& rng);

}  // namespace synthcxr::prep
