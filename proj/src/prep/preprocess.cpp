#include "synthcxr/prep/preprocess.hpp"

#include <cmath>

#include "synthcxr/core/error.hpp"

namespace synthcxr::prep {

AffineMap AffineMap::compose(const AffineMap& inner) const {
    AffineMap out;
    out.m00 = m00 * inner.m00 + m01 * inner.m10;
    out.m01 = m00 * inner.m01 + m01 * inner.m11;
    out.m02 = m00 * inner.m02 + m01 * inner.m12 + m02;
    out.m10 = m10 * inner.m00 + m11 * inner.m10;
    out.m11 = m10 * inner.m01 + m11 * inner.m11;
    out.m12 = m10 * inner.m02 + m11 * inner.m12 + m12;
    return out;
}

AugmentConfig AugmentConfig::identity() {
    AugmentConfig c;
    c.crop_scale_min = 1.0;
    c.crop_scale_max = 1.0;
    c.max_translate_frac = 0.0;
    c.max_shear_deg = 0.0;
    c.max_rotate_deg = 0.0;
    c.hflip_prob = 0.0;
    return c;
}

void AugmentConfig::validate() const {
    if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max && crop_scale_max <= 1.0)) {
        fail("invalid crop scale range (", crop_scale_min, ", ", crop_scale_max, ")");
    }
    if (max_translate_frac < 0.0 || max_translate_frac > 0.5) {
        fail("max_translate_frac out of [0, 0.5]: ", max_translate_frac);
    }
    if (max_shear_deg < 0.0 || max_shear_deg > 45.0) {
        fail("max_shear_deg out of [0, 45]: ", max_shear_deg);
    }
    if (max_rotate_deg < 0.0 || max_rotate_deg > 180.0) {
        fail("max_rotate_deg out of [0, 180]: ", max_rotate_deg);
    }
    if (hflip_prob < 0.0 || hflip_prob > 1.0) {
        fail("hflip_prob out of [0, 1]: ", hflip_prob);
    }
}

namespace {

// Bilinear sample at (sx, sy) for one channel, clamping neighbor indices.
// Returns false when the sample center lies outside the source rectangle.
template <typename Fetch>
bool sample_bilinear(int height, int width, double sx, double sy, const Fetch& fetch,
                     double* out) {
    if (sx < -0.5 || sx > width - 0.5 || sy < -0.5 || sy > height - 0.5) return false;
    const double fx0 = std::floor(sx);
    const double fy0 = std::floor(sy);
    const double ax = sx - fx0;
    const double ay = sy - fy0;
    const int x0 = std::clamp(static_cast<int>(fx0), 0, width - 1);
    const int x1 = std::clamp(static_cast<int>(fx0) + 1, 0, width - 1);
    const int y0 = std::clamp(static_cast<int>(fy0), 0, height - 1);
    const int y1 = std::clamp(static_cast<int>(fy0) + 1, 0, height - 1);
    const double top = fetch(y0, x0) * (1.0 - ax) + fetch(y0, x1) * ax;
    const double bot = fetch(y1, x0) * (1.0 - ax) + fetch(y1, x1) * ax;
    *out = top * (1.0 - ay) + bot * ay;
    return true;
}

AffineMap resize_map(int src_h, int src_w, int out_h, int out_w) {
    // Half-pixel convention: sx = (x + 0.5) * W/out_w - 0.5.
    AffineMap m;
    m.m00 = static_cast<double>(src_w) / out_w;
    m.m02 = 0.5 * m.m00 - 0.5;
    m.m11 = static_cast<double>(src_h) / out_h;
    m.m12 = 0.5 * m.m11 - 0.5;
    return m;
}

}  // namespace

Image warp_affine_u8(const Image& src, const AffineMap& map, int out_h, int out_w) {
    if (src.empty()) fail("warp of an empty image");
    Image out(out_h, out_w, src.channels);
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            const double sx = map.m00 * x + map.m01 * y + map.m02;
            const double sy = map.m10 * x + map.m11 * y + map.m12;
            for (int c = 0; c < src.channels; ++c) {
                double v = 0.0;
                const bool inside = sample_bilinear(
                    src.height, src.width, sx, sy,
                    [&](int yy, int xx) { return static_cast<double>(src.at(yy, xx, c)); }, &v);
                out.at(y, x, c) = inside
                                      ? static_cast<std::uint8_t>(std::lround(
                                            std::clamp(v, 0.0, 255.0)))
                                      : 0;
            }
        }
    }
    return out;
}

Image resize_bilinear(const Image& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) fail("invalid resize target ", out_h, "x", out_w);
    return warp_affine_u8(src, resize_map(src.height, src.width, out_h, out_w), out_h, out_w);
}

ModelInput resize_normalize(const Image& img, std::string record_id) {
    if (img.empty() || img.height < 1 || img.width < 1) {
        fail("resize_normalize on empty image (record '", record_id, "')");
    }
    const AffineMap map = resize_map(img.height, img.width, kInputSize, kInputSize);

    ModelInput input;
    input.record_id = std::move(record_id);
    input.chw.assign(static_cast<std::size_t>(3) * kInputSize * kInputSize, 0.0);
    for (int y = 0; y < kInputSize; ++y) {
        for (int x = 0; x < kInputSize; ++x) {
            const double sx = map.m00 * x + map.m01 * y + map.m02;
            const double sy = map.m10 * x + map.m11 * y + map.m12;
            for (int c = 0; c < 3; ++c) {
                const int src_c = img.channels == 1 ? 0 : c;
                double v = 0.0;
                sample_bilinear(
                    img.height, img.width, sx, sy,
                    [&](int yy, int xx) { return static_cast<double>(img.at(yy, xx, src_c)); },
                    &v);
                input.chw[(static_cast<std::size_t>(c) * kInputSize + y) * kInputSize + x] =
                    (v / 255.0 - kChannelMean[c]) / kChannelStd[c];
            }
        }
    }
    return input;
}

ModelInput normalize_only(const Image& img224, std::string record_id) {
    if (img224.height != kInputSize || img224.width != kInputSize) {
        fail("normalize_only expects a ", kInputSize, "x", kInputSize, " raster, got ",
             img224.height, "x", img224.width);
    }
    ModelInput input;
    input.record_id = std::move(record_id);
    input.chw.assign(static_cast<std::size_t>(3) * kInputSize * kInputSize, 0.0);
    for (int c = 0; c < 3; ++c) {
        const int src_c = img224.channels == 1 ? 0 : c;
        for (int y = 0; y < kInputSize; ++y) {
            for (int x = 0; x < kInputSize; ++x) {
                const double v = static_cast<double>(img224.at(y, x, src_c));
                input.chw[(static_cast<std::size_t>(c) * kInputSize + y) * kInputSize + x] =
                    (v / 255.0 - kChannelMean[c]) / kChannelStd[c];
            }
        }
    }
    return input;
}

Image augment(const Image& img, const AugmentConfig& config, Rng& rng) {
    config.validate();
    if (img.height < 1 || img.width < 1) fail("augment on empty image");

    const double out_side = kInputSize;

    // Draw order is fixed; every draw happens regardless of range width so
    // the stream stays aligned across configs.
    const double scale = rng.uniform(config.crop_scale_min, config.crop_scale_max);
    const double crop_w = img.width * std::sqrt(scale);
    const double crop_h = img.height * std::sqrt(scale);
    const double crop_x = rng.uniform(0.0, img.width - crop_w);
    const double crop_y = rng.uniform(0.0, img.height - crop_h);
    const double tx = rng.uniform(-config.max_translate_frac, config.max_translate_frac) * out_side;
    const double ty = rng.uniform(-config.max_translate_frac, config.max_translate_frac) * out_side;
    const double shear_rad =
        rng.uniform(-config.max_shear_deg, config.max_shear_deg) * M_PI / 180.0;
    const bool flip = rng.bernoulli(config.hflip_prob);
    const double rot_rad =
        rng.uniform(-config.max_rotate_deg, config.max_rotate_deg) * M_PI / 180.0;

    // Stage 1: crop rect -> 224 output (output coord -> source coord).
    AffineMap crop;
    crop.m00 = crop_w / out_side;
    crop.m02 = 0.5 * crop.m00 - 0.5 + crop_x;
    crop.m11 = crop_h / out_side;
    crop.m12 = 0.5 * crop.m11 - 0.5 + crop_y;

    const double ctr = (out_side - 1.0) / 2.0;

    // Stage 2 inverse: undo translate then x-shear about the center.
    // forward: x' = (x - ctr) + s*(y - ctr) + ctr + tx, y' = y + ty
    // inverse: y = y' - ty; x = x' - tx - s*(y' - ty - ctr)
    AffineMap affine;
    {
        const double s = std::tan(shear_rad);
        affine.m00 = 1.0;
        affine.m01 = -s;
        affine.m02 = -tx + s * ty + s * ctr;
        affine.m10 = 0.0;
        affine.m11 = 1.0;
        affine.m12 = -ty;
    }

    // Stage 3 (horizontal flip) is applied as an exact integer column mirror
    // after sampling. Reflection conjugates rotation, so sampling with the
    // negated angle and mirroring afterwards reproduces flip-then-rotate.
    const double effective_rot = flip ? -rot_rad : rot_rad;

    // Stage 4 inverse: rotate by -theta about the center.
    AffineMap rot;
    {
        const double c = std::cos(effective_rot);
        const double s = std::sin(effective_rot);
        rot.m00 = c;
        rot.m01 = s;
        rot.m02 = ctr - c * ctr - s * ctr;
        rot.m10 = -s;
        rot.m11 = c;
        rot.m12 = ctr + s * ctr - c * ctr;
    }

    const AffineMap total = crop.compose(affine.compose(rot));
    Image out = warp_affine_u8(img, total, kInputSize, kInputSize);
    if (flip) {
        Image mirrored(out.height, out.width, out.channels);
        for (int y = 0; y < out.height; ++y) {
            for (int x = 0; x < out.width; ++x) {
                for (int c = 0; c < out.channels; ++c) {
                    mirrored.at(y, x, c) = out.at(y, out.width - 1 - x, c);
                }
            }
        }
        out = std::move(mirrored);
    }
    return out;
}

}  // namespace synthcxr::prep
