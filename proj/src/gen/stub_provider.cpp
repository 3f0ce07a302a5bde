#include "synthcxr/gen/stub_provider.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "synthcxr/core/rng.hpp"

namespace synthcxr::gen {

using dataset::ClassLabel;
using nlohmann::json;

namespace {

struct Ellipse {
    double cx, cy, rx, ry;

    double field(double x, double y) const {
        const double dx = (x - cx) / rx;
        const double dy = (y - cy) / ry;
        return dx * dx + dy * dy;
    }
    bool contains(double x, double y) const { return field(x, y) <= 1.0; }
};

void add_clamped(Image& img, int y, int x, double delta) {
    const double v = static_cast<double>(img.at(y, x, 0)) + delta;
    img.at(y, x, 0) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

RawImage render_one(ClassLabel target, std::uint64_t stream) {
    Rng rng(stream);

    const int w = 224 + static_cast<int>(rng.uniform_int(25));       // 224..248
    const int h = 292 + static_cast<int>(rng.uniform_int(29));       // 292..320, portrait
    Image img(h, w, 1, 18);

    const Ellipse torso{w * (0.5 + rng.uniform(-0.02, 0.02)), h * 0.46, w * 0.44, h * 0.40};
    const double lung_dx = w * rng.uniform(0.16, 0.19);
    const double lung_cy = h * rng.uniform(0.32, 0.36);
    const Ellipse lungs[2] = {
        {torso.cx - lung_dx, lung_cy, w * 0.125, h * 0.20},
        {torso.cx + lung_dx, lung_cy, w * 0.125, h * 0.20},
    };
    const Ellipse heart{torso.cx - w * 0.04, h * 0.47, w * 0.11, h * 0.085};
    const double rib_phase = rng.uniform(0.0, 2.0 * M_PI);
    const double rib_period = rng.uniform(20.0, 26.0);

    // Pneumonia cases get 1-2 bright opacity blobs inside a lung field; the
    // geometry stays well above the watermark band so cropping never touches
    // the discriminative region.
    std::vector<Ellipse> blobs;
    if (target == ClassLabel::pneumonia) {
        const int n_blobs = 1 + static_cast<int>(rng.uniform_int(2));
        for (int b = 0; b < n_blobs; ++b) {
            const Ellipse& lung = lungs[rng.uniform_int(2)];
            Ellipse blob;
            blob.rx = lung.rx * rng.uniform(0.45, 0.7);
            blob.ry = lung.ry * rng.uniform(0.35, 0.55);
            blob.cx = lung.cx + rng.uniform(-0.3, 0.3) * lung.rx;
            blob.cy = lung.cy + rng.uniform(-0.35, 0.35) * lung.ry;
            blobs.push_back(blob);
        }
    }

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double fx = x, fy = y;
            double v = 18.0;
            if (torso.contains(fx, fy)) {
                v = 112.0;
                for (const Ellipse& lung : lungs) {
                    if (lung.contains(fx, fy)) {
                        v = 52.0;
                        const double rib =
                            std::sin(fy * 2.0 * M_PI / rib_period + rib_phase);
                        if (rib > 0.0) v += 26.0 * rib;
                    }
                }
                if (heart.contains(fx, fy)) v = std::max(v, 128.0);
            }
            for (const Ellipse& blob : blobs) {
                const double field = blob.field(fx, fy);
                if (field < 4.0) v += 85.0 * std::exp(-1.5 * field);
            }
            v += rng.normal(0.0, 5.0);
            img.at(y, x, 0) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }

    // Watermark band across the lower rows, as delivered by the remote
    // service; the curation crop is what removes it.
    const int band_top = static_cast<int>(h * 0.88);
    for (int y = band_top; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const bool checker = ((x / 8) + (y / 8)) % 2 == 0;
            img.at(y, x, 0) = checker ? 200 : 40;
        }
    }
    for (int x = 0; x < w; ++x) add_clamped(img, band_top, x, 55.0);

    json meta;
    meta["provider"] = "stub";
    meta["class"] = dataset::to_string(target);
    meta["canvas_h"] = h;
    meta["canvas_w"] = w;
    meta["stream"] = stream;
    meta["blobs"] = json::array();
    for (const Ellipse& b : blobs) {
        meta["blobs"].push_back({{"cx", b.cx}, {"cy", b.cy}, {"rx", b.rx}, {"ry", b.ry}});
    }

    RawImage out;
    out.pixels = std::move(img);
    out.provider_metadata = meta.dump();
    return out;
}

}  // namespace

std::vector<RawImage> StubGenerationProvider::generate(const GenerationRequest& request) {
    if (request.count < 1) fail("stub provider: count must be >= 1");
    std::vector<RawImage> out;
    out.reserve(static_cast<std::size_t>(request.count));
    for (int i = 0; i < request.count; ++i) {
        const std::uint64_t stream =
            mix_seed(mix_seed(mix_seed(seed_, request.session_tag),
                              dataset::to_string(request.target_class)),
                     counter_++);
        out.push_back(render_one(request.target_class, stream));
    }
    return out;
}

}  // namespace synthcxr::gen
