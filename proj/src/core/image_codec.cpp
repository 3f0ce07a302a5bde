// OpenCV is confined to this translation unit; the rest of the project sees
// only the plain Image struct.
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <fstream>

#include "synthcxr/core/error.hpp"
#include "synthcxr/core/image.hpp"

namespace synthcxr {

namespace {

Image from_mat(const cv::Mat& mat) {
    if (mat.empty()) fail("decode produced an empty image");
    cv::Mat m = mat;
    if (m.depth() != CV_8U) {
        cv::Mat tmp;
        double minv = 0.0, maxv = 0.0;
        cv::minMaxLoc(m, &minv, &maxv);
        double scale = maxv > minv ? 255.0 / (maxv - minv) : 1.0;
        m.convertTo(tmp, CV_8U, scale, -minv * scale);
        m = tmp;
    }
    int ch = m.channels();
    if (ch != 1 && ch != 3 && ch != 4) fail("unsupported channel count: ", ch);
    Image img(m.rows, m.cols, ch == 1 ? 1 : 3);
    for (int y = 0; y < m.rows; ++y) {
        const std::uint8_t* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            if (ch == 1) {
                img.at(y, x, 0) = row[x];
            } else {
                // OpenCV decodes as BGR(A); store as RGB.
                img.at(y, x, 0) = row[x * ch + 2];
                img.at(y, x, 1) = row[x * ch + 1];
                img.at(y, x, 2) = row[x * ch + 0];
            }
        }
    }
    return img;
}

cv::Mat to_mat(const Image& img) {
    if (img.channels != 1 && img.channels != 3) {
        fail("unsupported channel count for encode: ", img.channels);
    }
    cv::Mat m(img.height, img.width, img.channels == 1 ? CV_8UC1 : CV_8UC3);
    for (int y = 0; y < img.height; ++y) {
        std::uint8_t* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < img.width; ++x) {
            if (img.channels == 1) {
                row[x] = img.at(y, x, 0);
            } else {
                row[x * 3 + 0] = img.at(y, x, 2);
                row[x * 3 + 1] = img.at(y, x, 1);
                row[x * 3 + 2] = img.at(y, x, 0);
            }
        }
    }
    return m;
}

}  // namespace

Image decode_raster(const std::vector<std::uint8_t>& bytes) {
    cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat mat = cv::imdecode(raw, cv::IMREAD_UNCHANGED);
    if (mat.empty()) fail("undecodable raster data (", bytes.size(), " bytes)");
    return from_mat(mat);
}

Image load_raster(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open image file: ", path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.empty()) fail("empty image file: ", path.string());
    try {
        return decode_raster(bytes);
    } catch (const Error&) {
        fail("undecodable image file: ", path.string());
    }
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.empty()) fail("cannot encode an empty image");
    std::vector<std::uint8_t> out;
    if (!cv::imencode(".png", to_mat(img), out)) fail("png encode failed");
    return out;
}

}  // namespace synthcxr
