#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace synthcxr {

/// 8-bit raster image, row-major, interleaved channels (1 = gray, 3 = RGB).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;

    Image() = default;
    Image(int h, int w, int c, std::uint8_t fill = 0)
        : height(h), width(w), channels(c),
          pixels(static_cast<std::size_t>(h) * w * c, fill) {}

    std::uint8_t& at(int y, int x, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool empty() const { return pixels.empty(); }

    bool operator==(const Image& other) const = default;
};

/// Decodes PNG/JPEG bytes. Throws Error on undecodable input.
Image decode_raster(const std::vector<std::uint8_t>& bytes);

/// Loads a PNG/JPEG file. Throws Error when missing or undecodable.
Image load_raster(const std::filesystem::path& path);

/// PNG-encodes an image (deterministic for identical input).
std::vector<std::uint8_t> encode_png(const Image& img);

void save_png(const Image& img, const std::filesystem::path& path);

/// SHA-256 over dimensions and decoded pixel bytes, hex-encoded. Identical
/// pixel content hashes identically regardless of the on-disk encoding.
std::string content_hash_hex(const Image& img);

/// SHA-256 of an arbitrary byte string, hex-encoded.
std::string sha256_hex(const void* data, std::size_t len);

}  // namespace synthcxr
