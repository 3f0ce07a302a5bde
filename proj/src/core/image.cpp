#include "synthcxr/core/image.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstring>
#include <fstream>

#include "synthcxr/core/error.hpp"

namespace synthcxr {

std::string sha256_hex(const void* data, std::size_t len) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (EVP_Digest(data, len, md, &md_len, EVP_sha256(), nullptr) != 1) {
        fail("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out(md_len * 2, '0');
    for (unsigned int i = 0; i < md_len; ++i) {
        out[2 * i] = hex[md[i] >> 4];
        out[2 * i + 1] = hex[md[i] & 0xf];
    }
    return out;
}

std::string content_hash_hex(const Image& img) {
    std::vector<std::uint8_t> buf;
    buf.reserve(16 + img.pixels.size());
    const char magic[4] = {'I', 'M', 'G', '1'};
    buf.insert(buf.end(), magic, magic + 4);
    auto push_u32 = [&buf](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
    };
    push_u32(static_cast<std::uint32_t>(img.height));
    push_u32(static_cast<std::uint32_t>(img.width));
    push_u32(static_cast<std::uint32_t>(img.channels));
    buf.insert(buf.end(), img.pixels.begin(), img.pixels.end());
    return sha256_hex(buf.data(), buf.size());
}

void save_png(const Image& img, const std::filesystem::path& path) {
    auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open for writing: ", path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail("short write: ", path.string());
}

}  // namespace synthcxr
