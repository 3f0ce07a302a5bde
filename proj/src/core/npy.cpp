#include "synthcxr/core/npy.hpp"

#include <cstring>
#include <fstream>

#include "synthcxr/core/error.hpp"

namespace synthcxr {

void save_npy_f32(const std::filesystem::path& path, const std::vector<float>& data,
                  const std::vector<std::size_t>& shape) {
    std::size_t count = 1;
    for (std::size_t s : shape) count *= s;
    if (count != data.size()) fail("npy shape does not match data size");

    std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        dict += std::to_string(shape[i]);
        if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
        if (i + 1 < shape.size()) dict += " ";
    }
    dict += "), }";
    // Header (magic + version + length field + dict) padded to 64 bytes.
    std::size_t unpadded = 10 + dict.size() + 1;
    std::size_t padded = (unpadded + 63) / 64 * 64;
    dict.append(padded - unpadded, ' ');
    dict.push_back('\n');

    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open for writing: ", path.string());
    const char magic[8] = {'\x93', 'N', 'U', 'M', 'P', 'Y', '\x01', '\x00'};
    out.write(magic, 8);
    std::uint16_t hlen = static_cast<std::uint16_t>(dict.size());
    char lenbuf[2] = {static_cast<char>(hlen & 0xff), static_cast<char>(hlen >> 8)};
    out.write(lenbuf, 2);
    out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!out) fail("short write: ", path.string());
}

}  // namespace synthcxr
