#include "synthcxr/dataset/dicom.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "synthcxr/core/error.hpp"

namespace synthcxr::dataset {

namespace {

constexpr const char* kImplicitLE = "1.2.840.10008.1.2";
constexpr const char* kExplicitLE = "1.2.840.10008.1.2.1";

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;
    std::string origin;

    bool eof() const { return pos >= size; }

    void require(std::size_t n, const char* what) const {
        if (pos + n > size) {
            fail("truncated dicom (", origin, "): while reading ", what);
        }
    }

    std::uint16_t u16() {
        require(2, "u16");
        std::uint16_t v = static_cast<std::uint16_t>(data[pos] | (data[pos + 1] << 8));
        pos += 2;
        return v;
    }

    std::uint32_t u32() {
        require(4, "u32");
        std::uint32_t v = static_cast<std::uint32_t>(data[pos]) |
                          (static_cast<std::uint32_t>(data[pos + 1]) << 8) |
                          (static_cast<std::uint32_t>(data[pos + 2]) << 16) |
                          (static_cast<std::uint32_t>(data[pos + 3]) << 24);
        pos += 4;
        return v;
    }

    std::string bytes(std::size_t n) {
        require(n, "value");
        std::string v(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return v;
    }

    void skip(std::size_t n) {
        require(n, "skip");
        pos += n;
    }
};

bool is_short_vr(const std::string& vr) {
    // Explicit VR: these carry a 16-bit length; all others use the long form.
    static const char* kShort[] = {"AE", "AS", "AT", "CS", "DA", "DS", "DT", "FL", "FD",
                                   "IS", "LO", "LT", "PN", "SH", "SL", "SS", "ST", "TM",
                                   "UI", "UL", "US"};
    return std::find(std::begin(kShort), std::end(kShort), vr) != std::end(kShort);
}

std::string trim_uid(std::string s) {
    while (!s.empty() && (s.back() == '\0' || s.back() == ' ')) s.pop_back();
    return s;
}

struct RawElement {
    std::uint16_t group = 0;
    std::uint16_t element = 0;
    std::uint32_t length = 0;
    std::size_t value_pos = 0;  // offset of the value in the buffer
};

// Skips an undefined-length element (sequence) by scanning for its
// delimiter, honoring nesting.
void skip_undefined_length(Reader& r) {
    int depth = 1;
    while (depth > 0) {
        std::uint16_t g = r.u16();
        std::uint16_t e = r.u16();
        std::uint32_t len = r.u32();
        if (g == 0xFFFE && e == 0xE0DD) {
            --depth;
        } else if (g == 0xFFFE && e == 0xE000 && len == 0xFFFFFFFF) {
            ++depth;
        } else if (len == 0xFFFFFFFF) {
            ++depth;
        } else {
            r.skip(len);
        }
    }
}

RawElement read_element(Reader& r, bool explicit_vr) {
    RawElement el;
    el.group = r.u16();
    el.element = r.u16();
    if (explicit_vr && el.group != 0xFFFE) {
        std::string vr = r.bytes(2);
        if (is_short_vr(vr)) {
            el.length = r.u16();
        } else {
            r.skip(2);  // reserved
            el.length = r.u32();
        }
    } else {
        el.length = r.u32();
    }
    el.value_pos = r.pos;
    if (el.length != 0xFFFFFFFF) r.require(el.length, "element value");
    return el;
}

int parse_us(const Reader& r, const RawElement& el) {
    if (el.length < 2) fail("dicom (", r.origin, "): short US value");
    return r.data[el.value_pos] | (r.data[el.value_pos + 1] << 8);
}

}  // namespace

DicomPixelData MinimalDicomDecoder::decode_bytes(const std::vector<std::uint8_t>& bytes,
                                                 const std::string& origin) const {
    Reader r{bytes.data(), bytes.size(), 0, origin};

    // 128-byte preamble + "DICM" is standard; some writers omit it.
    if (bytes.size() >= 132 && std::memcmp(bytes.data() + 128, "DICM", 4) == 0) {
        r.pos = 132;
    }

    std::string transfer_syntax = kExplicitLE;
    bool syntax_declared = false;
    DicomPixelData px;
    int samples_per_pixel = 1;
    bool have_pixels = false;

    // The file meta group (0002) is always explicit VR little endian; the
    // main dataset follows the transfer syntax it declares. Files without a
    // meta group are probed: a plausible VR tag means explicit.
    bool in_meta = bytes.size() >= 8 && r.pos + 2 <= bytes.size() &&
                   (bytes[r.pos] | (bytes[r.pos + 1] << 8)) == 0x0002;
    bool dataset_explicit = true;
    bool dataset_mode_known = false;

    while (!r.eof()) {
        if (in_meta) {
            // Peek the group: leaving group 0002 switches to the declared
            // transfer syntax before anything else is parsed.
            r.require(2, "group peek");
            const int next_group = bytes[r.pos] | (bytes[r.pos + 1] << 8);
            if (next_group != 0x0002) {
                in_meta = false;
                if (transfer_syntax != kImplicitLE && transfer_syntax != kExplicitLE) {
                    fail("unsupported dicom transfer syntax '", transfer_syntax, "' in ",
                         origin);
                }
            }
        }

        bool explicit_now = in_meta ? true : dataset_explicit;
        if (!in_meta && !dataset_mode_known) {
            // Probe: explicit files carry an uppercase two-letter VR here.
            // A declared transfer syntax wins over the probe.
            if (r.pos + 6 <= r.size) {
                char a = static_cast<char>(bytes[r.pos + 4]);
                char b = static_cast<char>(bytes[r.pos + 5]);
                dataset_explicit = (a >= 'A' && a <= 'Z' && b >= 'A' && b <= 'Z');
            }
            if (syntax_declared) dataset_explicit = (transfer_syntax == kExplicitLE);
            dataset_mode_known = true;
            explicit_now = dataset_explicit;
        }

        RawElement el = read_element(r, explicit_now);

        if (el.length == 0xFFFFFFFF) {
            skip_undefined_length(r);
            continue;
        }

        const std::uint32_t tag = (static_cast<std::uint32_t>(el.group) << 16) | el.element;
        switch (tag) {
            case 0x00020010:
                transfer_syntax = trim_uid(std::string(
                    reinterpret_cast<const char*>(bytes.data() + el.value_pos), el.length));
                syntax_declared = true;
                r.skip(el.length);
                break;
            case 0x00280002: samples_per_pixel = parse_us(r, el); r.skip(el.length); break;
            case 0x00280004:
                px.photometric = trim_uid(std::string(
                    reinterpret_cast<const char*>(bytes.data() + el.value_pos), el.length));
                r.skip(el.length);
                break;
            case 0x00280010: px.rows = parse_us(r, el); r.skip(el.length); break;
            case 0x00280011: px.cols = parse_us(r, el); r.skip(el.length); break;
            case 0x00280100: px.bits_allocated = parse_us(r, el); r.skip(el.length); break;
            case 0x00280101: px.bits_stored = parse_us(r, el); r.skip(el.length); break;
            case 0x00280103: px.signed_values = parse_us(r, el) != 0; r.skip(el.length); break;
            case 0x7FE00010: {
                if (px.rows <= 0 || px.cols <= 0) {
                    fail("dicom (", origin, "): pixel data before rows/columns");
                }
                if (samples_per_pixel != 1) {
                    fail("dicom (", origin, "): unsupported samples per pixel ",
                         samples_per_pixel);
                }
                const int bytes_per = px.bits_allocated == 16 ? 2 : 1;
                if (px.bits_allocated != 8 && px.bits_allocated != 16) {
                    fail("dicom (", origin, "): unsupported bits allocated ", px.bits_allocated);
                }
                const std::size_t need =
                    static_cast<std::size_t>(px.rows) * px.cols * bytes_per;
                if (el.length < need) {
                    fail("dicom (", origin, "): pixel data too short (", el.length, " < ", need,
                         ")");
                }
                px.values.resize(static_cast<std::size_t>(px.rows) * px.cols);
                const std::uint8_t* p = bytes.data() + el.value_pos;
                for (std::size_t i = 0; i < px.values.size(); ++i) {
                    if (bytes_per == 1) {
                        px.values[i] = p[i];
                    } else {
                        std::uint16_t raw =
                            static_cast<std::uint16_t>(p[2 * i] | (p[2 * i + 1] << 8));
                        px.values[i] = px.signed_values
                                           ? static_cast<std::int32_t>(
                                                 static_cast<std::int16_t>(raw))
                                           : static_cast<std::int32_t>(raw);
                    }
                }
                have_pixels = true;
                r.skip(el.length);
                break;
            }
            default:
                r.skip(el.length);
                break;
        }
        if (have_pixels) break;
    }

    if (!have_pixels) fail("dicom (", origin, "): no pixel data element found");
    if (px.photometric.empty()) px.photometric = "MONOCHROME2";
    if (px.photometric != "MONOCHROME1" && px.photometric != "MONOCHROME2") {
        fail("dicom (", origin, "): unsupported photometric interpretation '", px.photometric,
             "'");
    }
    return px;
}

DicomPixelData MinimalDicomDecoder::decode(const std::filesystem::path& path) const {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open dicom file: ", path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_bytes(bytes, path.string());
}

Image dicom_to_gray8(const DicomPixelData& px) {
    if (px.rows <= 0 || px.cols <= 0 || px.values.empty()) fail("empty dicom pixel data");
    const auto [min_it, max_it] = std::minmax_element(px.values.begin(), px.values.end());
    const double lo = static_cast<double>(*min_it);
    const double hi = static_cast<double>(*max_it);
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;

    Image img(px.rows, px.cols, 1);
    const bool invert = px.photometric == "MONOCHROME1";
    for (std::size_t i = 0; i < px.values.size(); ++i) {
        int g = static_cast<int>(std::lround((static_cast<double>(px.values[i]) - lo) * scale));
        g = std::clamp(g, 0, 255);
        img.pixels[i] = static_cast<std::uint8_t>(invert ? 255 - g : g);
    }
    return img;
}

}  // namespace synthcxr::dataset
