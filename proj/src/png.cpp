#include "revprompt/png.hpp"

#include <zlib.h>

#include <array>
#include <cstring>
#include <stdexcept>

namespace revprompt::png {

namespace {

constexpr std::array<std::uint8_t, 8> kSignature{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4], std::span<const std::uint8_t> data) {
    put_u32(out, static_cast<std::uint32_t>(data.size()));
    const auto type_pos = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const auto crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

}  // namespace

std::vector<std::uint8_t> encode_rgb(int width, int height, std::span<const std::uint8_t> rgb,
                                     const std::map<std::string, std::string>& text) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("png: non-positive size");
    const auto row = static_cast<std::size_t>(width) * 3;
    if (rgb.size() != row * static_cast<std::size_t>(height))
        throw std::invalid_argument("png: pixel buffer size mismatch");

    std::vector<std::uint8_t> out(kSignature.begin(), kSignature.end());

    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(width));
    put_u32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit truecolor, no interlace
    put_chunk(out, "IHDR", ihdr);

    for (const auto& [key, value] : text) {
        std::vector<std::uint8_t> chunk(key.begin(), key.end());
        chunk.push_back(0);
        chunk.insert(chunk.end(), value.begin(), value.end());
        put_chunk(out, "tEXt", chunk);
    }

    // Filter byte 0 (none) before each scanline.
    std::vector<std::uint8_t> raw;
    raw.reserve((row + 1) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        raw.push_back(0);
        const auto* begin = rgb.data() + row * static_cast<std::size_t>(y);
        raw.insert(raw.end(), begin, begin + row);
    }
    uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> packed(packed_size);
    if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png: deflate failed");
    packed.resize(packed_size);
    put_chunk(out, "IDAT", packed);
    put_chunk(out, "IEND", {});
    return out;
}

std::optional<Info> inspect(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kSignature.size() ||
        std::memcmp(bytes.data(), kSignature.data(), kSignature.size()) != 0)
        return std::nullopt;

    Info info;
    bool saw_header = false;
    bool saw_data = false;
    std::size_t pos = kSignature.size();
    while (pos + 12 <= bytes.size()) {
        const auto length = get_u32(bytes.data() + pos);
        if (length > bytes.size() - pos - 12) return std::nullopt;
        const auto* type = bytes.data() + pos + 4;
        const auto* data = type + 4;
        const auto stored_crc = get_u32(data + length);
        if (crc32(0L, type, length + 4) != stored_crc) return std::nullopt;

        const std::string tag(reinterpret_cast<const char*>(type), 4);
        if (!saw_header && tag != "IHDR") return std::nullopt;
        if (tag == "IHDR") {
            if (length != 13) return std::nullopt;
            info.width = static_cast<int>(get_u32(data));
            info.height = static_cast<int>(get_u32(data + 4));
            if (info.width <= 0 || info.height <= 0) return std::nullopt;
            saw_header = true;
        } else if (tag == "tEXt") {
            const auto* end = data + length;
            const auto* nul = static_cast<const std::uint8_t*>(std::memchr(data, 0, length));
            if (nul == nullptr) return std::nullopt;
            info.text.emplace(std::string(data, nul), std::string(nul + 1, end));
        } else if (tag == "IDAT") {
            saw_data = true;
        } else if (tag == "IEND") {
            return saw_data ? std::optional<Info>(std::move(info)) : std::nullopt;
        }
        pos += 12 + length;
    }
    return std::nullopt;
}

}  // namespace revprompt::png
