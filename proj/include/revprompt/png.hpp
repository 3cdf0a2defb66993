#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace revprompt::png {

struct Info {
    int width = 0;
    int height = 0;
    std::map<std::string, std::string> text;  // tEXt chunks, keyword -> value
};

/// Encodes 8-bit RGB pixels (row-major, 3 bytes per pixel) as a PNG with
/// optional tEXt chunks. Chunk order follows the map order, so equal inputs
/// give equal bytes.
std::vector<std::uint8_t> encode_rgb(int width, int height, std::span<const std::uint8_t> rgb,
                                     const std::map<std::string, std::string>& text = {});

/// Walks the chunk stream and verifies signature, IHDR and every CRC.
/// Returns nullopt for anything that is not a well-formed PNG.
std::optional<Info> inspect(std::span<const std::uint8_t> bytes);

}  // namespace revprompt::png
