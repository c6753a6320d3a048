#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "compaug/core.hpp"

namespace compaug {

/// Decodes a PNG (any 8/16-bit layout, kept with alpha when present) or a
/// baseline JPEG. The format is sniffed from the file signature.
ImageBuffer read_image(const std::filesystem::path& path);

ImageBuffer decode_png(std::span<const std::uint8_t> bytes);
ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_png(const ImageBuffer& img);

void write_png(const std::filesystem::path& path, const ImageBuffer& img);

/// Returns `img` without alpha (RGBA -> RGB, Gray -> RGB).
ImageBuffer to_rgb(const ImageBuffer& img);
/// Returns `img` with an opaque alpha channel added if it had none.
ImageBuffer to_rgba(const ImageBuffer& img);

bool is_image_file(const std::filesystem::path& path);

}  // namespace compaug
