#pragma once

#include <cstdint>
#include <filesystem>

#include "exmo/frames.hpp"

namespace exmo {

/// Rec.601 luma of normalized RGB.
inline float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

/// Reads PGM/PPM (binary or ASCII, maxval <= 255) or PNG into a normalized
/// grayscale frame. Color is converted with Rec.601 weights.
Frame read_image(const std::filesystem::path& path);

/// Writes a binary 8-bit PGM, rounding to the nearest level.
void write_pgm(const Frame& frame, const std::filesystem::path& path);

std::uint8_t quantize(float v);

bool is_image_file(const std::filesystem::path& path);

}  // namespace exmo
