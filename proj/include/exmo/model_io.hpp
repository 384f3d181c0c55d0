#pragma once

// Model file layout, all integers little-endian:
//
//   "EXMO"                         magic
//   u16                            format version
//   u32 base_channels, u32 input_frames, u32 input_size, u64 seed
//   u32 epochs_seen, u64 steps_seen, u64 n_losses, f64[n_losses]
//   u32 n_layers
//   per layer: u32 out, u32 in, u32 kh, u32 kw, f32 weights[out*in*kh*kw], f32 bias[out]
//   u32 CRC-32 of every preceding byte

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "exmo/autoencoder.hpp"

namespace exmo {

inline constexpr char kModelMagic[4] = {'E', 'X', 'M', 'O'};
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const Model& model);

/// Throws FormatError (or UnsupportedVersionError) naming the byte offset.
Model deserialize_model(std::span<const std::uint8_t> bytes);

/// Writes to a temporary sibling and renames it into place.
void save_model(const Model& model, const std::filesystem::path& path);

Model load_model(const std::filesystem::path& path);

}  // namespace exmo
