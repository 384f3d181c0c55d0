#pragma once

#include <cstdint>
#include <string>

#include "exmo/frames.hpp"

namespace exmo {

enum class Texture { checker, noise, gradient };
enum class MotionKind { translate, rotate };

Texture parse_texture(const std::string& s);
std::string to_string(Texture t);

/// Synthetic clip with controlled motion. `velocity` is pixels per frame
/// (rightward) for translation and degrees per frame for rotation.
struct SynthSpec {
  Texture texture = Texture::checker;
  double velocity = 1.0;
  int n_frames = 32;
  int size = kFrameSize;
  std::uint64_t seed = 0;
  MotionKind motion = MotionKind::translate;
  /// Checker square / coarsest noise cell, in pixels.
  int cell = 16;

  void validate() const;
};

/// Periodic size x size base texture.
Frame base_texture(const SynthSpec& spec);

/// Frame t is the base texture moved by t * velocity with toroidal wrap and
/// bilinear sub-pixel sampling. Deterministic for a fixed spec.
FrameSequence generate(const SynthSpec& spec);

}  // namespace exmo
