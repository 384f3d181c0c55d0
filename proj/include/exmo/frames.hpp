#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exmo/tensor.hpp"

namespace exmo {

inline constexpr int kStackFrames = 5;
inline constexpr int kFrameSize = 128;

/// Single grayscale image, row-major, values in [0, 1].
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  static Frame filled(int height, int width, float value) {
    return {height, width, std::vector<float>(static_cast<std::size_t>(height) * width, value)};
  }

  float& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Frame&) const = default;
};

struct FrameSequence {
  std::vector<Frame> frames;
  std::string source_id;
  std::optional<double> fps;
  /// 1-based frame numbers in the source clip, one per frame.
  std::vector<int> frame_numbers;
  /// Temporal stride this sequence was sampled at relative to the source.
  int stride = 1;

  std::size_t size() const { return frames.size(); }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int width() const { return frames.empty() ? 0 : frames.front().width; }

  /// Fills frame_numbers with 1..N when it is absent.
  void number_frames();

  /// Throws ShapeError on mixed dimensions, ArgumentError on values outside
  /// [0, 1] or a frame_numbers length mismatch.
  void validate() const;
};

struct StackOrigin {
  std::string source_id;
  int first_frame = 1;
  int stride = 1;

  bool operator==(const StackOrigin&) const = default;
};

/// Five consecutive frames packed as the channels of a (5, S, S) tensor.
struct FrameStack {
  Tensor data;
  StackOrigin origin;

  static FrameStack from_frames(std::span<const Frame> frames, StackOrigin origin, int size = kFrameSize);

  int size() const { return data.height(); }
  Frame frame(int k) const;
};

}  // namespace exmo
