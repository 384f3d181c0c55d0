#include "exmo/frames.hpp"

#include <algorithm>
#include <numeric>

namespace exmo {

void FrameSequence::number_frames() {
  if (frame_numbers.size() == frames.size()) return;
  frame_numbers.resize(frames.size());
  std::iota(frame_numbers.begin(), frame_numbers.end(), 1);
}

void FrameSequence::validate() const {
  if (!frame_numbers.empty() && frame_numbers.size() != frames.size()) {
    throw ArgumentError("sequence '" + source_id + "': frame_numbers length does not match frame count");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    if (f.height != height() || f.width != width()) {
      throw ShapeError("sequence '" + source_id + "': frame " + std::to_string(i) + " is " +
                       std::to_string(f.width) + "x" + std::to_string(f.height) + ", expected " +
                       std::to_string(width()) + "x" + std::to_string(height()));
    }
    if (f.pixels.size() != static_cast<std::size_t>(f.height) * f.width) {
      throw ShapeError("sequence '" + source_id + "': frame " + std::to_string(i) + " has wrong pixel count");
    }
    const auto [lo, hi] = std::minmax_element(f.pixels.begin(), f.pixels.end());
    if (lo != f.pixels.end() && (!(*lo >= 0.0f) || !(*hi <= 1.0f))) {
      throw ArgumentError("sequence '" + source_id + "': frame " + std::to_string(i) + " has values outside [0,1]");
    }
  }
}

FrameStack FrameStack::from_frames(std::span<const Frame> frames, StackOrigin origin, int size) {
  if (frames.size() != static_cast<std::size_t>(kStackFrames)) {
    throw ArgumentError("a frame stack needs exactly " + std::to_string(kStackFrames) + " frames, got " +
                        std::to_string(frames.size()));
  }
  FrameStack stack{Tensor::chw(kStackFrames, size, size), std::move(origin)};
  for (int k = 0; k < kStackFrames; ++k) {
    const Frame& f = frames[k];
    if (f.height != size || f.width != size) {
      throw ShapeError("stack frame " + std::to_string(k) + " is " + std::to_string(f.width) + "x" +
                       std::to_string(f.height) + ", expected " + std::to_string(size) + "x" + std::to_string(size));
    }
    std::copy(f.pixels.begin(), f.pixels.end(), stack.data.plane(k).begin());
  }
  return stack;
}

Frame FrameStack::frame(int k) const {
  auto p = data.plane(k);
  return {data.height(), data.width(), std::vector<float>(p.begin(), p.end())};
}

}  // namespace exmo
