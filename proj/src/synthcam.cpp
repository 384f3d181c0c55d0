#include "exmo/synthcam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "exmo/rng.hpp"
#include "exmo/text_format.hpp"

namespace exmo {
namespace {

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

float sample_wrapped(const Frame& tex, double y, double x) {
  const double fy = std::floor(y), fx = std::floor(x);
  const int y0 = wrap(static_cast<int>(fy), tex.height), x0 = wrap(static_cast<int>(fx), tex.width);
  const int y1 = wrap(y0 + 1, tex.height), x1 = wrap(x0 + 1, tex.width);
  const float ty = static_cast<float>(y - fy), tx = static_cast<float>(x - fx);
  const float top = tex.at(y0, x0) + (tex.at(y0, x1) - tex.at(y0, x0)) * tx;
  const float bottom = tex.at(y1, x0) + (tex.at(y1, x1) - tex.at(y1, x0)) * tx;
  return top + (bottom - top) * ty;
}

Frame value_noise(int size, int cell, Rng& rng) {
  Frame out = Frame::filled(size, size, 0.0f);
  double amplitude = 0.5, norm = 0.0;
  for (int c = cell; c >= 2 && amplitude > 0.1; c /= 2, amplitude *= 0.6) {
    const int grid = std::max(1, size / c);
    Frame lattice = Frame::filled(grid, grid, 0.0f);
    for (float& v : lattice.pixels) v = static_cast<float>(rng.uniform());
    const double scale = static_cast<double>(grid) / size;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) out.at(y, x) += static_cast<float>(amplitude) * sample_wrapped(lattice, y * scale, x * scale);
    norm += amplitude;
  }
  for (float& v : out.pixels) v = std::clamp(0.1f + 0.8f * v / static_cast<float>(norm), 0.0f, 1.0f);
  return out;
}

}  // namespace

Texture parse_texture(const std::string& s) {
  if (s == "checker") return Texture::checker;
  if (s == "noise") return Texture::noise;
  if (s == "gradient") return Texture::gradient;
  throw ArgumentError("unknown texture '" + s + "' (checker, noise, gradient)");
}

std::string to_string(Texture t) {
  switch (t) {
    case Texture::checker:
      return "checker";
    case Texture::noise:
      return "noise";
    case Texture::gradient:
      return "gradient";
  }
  return "?";
}

void SynthSpec::validate() const {
  if (n_frames < kStackFrames) throw ArgumentError("n_frames must be >= " + std::to_string(kStackFrames));
  if (size < 16) throw ArgumentError("size must be >= 16");
  if (!(velocity >= 0.0) || !std::isfinite(velocity)) throw ArgumentError("velocity must be finite and >= 0");
  if (cell < 2) throw ArgumentError("cell must be >= 2");
}

Frame base_texture(const SynthSpec& spec) {
  spec.validate();
  const int n = spec.size;
  switch (spec.texture) {
    case Texture::checker: {
      Frame f = Frame::filled(n, n, 0.0f);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) f.at(y, x) = ((x / spec.cell + y / spec.cell) % 2) ? 0.85f : 0.15f;
      return f;
    }
    case Texture::noise: {
      Rng rng(derive_seed(spec.seed, 77));
      return value_noise(n, spec.cell, rng);
    }
    case Texture::gradient: {
      Frame f = Frame::filled(n, n, 0.0f);
      const double w = 2.0 * std::numbers::pi / n;
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) f.at(y, x) = static_cast<float>(0.5 + 0.25 * std::sin(w * x) + 0.2 * std::cos(w * y));
      return f;
    }
  }
  return {};
}

FrameSequence generate(const SynthSpec& spec) {
  const Frame tex = base_texture(spec);
  const int n = spec.size;
  FrameSequence seq;
  seq.source_id = to_string(spec.texture) + "_v" + format_number(spec.velocity);
  for (int t = 0; t < spec.n_frames; ++t) {
    Frame f = Frame::filled(n, n, 0.0f);
    if (spec.motion == MotionKind::translate) {
      const double shift = t * spec.velocity;
      const double whole = std::floor(shift);
      const float frac = static_cast<float>(shift - whole);
      const int s = static_cast<int>(std::fmod(whole, static_cast<double>(n)));
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const float a = tex.at(y, wrap(x - s, n));
          const float b = tex.at(y, wrap(x - s - 1, n));
          f.at(y, x) = frac == 0.0f ? a : a + (b - a) * frac;
        }
      }
    } else {
      const double angle = t * spec.velocity * std::numbers::pi / 180.0;
      const double c = std::cos(angle), s = std::sin(angle), mid = (n - 1) / 2.0;
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double dx = x - mid, dy = y - mid;
          f.at(y, x) = sample_wrapped(tex, mid + s * dx + c * dy, mid + c * dx - s * dy);
        }
      }
    }
    for (float& v : f.pixels) v = std::clamp(v, 0.0f, 1.0f);
    seq.frames.push_back(std::move(f));
  }
  seq.number_frames();
  return seq;
}

}  // namespace exmo
