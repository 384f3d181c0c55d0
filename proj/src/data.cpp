#include "exmo/data.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>

#include "exmo/image_io.hpp"

namespace exmo {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

FrameSequence load_frame_directory(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  if (files.empty()) throw IngestionError(dir.string() + ": no frames found");
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });

  FrameSequence seq;
  seq.source_id = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  for (const auto& file : files) {
    Frame f;
    try {
      f = read_image(file);
    } catch (const IngestionError& e) {
      throw IngestionError("frame " + file.filename().string() + ": " + e.what());
    }
    if (!seq.frames.empty() && (f.width != seq.width() || f.height != seq.height())) {
      throw IngestionError("frame " + file.filename().string() + " is " + std::to_string(f.width) + "x" +
                           std::to_string(f.height) + ", earlier frames are " + std::to_string(seq.width()) + "x" +
                           std::to_string(seq.height()));
    }
    seq.frames.push_back(std::move(f));
  }
  seq.number_frames();
  return seq;
}

FrameSequence load_raw_planar(const fs::path& file) {
  fs::path sidecar = fs::path(file).replace_extension(".json");
  if (!fs::exists(sidecar)) sidecar = fs::path(file.string() + ".json");
  if (!fs::exists(sidecar)) throw IngestionError(file.string() + ": raw file has no JSON sidecar");
  json header;
  try {
    std::ifstream in(sidecar);
    header = json::parse(in);
  } catch (const json::exception& e) {
    throw IngestionError(sidecar.string() + ": " + e.what());
  }
  int width = 0, height = 0, count = 0;
  try {
    width = header.at("width").get<int>();
    height = header.at("height").get<int>();
    count = header.at("frames").get<int>();
  } catch (const json::exception& e) {
    throw IngestionError(sidecar.string() + ": " + e.what());
  }
  if (width <= 0 || height <= 0 || count <= 0) throw IngestionError(sidecar.string() + ": non-positive extents");

  std::ifstream in(file, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + file.string());
  FrameSequence seq;
  seq.source_id = file.stem().string();
  if (header.contains("fps")) seq.fps = header["fps"].get<double>();
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  std::vector<unsigned char> bytes(plane);
  for (int t = 0; t < count; ++t) {
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(plane));
    if (static_cast<std::size_t>(in.gcount()) != plane) {
      throw IngestionError(file.string() + ": frame " + std::to_string(t + 1) + " is truncated");
    }
    Frame f = Frame::filled(height, width, 0.0f);
    std::transform(bytes.begin(), bytes.end(), f.pixels.begin(), [](unsigned char b) { return b / 255.0f; });
    seq.frames.push_back(std::move(f));
  }
  seq.number_frames();
  return seq;
}

FrameSequence map_frames(const FrameSequence& seq, const std::function<Frame(const Frame&)>& fn) {
  FrameSequence out;
  out.source_id = seq.source_id;
  out.fps = seq.fps;
  out.frame_numbers = seq.frame_numbers;
  out.stride = seq.stride;
  out.frames.reserve(seq.frames.size());
  for (const auto& f : seq.frames) out.frames.push_back(fn(f));
  return out;
}

StackOrigin origin_at(const FrameSequence& seq, std::size_t start) {
  const int number = start < seq.frame_numbers.size() ? seq.frame_numbers[start] : static_cast<int>(start) + 1;
  return {seq.source_id, number, seq.stride};
}

void require_stackable(const FrameSequence& seq, int step) {
  if (step < 1) throw ArgumentError("window step must be >= 1");
  if (seq.size() < static_cast<std::size_t>(kStackFrames)) {
    throw ArgumentError("sequence '" + seq.source_id + "' has " + std::to_string(seq.size()) +
                        " frames; at least " + std::to_string(kStackFrames) + " are needed");
  }
}

}  // namespace

FrameSequence load_frames(const fs::path& path) {
  if (!fs::exists(path)) throw IngestionError(path.string() + ": no such file or directory");
  return fs::is_directory(path) ? load_frame_directory(path) : load_raw_planar(path);
}

void write_frames(const FrameSequence& seq, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05zu.pgm", i + 1);
    write_pgm(seq.frames[i], dir / name);
  }
}

Frame resize_frame(const Frame& frame, int height, int width) {
  if (height <= 0 || width <= 0) throw ArgumentError("resize: target extents must be positive");
  if (frame.height <= 0 || frame.width <= 0) throw ArgumentError("resize: empty source frame");
  Frame out = Frame::filled(height, width, 0.0f);
  const double sy = static_cast<double>(frame.height) / height;
  const double sx = static_cast<double>(frame.width) / width;

  std::vector<int> x0(width), x1(width);
  std::vector<float> fx(width);
  for (int x = 0; x < width; ++x) {
    const double src = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(frame.width - 1));
    x0[x] = static_cast<int>(std::floor(src));
    x1[x] = std::min(x0[x] + 1, frame.width - 1);
    fx[x] = static_cast<float>(src - x0[x]);
  }
  for (int y = 0; y < height; ++y) {
    const double src = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(frame.height - 1));
    const int y0 = static_cast<int>(std::floor(src));
    const int y1 = std::min(y0 + 1, frame.height - 1);
    const float fy = static_cast<float>(src - y0);
    for (int x = 0; x < width; ++x) {
      const float a = frame.at(y0, x0[x]), b = frame.at(y0, x1[x]);
      const float c = frame.at(y1, x0[x]), d = frame.at(y1, x1[x]);
      const float top = a + (b - a) * fx[x];
      const float bottom = c + (d - c) * fx[x];
      out.at(y, x) = std::clamp(top + (bottom - top) * fy, 0.0f, 1.0f);
    }
  }
  return out;
}

FrameSequence resize(const FrameSequence& seq, int height, int width) {
  if (seq.frames.empty()) throw ArgumentError("resize: empty sequence");
  if (height <= 0 || width <= 0) throw ArgumentError("resize: target extents must be positive");
  return map_frames(seq, [&](const Frame& f) { return resize_frame(f, height, width); });
}

FrameSequence half_resize(const FrameSequence& seq) {
  if (seq.frames.empty()) throw ArgumentError("half_resize: empty sequence");
  const int h = seq.height() / 2, w = seq.width() / 2;
  if (h < 1 || w < 1) throw ArgumentError("half_resize: frames too small to halve");
  return resize(seq, h, w);
}

Frame crop_frame(const Frame& frame, CropOffset offset, int size) {
  if (offset.y < 0 || offset.x < 0 || offset.y + size > frame.height || offset.x + size > frame.width) {
    throw ArgumentError("crop window outside frame");
  }
  Frame out = Frame::filled(size, size, 0.0f);
  for (int y = 0; y < size; ++y) {
    const float* src = &frame.pixels[static_cast<std::size_t>(offset.y + y) * frame.width + offset.x];
    std::copy(src, src + size, &out.pixels[static_cast<std::size_t>(y) * size]);
  }
  return out;
}

namespace {

CropOffset draw_offset(int height, int width, int size, Rng& rng) {
  CropOffset off;
  off.y = static_cast<int>(rng.below(static_cast<std::uint64_t>(height - size + 1)));
  off.x = static_cast<int>(rng.below(static_cast<std::uint64_t>(width - size + 1)));
  return off;
}

}  // namespace

FrameSequence half_resize_random_crop(const FrameSequence& seq, Rng& rng, int size, CropOffset* chosen) {
  if (seq.frames.empty()) throw ArgumentError("half_resize_random_crop: empty sequence");
  const int h = seq.height() / 2, w = seq.width() / 2;
  if (h < size || w < size) {
    throw ArgumentError("half_resize_random_crop: " + std::to_string(seq.width()) + "x" +
                        std::to_string(seq.height()) + " halves to " + std::to_string(w) + "x" + std::to_string(h) +
                        ", smaller than the " + std::to_string(size) + "x" + std::to_string(size) + " crop");
  }
  const CropOffset off = draw_offset(h, w, size, rng);
  if (chosen) *chosen = off;
  return map_frames(seq, [&](const Frame& f) { return crop_frame(resize_frame(f, h, w), off, size); });
}

std::vector<FrameSequence> temporal_augment(const FrameSequence& seq, const std::vector<int>& strides,
                                            std::size_t min_length) {
  FrameSequence numbered = seq;
  numbered.number_frames();
  std::vector<FrameSequence> out;
  for (int s : strides) {
    if (s < 1) throw ArgumentError("temporal stride must be >= 1, got " + std::to_string(s));
    for (int phase = 0; phase < s; ++phase) {
      FrameSequence sub;
      sub.source_id = seq.source_id;
      sub.fps = seq.fps;
      sub.stride = seq.stride * s;
      for (std::size_t i = static_cast<std::size_t>(phase); i < numbered.frames.size(); i += s) {
        sub.frames.push_back(numbered.frames[i]);
        sub.frame_numbers.push_back(numbered.frame_numbers[i]);
      }
      if (sub.frames.size() < std::max<std::size_t>(min_length, 1)) {
        spdlog::warn("'{}': stride {} phase {} yields {} frames, fewer than {}; skipped", seq.source_id, s, phase + 1,
                     sub.frames.size(), min_length);
        continue;
      }
      out.push_back(std::move(sub));
    }
  }
  return out;
}

std::vector<FrameStack> window_stacks(const FrameSequence& seq, int step, int size) {
  require_stackable(seq, step);
  if (seq.height() != size || seq.width() != size) {
    throw ShapeError("window_stacks: frames are " + std::to_string(seq.width()) + "x" +
                     std::to_string(seq.height()) + ", expected " + std::to_string(size) + "x" +
                     std::to_string(size));
  }
  std::vector<FrameStack> stacks;
  for (std::size_t start = 0; start + kStackFrames <= seq.size(); start += step) {
    stacks.push_back(FrameStack::from_frames(std::span(seq.frames).subspan(start, kStackFrames),
                                             origin_at(seq, start), size));
  }
  return stacks;
}

std::vector<FrameStack> window_stacks_random_crop(const FrameSequence& seq, Rng& rng, int step, int size) {
  require_stackable(seq, step);
  if (seq.height() < size || seq.width() < size) {
    throw ArgumentError("window_stacks_random_crop: frames smaller than the crop");
  }
  std::vector<FrameStack> stacks;
  for (std::size_t start = 0; start + kStackFrames <= seq.size(); start += step) {
    const CropOffset off = draw_offset(seq.height(), seq.width(), size, rng);
    std::vector<Frame> window;
    for (int k = 0; k < kStackFrames; ++k) window.push_back(crop_frame(seq.frames[start + k], off, size));
    stacks.push_back(FrameStack::from_frames(window, origin_at(seq, start), size));
  }
  return stacks;
}

void StackDataset::add(FrameSequence seq, int step) {
  if (step < 1) throw ArgumentError("window step must be >= 1");
  if (!seq.frames.empty() && (seq.height() != frame_size_ || seq.width() != frame_size_)) {
    throw ShapeError("StackDataset: frames of '" + seq.source_id + "' are " + std::to_string(seq.width()) + "x" +
                     std::to_string(seq.height()) + ", expected " + std::to_string(frame_size_));
  }
  seq.number_frames();
  const std::size_t index = sequences_.size();
  for (std::size_t start = 0; start + kStackFrames <= seq.size(); start += step) windows_.push_back({index, start});
  sequences_.push_back(std::move(seq));
}

FrameStack StackDataset::stack(std::size_t i) const {
  const Window& w = windows_.at(i);
  const FrameSequence& seq = sequences_[w.sequence];
  return FrameStack::from_frames(std::span(seq.frames).subspan(w.start, kStackFrames), origin_at(seq, w.start),
                                 frame_size_);
}

Role parse_role(const std::string& s) {
  if (s == "pretrain") return Role::pretrain;
  if (s == "finetune") return Role::finetune;
  if (s == "test") return Role::test;
  throw ArgumentError("unknown manifest role '" + s + "'");
}

std::string to_string(Role role) {
  switch (role) {
    case Role::pretrain:
      return "pretrain";
    case Role::finetune:
      return "finetune";
    case Role::test:
      return "test";
  }
  return "?";
}

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IngestionError("cannot open manifest " + manifest.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw IngestionError(manifest.string() + ": " + e.what());
  }
  if (!doc.is_array()) throw IngestionError(manifest.string() + ": expected a JSON list");
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& item = doc[i];
    try {
      ManifestEntry e;
      e.path = item.at("path").get<std::string>();
      if (e.path.is_relative()) e.path = manifest.parent_path() / e.path;
      e.role = parse_role(item.at("role").get<std::string>());
      if (item.contains("label") && !item["label"].is_null()) {
        e.label = item["label"].is_string() ? item["label"].get<std::string>() : item["label"].dump();
      }
      entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw IngestionError(manifest.string() + ": entry " + std::to_string(i) + ": " + e.what());
    } catch (const ArgumentError& e) {
      throw IngestionError(manifest.string() + ": entry " + std::to_string(i) + ": " + e.what());
    }
  }
  return entries;
}

std::vector<FrameSequence> prepare_sequences(const std::vector<ManifestEntry>& entries, Role role,
                                             const PrepareOptions& options) {
  std::vector<FrameSequence> out;
  std::size_t index = 0;
  for (const auto& entry : entries) {
    if (entry.role != role) continue;
    FrameSequence seq = load_frames(entry.path);
    if (!entry.label.empty()) seq.source_id = entry.label;
    const int size = options.frame_size;
    if (role == Role::finetune && seq.height() / 2 >= size && seq.width() / 2 >= size) {
      Rng rng(derive_seed(options.seed, 1000 + index));
      seq = half_resize_random_crop(seq, rng, size);
    } else {
      if (role == Role::finetune) {
        spdlog::warn("'{}' is too small for half resize + crop; resizing to {}x{} instead", seq.source_id, size,
                     size);
      }
      if (seq.height() != size || seq.width() != size) seq = resize(seq, size, size);
    }
    ++index;
    if (role == Role::test) {
      out.push_back(std::move(seq));
      continue;
    }
    for (auto& sub : temporal_augment(seq, options.strides, kStackFrames)) out.push_back(std::move(sub));
  }
  return out;
}

}  // namespace exmo
