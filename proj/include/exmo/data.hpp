#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "exmo/frames.hpp"
#include "exmo/rng.hpp"

namespace exmo {

/// Loads a clip from either a directory of PGM/PPM/PNG frames (sorted by
/// filename) or a raw 8-bit planar file with a JSON sidecar
/// {"width", "height", "frames"} stored next to it as `<stem>.json` or
/// `<file>.json`. Throws IngestionError naming the offending frame.
FrameSequence load_frames(const std::filesystem::path& path);

/// Writes `frame_00001.pgm`, `frame_00002.pgm`, ... into `dir`.
void write_frames(const FrameSequence& seq, const std::filesystem::path& dir);

/// Bilinear resampling with pixel-centre alignment; results are clamped to
/// [0, 1].
Frame resize_frame(const Frame& frame, int height, int width);
FrameSequence resize(const FrameSequence& seq, int height = kFrameSize, int width = kFrameSize);

/// Halves both extents (rounding down) with the bilinear resampler.
FrameSequence half_resize(const FrameSequence& seq);

struct CropOffset {
  int y = 0;
  int x = 0;
  bool operator==(const CropOffset&) const = default;
};

Frame crop_frame(const Frame& frame, CropOffset offset, int size);

/// Halves the clip, then crops one size x size window shared by every frame.
/// Throws ArgumentError if the halved clip is smaller than the crop.
FrameSequence half_resize_random_crop(const FrameSequence& seq, Rng& rng, int size = kFrameSize,
                                      CropOffset* chosen = nullptr);

/// For each stride s, the s phase-shifted subsequences taking every s-th
/// frame. Subsequences shorter than `min_length` are skipped with a warning.
std::vector<FrameSequence> temporal_augment(const FrameSequence& seq, const std::vector<int>& strides,
                                            std::size_t min_length = 1);

/// Sliding five-frame windows starting every `step` frames.
std::vector<FrameStack> window_stacks(const FrameSequence& seq, int step = 1, int size = kFrameSize);

/// Like window_stacks on a larger-than-`size` clip, but each window draws
/// its own crop offset.
std::vector<FrameStack> window_stacks_random_crop(const FrameSequence& seq, Rng& rng, int step = 1,
                                                  int size = kFrameSize);

/// Random-access source of training samples.
class StackSource {
 public:
  virtual ~StackSource() = default;
  virtual std::size_t size() const = 0;
  virtual FrameStack stack(std::size_t i) const = 0;
};

/// Holds whole sequences and materializes windows on demand.
class StackDataset : public StackSource {
 public:
  explicit StackDataset(int frame_size = kFrameSize) : frame_size_(frame_size) {}

  /// Registers every window of `seq` at `step`; sequences shorter than five
  /// frames contribute nothing.
  void add(FrameSequence seq, int step = 1);

  std::size_t size() const override { return windows_.size(); }
  FrameStack stack(std::size_t i) const override;

  const std::vector<FrameSequence>& sequences() const { return sequences_; }
  int frame_size() const { return frame_size_; }

 private:
  struct Window {
    std::size_t sequence;
    std::size_t start;
  };
  int frame_size_;
  std::vector<FrameSequence> sequences_;
  std::vector<Window> windows_;
};

class StackList : public StackSource {
 public:
  StackList() = default;
  explicit StackList(std::vector<FrameStack> stacks) : stacks_(std::move(stacks)) {}

  std::size_t size() const override { return stacks_.size(); }
  FrameStack stack(std::size_t i) const override { return stacks_.at(i); }
  std::vector<FrameStack>& items() { return stacks_; }

 private:
  std::vector<FrameStack> stacks_;
};

enum class Role { pretrain, finetune, test };

struct ManifestEntry {
  std::filesystem::path path;
  Role role = Role::pretrain;
  std::string label;
};

/// Parses a JSON list of {path, role, label}. Relative paths resolve
/// against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

Role parse_role(const std::string& s);
std::string to_string(Role role);

struct PrepareOptions {
  std::vector<int> strides{1, 2, 3};
  int frame_size = kFrameSize;
  std::uint64_t seed = 0;
};

/// Loads every entry with the given role and applies the role's spatial
/// preprocessing: plain resize for pretrain/test, half resize plus shared
/// random crop for finetune (falling back to a plain resize, with a warning,
/// when the halved clip is smaller than the crop). Training roles are then
/// temporally augmented.
std::vector<FrameSequence> prepare_sequences(const std::vector<ManifestEntry>& entries, Role role,
                                             const PrepareOptions& options);

}  // namespace exmo
