#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "exmo/autoencoder.hpp"
#include "exmo/frames.hpp"

namespace exmo {

struct ScoreEntry {
  int frame = 0;        // 1-based frame number in the source clip
  double error = 0.0;   // e(t): summed squared reconstruction difference
  double motion = 0.0;  // s_m(t) = e(t) / sqrt(W * H)

  bool operator==(const ScoreEntry&) const = default;
};

struct ScoreSeries {
  std::string video_id;
  int width = 0;
  int height = 0;
  std::vector<ScoreEntry> entries;

  std::vector<double> motion_scores() const;
  /// Throws ArgumentError if an entry has negative error or s_m differs
  /// from e / sqrt(W * H) by more than rounding.
  void validate() const;

  bool operator==(const ScoreSeries&) const = default;
};

double frame_error(std::span<const float> original, std::span<const float> reconstructed);
double frame_error(const Frame& original, const Frame& reconstructed);

/// e / sqrt(W * H).
double motion_score(double error, int width, int height);

/// Reconstructs every five-frame window (step 1) and attributes to frame t
/// the error of its reconstruction in the window centred on t. The first
/// and last two frames use the nearest complete window. Windows are scored
/// in parallel; output order is frame order.
ScoreSeries score_video(const Model& model, const FrameSequence& seq);

struct Aggregation {
  enum class Kind { mean, percentile };
  Kind kind = Kind::mean;
  double percentile = 95.0;

  /// Accepts "mean", "pNN" or "percentile-NN".
  static Aggregation parse(const std::string& text);
  std::string name() const;
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value.
double percentile_nearest_rank(std::vector<double> values, double p);

double aggregate(const ScoreSeries& series, const Aggregation& method = {});

/// Header `frame,e,s_m`; values in shortest round-trip form.
std::string score_csv(const ScoreSeries& series);
void write_score_csv(const ScoreSeries& series, const std::filesystem::path& path);
ScoreSeries read_score_csv(const std::filesystem::path& path, const std::string& video_id, int width = kFrameSize,
                           int height = kFrameSize);

/// {video_id, n_frames, mean_s_m, p95_s_m}
std::string score_summary_json(const ScoreSeries& series);

}  // namespace exmo
