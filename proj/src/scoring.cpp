#include "exmo/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "exmo/parallel.hpp"
#include "exmo/text_format.hpp"

namespace exmo {

std::vector<double> ScoreSeries::motion_scores() const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.motion);
  return out;
}

void ScoreSeries::validate() const {
  for (const auto& e : entries) {
    if (!(e.error >= 0.0)) throw ArgumentError("score entry for frame " + std::to_string(e.frame) + " has e < 0");
    const double expected = motion_score(e.error, width, height);
    if (std::abs(expected - e.motion) > 1e-9 * std::max(1.0, std::abs(expected))) {
      throw ArgumentError("score entry for frame " + std::to_string(e.frame) + " has s_m != e / sqrt(W*H)");
    }
  }
}

double frame_error(std::span<const float> original, std::span<const float> reconstructed) {
  if (original.size() != reconstructed.size()) {
    throw ShapeError("frame_error: " + std::to_string(original.size()) + " vs " +
                     std::to_string(reconstructed.size()) + " pixels");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double d = static_cast<double>(original[i]) - static_cast<double>(reconstructed[i]);
    sum += d * d;
  }
  return sum;
}

double frame_error(const Frame& original, const Frame& reconstructed) {
  if (original.height != reconstructed.height || original.width != reconstructed.width) {
    throw ShapeError("frame_error: " + std::to_string(original.width) + "x" + std::to_string(original.height) +
                     " vs " + std::to_string(reconstructed.width) + "x" + std::to_string(reconstructed.height));
  }
  return frame_error(original.pixels, reconstructed.pixels);
}

double motion_score(double error, int width, int height) {
  if (width <= 0 || height <= 0) throw ArgumentError("motion_score: W*H must be positive");
  if (!(error >= 0.0)) throw ArgumentError("motion_score: e must be non-negative");
  return error / std::sqrt(static_cast<double>(width) * static_cast<double>(height));
}

ScoreSeries score_video(const Model& model, const FrameSequence& seq) {
  const int size = model.config.input_size;
  if (seq.size() < static_cast<std::size_t>(kStackFrames)) {
    throw ArgumentError("score_video: '" + seq.source_id + "' has " + std::to_string(seq.size()) +
                        " frames; at least " + std::to_string(kStackFrames) + " are needed");
  }
  if (seq.height() != size || seq.width() != size) {
    throw ShapeError("score_video: frames are " + std::to_string(seq.width()) + "x" + std::to_string(seq.height()) +
                     ", model expects " + std::to_string(size) + "x" + std::to_string(size));
  }
  const std::size_t n = seq.size();
  const std::size_t windows = n - kStackFrames + 1;
  constexpr std::size_t kCentre = kStackFrames / 2;
  std::vector<double> errors(n, 0.0);

  parallel_for(windows, [&](std::size_t start) {
    const FrameStack stack = FrameStack::from_frames(std::span(seq.frames).subspan(start, kStackFrames),
                                                     StackOrigin{seq.source_id, 0, seq.stride}, size);
    const Tensor recon = forward(model, stack);
    // Frames whose centred window is this one, extended at both clip ends.
    const std::size_t first = start == 0 ? 0 : start + kCentre;
    const std::size_t last = start + 1 == windows ? n - 1 : start + kCentre;
    for (std::size_t t = first; t <= last; ++t) {
      errors[t] = frame_error(stack.data.plane(static_cast<int>(t - start)), recon.plane(static_cast<int>(t - start)));
    }
  });

  ScoreSeries series{seq.source_id, size, size, {}};
  series.entries.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const int number = t < seq.frame_numbers.size() ? seq.frame_numbers[t] : static_cast<int>(t) + 1;
    series.entries.push_back({number, errors[t], motion_score(errors[t], size, size)});
  }
  return series;
}

Aggregation Aggregation::parse(const std::string& text) {
  if (text == "mean") return {};
  std::string digits;
  if (text.rfind("percentile-", 0) == 0) {
    digits = text.substr(11);
  } else if (text.size() > 1 && text[0] == 'p') {
    digits = text.substr(1);
  } else {
    throw ArgumentError("unknown aggregation '" + text + "' (use mean, pNN or percentile-NN)");
  }
  double p = 0.0;
  try {
    p = parse_number(digits);
  } catch (const ArgumentError&) {
    throw ArgumentError("unknown aggregation '" + text + "'");
  }
  if (!(p > 0.0 && p <= 100.0)) throw ArgumentError("percentile must be in (0, 100]");
  return {Kind::percentile, p};
}

std::string Aggregation::name() const {
  if (kind == Kind::mean) return "mean";
  return "percentile-" + format_number(percentile);
}

double percentile_nearest_rank(std::vector<double> values, double p) {
  if (values.empty()) throw ArgumentError("percentile of an empty series");
  if (!(p > 0.0 && p <= 100.0)) throw ArgumentError("percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

double aggregate(const ScoreSeries& series, const Aggregation& method) {
  if (series.entries.empty()) throw ArgumentError("aggregate: empty score series '" + series.video_id + "'");
  const auto scores = series.motion_scores();
  if (method.kind == Aggregation::Kind::percentile) return percentile_nearest_rank(scores, method.percentile);
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

std::string score_csv(const ScoreSeries& series) {
  std::string out = "frame,e,s_m\n";
  for (const auto& e : series.entries) {
    out += std::to_string(e.frame) + "," + format_number(e.error) + "," + format_number(e.motion) + "\n";
  }
  return out;
}

void write_score_csv(const ScoreSeries& series, const std::filesystem::path& path) {
  write_text_file(path, score_csv(series));
}

ScoreSeries read_score_csv(const std::filesystem::path& path, const std::string& video_id, int width, int height) {
  const auto rows = read_csv_rows(path);
  if (rows.empty() || rows[0] != std::vector<std::string>{"frame", "e", "s_m"}) {
    throw IngestionError(path.string() + ": expected header frame,e,s_m");
  }
  ScoreSeries series{video_id, width, height, {}};
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw IngestionError(path.string() + ": line " + std::to_string(i + 1) + " needs 3 fields");
    try {
      series.entries.push_back({static_cast<int>(parse_number(rows[i][0])), parse_number(rows[i][1]),
                                parse_number(rows[i][2])});
    } catch (const ArgumentError& e) {
      throw IngestionError(path.string() + ": line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  // The file does not record the frame size, so only checks independent of
  // it apply here.
  for (std::size_t i = 0; i < series.entries.size(); ++i) {
    const auto& e = series.entries[i];
    if (!std::isfinite(e.error) || !std::isfinite(e.motion) || e.error < 0.0 || e.motion < 0.0) {
      throw IngestionError(path.string() + ": line " + std::to_string(i + 2) + ": negative or non-finite score");
    }
    if (i > 0 && e.frame <= series.entries[i - 1].frame) {
      throw IngestionError(path.string() + ": line " + std::to_string(i + 2) + ": frame numbers must increase");
    }
  }
  return series;
}

std::string score_summary_json(const ScoreSeries& series) {
  nlohmann::ordered_json j;
  j["video_id"] = series.video_id;
  j["n_frames"] = series.entries.size();
  if (series.entries.empty()) {
    j["mean_s_m"] = nullptr;
    j["p95_s_m"] = nullptr;
  } else {
    j["mean_s_m"] = aggregate(series, {});
    j["p95_s_m"] = aggregate(series, {Aggregation::Kind::percentile, 95.0});
  }
  return j.dump(2) + "\n";
}

}  // namespace exmo
