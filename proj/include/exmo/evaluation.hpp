#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exmo/scoring.hpp"
#include "exmo/ssq.hpp"

namespace exmo {

struct PairedObservation {
  std::string content;
  double objective = 0.0;   // aggregated s_m of the content's video
  double subjective = 0.0;  // mean SSQ total across subjects
  std::size_t subjects = 0;
};

/// Sample Pearson correlation in double precision. Throws
/// DegenerateInputError for fewer than two pairs or a constant vector.
double plcc(std::span<const double> x, std::span<const double> y);
double plcc(const std::vector<PairedObservation>& pairs);

/// Joins per-video aggregates with per-content mean SSQ totals. Throws
/// ValidationError listing every video without SSQ scores and every SSQ
/// content without a video.
std::vector<PairedObservation> pair_observations(const std::vector<ScoreSeries>& series,
                                                 const std::vector<SsqRecord>& ssq, const Aggregation& aggregation);

struct ReportOptions {
  Aggregation aggregation;
  /// Below this many contents the summary carries a small-sample caveat.
  std::size_t small_sample_limit = 10;
  std::string subjective_label = "mean post-minus-pre total SSQ";
};

struct ReportSummary {
  std::optional<double> plcc;
  std::size_t n_contents = 0;
  std::string objective_aggregation;
  std::vector<std::string> caveats;
  std::vector<PairedObservation> pairs;
};

/// Computes the correlation section without touching the filesystem.
ReportSummary summarize(const std::vector<ScoreSeries>& series, const std::vector<SsqRecord>& ssq,
                        const ReportOptions& options = {});

/// {plcc, n_contents, objective_aggregation, caveats[]}
std::string summary_json(const ReportSummary& summary);

/// Writes into `out_dir`:
///   curves/<video_id>.csv   per-frame score curve
///   ssq_summary.csv         per-content subject count, mean total, label
///   summary.json            correlation summary
///   report.txt              plain-text table
/// Output is byte-identical for identical inputs.
ReportSummary emit_report(const std::vector<ScoreSeries>& series, const std::vector<SsqRecord>& ssq,
                          const std::filesystem::path& out_dir, const ReportOptions& options = {});

}  // namespace exmo
