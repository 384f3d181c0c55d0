#include "exmo/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <nlohmann/json.hpp>
#include <set>

#include "exmo/text_format.hpp"

namespace exmo {
namespace fs = std::filesystem;

double plcc(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ArgumentError("plcc: vectors differ in length");
  if (x.size() < 2) throw DegenerateInputError("plcc needs at least two observations");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0) throw DegenerateInputError("plcc: objective scores have zero variance");
  if (syy <= 0.0) throw DegenerateInputError("plcc: subjective scores have zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double plcc(const std::vector<PairedObservation>& pairs) {
  std::vector<double> x, y;
  for (const auto& p : pairs) {
    x.push_back(p.objective);
    y.push_back(p.subjective);
  }
  return plcc(x, y);
}

std::vector<PairedObservation> pair_observations(const std::vector<ScoreSeries>& series,
                                                 const std::vector<SsqRecord>& ssq, const Aggregation& aggregation) {
  std::map<std::string, const ScoreSeries*> videos;
  for (const auto& s : series) {
    if (!videos.emplace(s.video_id, &s).second) throw ValidationError("duplicate video id '" + s.video_id + "'");
  }
  std::map<std::string, std::pair<double, std::size_t>> subjective;
  for (const auto& r : ssq) {
    auto& acc = subjective[r.content];
    acc.first += r.score.total;
    ++acc.second;
  }

  std::vector<std::string> orphans;
  for (const auto& [id, _] : videos) {
    if (!subjective.count(id)) orphans.push_back("video '" + id + "' has no SSQ scores");
  }
  for (const auto& [id, _] : subjective) {
    if (!videos.count(id)) orphans.push_back("SSQ content '" + id + "' has no score series");
  }
  if (!orphans.empty()) {
    std::string msg = "content ids do not match:";
    for (const auto& o : orphans) msg += "\n  " + o;
    throw ValidationError(msg);
  }

  std::vector<PairedObservation> pairs;
  for (const auto& [id, s] : videos) {
    const auto& [sum, count] = subjective.at(id);
    pairs.push_back({id, aggregate(*s, aggregation), sum / static_cast<double>(count), count});
  }
  return pairs;
}

ReportSummary summarize(const std::vector<ScoreSeries>& series, const std::vector<SsqRecord>& ssq,
                        const ReportOptions& options) {
  ReportSummary summary;
  summary.objective_aggregation = options.aggregation.name();
  if (ssq.empty()) {
    summary.n_contents = series.size();
    summary.caveats.push_back("no SSQ scores supplied; correlation unavailable");
    return summary;
  }
  summary.pairs = pair_observations(series, ssq, options.aggregation);
  summary.n_contents = summary.pairs.size();
  try {
    summary.plcc = plcc(summary.pairs);
  } catch (const DegenerateInputError& e) {
    summary.caveats.push_back(std::string("correlation unavailable: ") + e.what());
  }
  if (summary.plcc && summary.n_contents < options.small_sample_limit) {
    summary.caveats.push_back("small sample: PLCC over only " + std::to_string(summary.n_contents) +
                              " contents; treat as indicative, not as a reliable estimate");
  }
  return summary;
}

std::string summary_json(const ReportSummary& summary) {
  nlohmann::ordered_json j;
  if (summary.plcc) {
    j["plcc"] = *summary.plcc;
  } else {
    j["plcc"] = nullptr;
  }
  j["n_contents"] = summary.n_contents;
  j["objective_aggregation"] = summary.objective_aggregation;
  j["caveats"] = summary.caveats;
  return j.dump(2) + "\n";
}

ReportSummary emit_report(const std::vector<ScoreSeries>& series, const std::vector<SsqRecord>& ssq,
                          const fs::path& out_dir, const ReportOptions& options) {
  ReportSummary summary = summarize(series, ssq, options);

  fs::create_directories(out_dir / "curves");
  std::vector<const ScoreSeries*> ordered;
  for (const auto& s : series) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const ScoreSeries* a, const ScoreSeries* b) { return a->video_id < b->video_id; });
  for (const auto* s : ordered) write_score_csv(*s, out_dir / "curves" / (s->video_id + ".csv"));

  std::string ssq_csv = "content,n_subjects,mean_total,label\n";
  for (const auto& p : summary.pairs) {
    ssq_csv += p.content + "," + std::to_string(p.subjects) + "," + format_number(p.subjective) + "," +
               to_string(classify_total(p.subjective)) + "\n";
  }
  write_text_file(out_dir / "ssq_summary.csv", ssq_csv);
  write_text_file(out_dir / "summary.json", summary_json(summary));

  std::string txt;
  char line[256];
  txt += "Exceptional motion vs. subjective sickness\n\n";
  std::snprintf(line, sizeof line, "%-24s %8s %14s %14s  %s\n", "content", "frames",
                ("s_m " + summary.objective_aggregation).c_str(), "SSQ total", "label");
  txt += line;
  std::map<std::string, const PairedObservation*> by_content;
  for (const auto& p : summary.pairs) by_content[p.content] = &p;
  for (const auto* s : ordered) {
    const double obj = s->entries.empty() ? 0.0 : aggregate(*s, options.aggregation);
    auto it = by_content.find(s->video_id);
    if (it != by_content.end()) {
      std::snprintf(line, sizeof line, "%-24s %8zu %14.6f %14.4f  %s\n", s->video_id.c_str(), s->entries.size(), obj,
                    it->second->subjective, to_string(classify_total(it->second->subjective)).c_str());
    } else {
      std::snprintf(line, sizeof line, "%-24s %8zu %14.6f %14s  %s\n", s->video_id.c_str(), s->entries.size(), obj,
                    "-", "-");
    }
    txt += line;
  }
  txt += "\nsubjective score: " + options.subjective_label + "\n";
  txt += "threshold: " + sickness_band_note() + "\n";
  if (summary.plcc) {
    std::snprintf(line, sizeof line, "PLCC (%zu contents): %.6f\n", summary.n_contents, *summary.plcc);
    txt += line;
  } else {
    txt += "PLCC: unavailable\n";
  }
  for (const auto& c : summary.caveats) txt += "caveat: " + c + "\n";
  write_text_file(out_dir / "report.txt", txt);
  return summary;
}

}  // namespace exmo
