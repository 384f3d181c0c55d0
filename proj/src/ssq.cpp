#include "exmo/ssq.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "exmo/errors.hpp"
#include "exmo/text_format.hpp"

namespace exmo {
namespace {

// Cluster marks of the 16-item sheet as printed. "Fullness of head" is
// unmarked, so it only reaches the total.
constexpr std::array<SymptomInfo, kSymptomCount> kLiteralTable{{
    {"General discomfort", "general_discomfort", true, true, false},
    {"Fatigue", "fatigue", false, true, false},
    {"Headache", "headache", false, true, false},
    {"Eye strain", "eye_strain", false, true, false},
    {"Difficulty focusing", "difficulty_focusing", false, true, false},
    {"Increased salivation", "increased_salivation", true, false, true},
    {"Sweating", "sweating", true, false, false},
    {"Nausea", "nausea", true, false, false},
    {"Difficulty concentrating", "difficulty_concentrating", true, true, true},
    {"Fullness of head", "fullness_of_head", false, false, false},
    {"Blurred vision", "blurred_vision", false, true, true},
    {"Dizzy (Eyes open)", "dizzy_eyes_open", false, false, true},
    {"Dizzy (Eye closed)", "dizzy_eyes_closed", false, false, true},
    {"Vertigo", "vertigo", false, false, true},
    {"Stomach awareness", "stomach_awareness", true, false, true},
    {"Burping", "burping", true, false, false},
}};

// Kennedy et al. (1993) membership.
constexpr std::array<SymptomInfo, kSymptomCount> kKennedyTable{{
    {"General discomfort", "general_discomfort", true, true, false},
    {"Fatigue", "fatigue", false, true, false},
    {"Headache", "headache", false, true, false},
    {"Eye strain", "eye_strain", false, true, false},
    {"Difficulty focusing", "difficulty_focusing", false, true, true},
    {"Increased salivation", "increased_salivation", true, false, false},
    {"Sweating", "sweating", true, false, false},
    {"Nausea", "nausea", true, false, true},
    {"Difficulty concentrating", "difficulty_concentrating", true, true, false},
    {"Fullness of head", "fullness_of_head", false, false, true},
    {"Blurred vision", "blurred_vision", false, true, true},
    {"Dizzy (Eyes open)", "dizzy_eyes_open", false, false, true},
    {"Dizzy (Eye closed)", "dizzy_eyes_closed", false, false, true},
    {"Vertigo", "vertigo", false, false, true},
    {"Stomach awareness", "stomach_awareness", true, false, false},
    {"Burping", "burping", true, false, false},
}};

constexpr std::array<std::pair<SsqFlag, std::string_view>, 5> kFlagNames{{
    {kClampedNausea, "clamped_nausea"},
    {kClampedOculomotor, "clamped_oculomotor"},
    {kClampedDisorientation, "clamped_disorientation"},
    {kClampedTotal, "clamped_total"},
    {kNoPreExposure, "no_pre"},
}};

const std::vector<std::string>& response_header() {
  static const std::vector<std::string> header = [] {
    std::vector<std::string> h{"subject", "content", "phase"};
    for (const auto& s : kLiteralTable) h.emplace_back(s.column);
    return h;
  }();
  return header;
}

}  // namespace

const std::array<SymptomInfo, kSymptomCount>& symptom_table(SsqMode mode) {
  return mode == SsqMode::literal ? kLiteralTable : kKennedyTable;
}

void SsqResponse::validate() const {
  for (int i = 0; i < kSymptomCount; ++i) {
    if (ratings[i] < 0 || ratings[i] > 3) {
      throw ValidationError("symptom '" + std::string(kLiteralTable[i].name) + "' rated " + std::to_string(ratings[i]) +
                            "; ratings must be 0 (None) to 3 (Severe)");
    }
  }
}

SsqSubscales kennedy_subscales(const SsqScore& score) {
  return {9.54 * score.nausea_raw, 7.58 * score.oculomotor_raw, 13.92 * score.disorientation_raw};
}

SsqScore score_response(const SsqResponse& response, SsqMode mode) {
  response.validate();
  const auto& table = symptom_table(mode);
  SsqScore s;
  int rating_sum = 0;
  for (int i = 0; i < kSymptomCount; ++i) {
    const int r = response.ratings[i];
    rating_sum += r;
    if (table[i].nausea) s.nausea_raw += r;
    if (table[i].oculomotor) s.oculomotor_raw += r;
    if (table[i].disorientation) s.disorientation_raw += r;
  }
  const int weighted_sum =
      mode == SsqMode::literal ? rating_sum : s.nausea_raw + s.oculomotor_raw + s.disorientation_raw;
  s.total = kSsqTotalWeight * weighted_sum;
  return s;
}

SsqScore diff_pre_post(const SsqScore& pre, const SsqScore& post) {
  SsqScore d;
  d.flags = post.flags & kNoPreExposure;
  auto clamp_int = [&](int a, int b, SsqFlag flag) {
    const int v = b - a;
    if (v < 0) {
      d.flags |= flag;
      return 0;
    }
    return v;
  };
  d.nausea_raw = clamp_int(pre.nausea_raw, post.nausea_raw, kClampedNausea);
  d.oculomotor_raw = clamp_int(pre.oculomotor_raw, post.oculomotor_raw, kClampedOculomotor);
  d.disorientation_raw = clamp_int(pre.disorientation_raw, post.disorientation_raw, kClampedDisorientation);
  d.total = post.total - pre.total;
  if (d.total < 0.0) {
    d.total = 0.0;
    d.flags |= kClampedTotal;
  }
  return d;
}

SsqRecord diff_pre_post(const SsqRecord& pre, const SsqRecord& post) {
  if (pre.subject != post.subject || pre.content != post.content) {
    throw ArgumentError("pre/post mismatch: (" + pre.subject + ", " + pre.content + ") vs (" + post.subject + ", " +
                        post.content + ")");
  }
  return {post.subject, post.content, diff_pre_post(pre.score, post.score)};
}

SicknessLabel classify_total(double total) {
  return total >= kSicknessBandLow ? SicknessLabel::perceptible_sickness : SicknessLabel::below_threshold;
}

std::string to_string(SicknessLabel label) {
  return label == SicknessLabel::perceptible_sickness ? "perceptible-sickness" : "below-threshold";
}

std::string sickness_band_note() {
  return "total SSQ of " + format_number(kSicknessBandLow) + " to " + format_number(kSicknessBandHigh) +
         " indicates perceptible cybersickness; labels trigger at " + format_number(kSicknessBandLow);
}

std::string flags_string(std::uint32_t flags) {
  std::string out;
  for (const auto& [flag, name] : kFlagNames) {
    if (flags & flag) {
      if (!out.empty()) out += "|";
      out += name;
    }
  }
  return out;
}

std::uint32_t parse_flags(std::string_view text) {
  std::uint32_t flags = 0;
  while (!text.empty()) {
    const std::size_t bar = text.find('|');
    const std::string_view tok = text.substr(0, bar);
    bool known = false;
    for (const auto& [flag, name] : kFlagNames) {
      if (tok == name) {
        flags |= flag;
        known = true;
      }
    }
    if (!known) throw ValidationError("unknown SSQ flag '" + std::string(tok) + "'");
    if (bar == std::string_view::npos) break;
    text.remove_prefix(bar + 1);
  }
  return flags;
}

std::vector<SsqResponse> read_ssq_responses(const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path);
  if (rows.empty()) throw ValidationError(path.string() + ": empty response file");
  const auto& header = response_header();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i >= rows[0].size() || rows[0][i] != header[i]) {
      throw ValidationError(path.string() + ": column " + std::to_string(i + 1) + " must be '" + header[i] + "'" +
                            (i >= 3 ? " (symptom '" + std::string(kLiteralTable[i - 3].name) + "')" : ""));
    }
  }
  std::vector<SsqResponse> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.string() + ": line " + std::to_string(r + 1);
    if (row.size() < header.size()) {
      throw ValidationError(where + ": missing symptom '" + std::string(kLiteralTable[row.size() < 3 ? 0 : row.size() - 3].name) + "'");
    }
    SsqResponse resp;
    resp.subject = row[0];
    resp.content = row[1];
    if (row[2] == "pre") {
      resp.phase = SsqPhase::pre;
    } else if (row[2] == "post") {
      resp.phase = SsqPhase::post;
    } else {
      throw ValidationError(where + ": phase must be pre or post, got '" + row[2] + "'");
    }
    for (int i = 0; i < kSymptomCount; ++i) {
      const std::string& cell = row[3 + i];
      double v = -1.0;
      try {
        v = parse_number(cell);
      } catch (const ArgumentError&) {
        throw ValidationError(where + ": symptom '" + std::string(kLiteralTable[i].name) + "' has non-numeric rating '" +
                              cell + "'");
      }
      if (v != std::floor(v) || v < 0 || v > 3) {
        throw ValidationError(where + ": symptom '" + std::string(kLiteralTable[i].name) + "' rated " + cell +
                              "; ratings must be 0..3");
      }
      resp.ratings[i] = static_cast<int>(v);
    }
    out.push_back(std::move(resp));
  }
  return out;
}

std::vector<SsqRecord> score_responses(const std::vector<SsqResponse>& responses, SsqMode mode,
                                       SubjectiveMode subjective) {
  struct Pair {
    const SsqResponse* pre = nullptr;
    const SsqResponse* post = nullptr;
  };
  std::map<std::pair<std::string, std::string>, Pair> by_key;  // (content, subject)
  for (const auto& r : responses) {
    auto& slot = by_key[{r.content, r.subject}];
    const SsqResponse*& target = r.phase == SsqPhase::pre ? slot.pre : slot.post;
    if (target) {
      throw ValidationError("duplicate " + std::string(r.phase == SsqPhase::pre ? "pre" : "post") +
                            " response for subject '" + r.subject + "', content '" + r.content + "'");
    }
    target = &r;
  }
  std::vector<SsqRecord> out;
  for (const auto& [key, pair] : by_key) {
    if (!pair.post) {
      spdlog::warn("subject '{}', content '{}' has no post-exposure response; skipped", key.second, key.first);
      continue;
    }
    const SsqScore post = score_response(*pair.post, mode);
    SsqRecord rec{key.second, key.first, post};
    if (subjective == SubjectiveMode::delta) {
      if (pair.pre) {
        rec.score = diff_pre_post(score_response(*pair.pre, mode), post);
      } else {
        rec.score.flags |= kNoPreExposure;
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::string ssq_score_csv(const std::vector<SsqRecord>& records) {
  std::string out = "subject,content,nausea_raw,oculomotor_raw,disorientation_raw,total,flags\n";
  for (const auto& r : records) {
    out += r.subject + "," + r.content + "," + std::to_string(r.score.nausea_raw) + "," +
           std::to_string(r.score.oculomotor_raw) + "," + std::to_string(r.score.disorientation_raw) + "," +
           format_number(r.score.total) + "," + flags_string(r.score.flags) + "\n";
  }
  return out;
}

std::vector<SsqRecord> read_ssq_scores(const std::filesystem::path& path) {
  const auto rows = read_csv_rows(path);
  const std::vector<std::string> header{"subject",           "content", "nausea_raw", "oculomotor_raw",
                                        "disorientation_raw", "total",   "flags"};
  if (rows.empty() || rows[0] != header) {
    throw ValidationError(path.string() + ": expected header " +
                          "subject,content,nausea_raw,oculomotor_raw,disorientation_raw,total,flags");
  }
  std::vector<SsqRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw ValidationError(path.string() + ": line " + std::to_string(r + 1) + " needs 7 fields");
    }
    try {
      SsqRecord rec{row[0], row[1], {}};
      rec.score.nausea_raw = static_cast<int>(parse_number(row[2]));
      rec.score.oculomotor_raw = static_cast<int>(parse_number(row[3]));
      rec.score.disorientation_raw = static_cast<int>(parse_number(row[4]));
      rec.score.total = parse_number(row[5]);
      rec.score.flags = parse_flags(row[6]);
      out.push_back(std::move(rec));
    } catch (const ArgumentError& e) {
      throw ValidationError(path.string() + ": line " + std::to_string(r + 1) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace exmo
