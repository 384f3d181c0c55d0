#pragma once

// Simulator Sickness Questionnaire scoring.
//
// Sixteen symptoms are rated 0 (None), 1 (Slight), 2 (Moderate) or
// 3 (Severe). Cluster raws sum the ratings of the symptoms marked for each
// cluster. Literal mode uses the cluster marks of the 16-item sheet exactly
// as printed and totals 3.74 x (sum of all sixteen ratings). Kennedy mode
// uses the classical 1993 membership and totals 3.74 x (N + O + D raws).

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace exmo {

inline constexpr int kSymptomCount = 16;
inline constexpr double kSsqTotalWeight = 3.74;
inline constexpr double kSicknessBandLow = 32.0;
inline constexpr double kSicknessBandHigh = 40.0;

enum class SsqMode { literal, kennedy };

struct SymptomInfo {
  std::string_view name;    // as printed on the questionnaire
  std::string_view column;  // CSV column name
  bool nausea;
  bool oculomotor;
  bool disorientation;
};

const std::array<SymptomInfo, kSymptomCount>& symptom_table(SsqMode mode = SsqMode::literal);

enum class SsqPhase { pre, post };

struct SsqResponse {
  std::string subject;
  std::string content;
  SsqPhase phase = SsqPhase::post;
  std::array<int, kSymptomCount> ratings{};

  /// Throws ValidationError naming the first symptom rated outside 0..3.
  void validate() const;
};

enum SsqFlag : std::uint32_t {
  kClampedNausea = 1u << 0,
  kClampedOculomotor = 1u << 1,
  kClampedDisorientation = 1u << 2,
  kClampedTotal = 1u << 3,
  kNoPreExposure = 1u << 4,
};

struct SsqScore {
  int nausea_raw = 0;
  int oculomotor_raw = 0;
  int disorientation_raw = 0;
  double total = 0.0;
  std::uint32_t flags = 0;

  bool operator==(const SsqScore&) const = default;
};

/// Classical weighted subscales N = 9.54 n, O = 7.58 o, D = 13.92 d.
struct SsqSubscales {
  double nausea;
  double oculomotor;
  double disorientation;
};
SsqSubscales kennedy_subscales(const SsqScore& score);

SsqScore score_response(const SsqResponse& response, SsqMode mode = SsqMode::literal);

/// Componentwise post - pre. Negative components become 0 and set the
/// matching clamp flag.
SsqScore diff_pre_post(const SsqScore& pre, const SsqScore& post);

struct SsqRecord {
  std::string subject;
  std::string content;
  SsqScore score;
};

/// Checks that both records belong to the same subject and content.
SsqRecord diff_pre_post(const SsqRecord& pre, const SsqRecord& post);

enum class SicknessLabel { below_threshold, perceptible_sickness };

/// Perceptible sickness from the bottom of the 32-40 band upward.
SicknessLabel classify_total(double total);
std::string to_string(SicknessLabel label);
/// Human-readable note stating the full 32-40 band.
std::string sickness_band_note();

std::string flags_string(std::uint32_t flags);
std::uint32_t parse_flags(std::string_view text);

/// Which subjective value each (subject, content) contributes.
enum class SubjectiveMode { delta, post };

/// Reads `subject,content,phase,<16 symptom columns>`.
std::vector<SsqResponse> read_ssq_responses(const std::filesystem::path& path);

/// Scores every response and pairs pre/post by (subject, content). Delta
/// mode emits post - pre (or the bare post score flagged no_pre when the
/// pre sheet is missing); post mode emits post scores only. Output is sorted
/// by (content, subject).
std::vector<SsqRecord> score_responses(const std::vector<SsqResponse>& responses, SsqMode mode = SsqMode::literal,
                                       SubjectiveMode subjective = SubjectiveMode::delta);

/// `subject,content,nausea_raw,oculomotor_raw,disorientation_raw,total,flags`
std::string ssq_score_csv(const std::vector<SsqRecord>& records);
std::vector<SsqRecord> read_ssq_scores(const std::filesystem::path& path);

}  // namespace exmo
