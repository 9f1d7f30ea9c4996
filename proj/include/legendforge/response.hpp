#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "legendforge/dataset.hpp"
#include "legendforge/error.hpp"
#include "legendforge/geometry.hpp"

namespace legendforge {

// Repair and diagnostic tags, recorded per set.
inline constexpr const char* kTagCodeFence = "code-fence-strip";
inline constexpr const char* kTagComment = "comment-strip";
inline constexpr const char* kTagTrailingComma = "trailing-comma";
inline constexpr const char* kTagClamped = "clamped";
inline constexpr const char* kTagOversized = "oversized";
inline constexpr const char* kTagSuspectLink = "suspect-link";

// Boxes protruding more than this fraction of their own dimension are
// unanchored and dropped; smaller overshoot is clamped.
inline constexpr double kClampMaxProtrusionRatio = 0.25;
// Diagnostic only; the box is kept.
inline constexpr double kOversizedFrameAreaRatio = 0.60;
inline constexpr double kSuspectLinkGapFactor = 1.5;

/// A model-proposed pair, raw coordinates. Unlike LegendPair this can hold
/// boxes that have not yet passed validation.
struct PredictedPair {
  std::array<double, 4> item{};
  std::array<double, 4> description{};
  std::vector<std::string> flags;

  bool operator==(const PredictedPair&) const = default;
};

struct PredictionSet {
  std::string target_map_id;
  std::vector<PredictedPair> pairs;
  Frame frame;
  std::vector<std::string> repairs_applied;  // sorted, unique
  int rejected_entries = 0;

  bool operator==(const PredictionSet&) const = default;

  /// Validated pairs as LegendPairs with synthetic sequential ids.
  std::vector<LegendPair> to_legend_pairs() const {
    std::vector<LegendPair> out;
    out.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      auto item = BBox::try_make(pairs[i].item);
      auto desc = BBox::try_make(pairs[i].description);
      if (!item || !desc)
        throw Error(Errc::Internal, "to_legend_pairs called on unvalidated set");
      out.push_back({fmt::format("p{:03}", i + 1), *item, *desc});
    }
    return out;
  }
};

namespace repair {

/// Drop markdown fence lines (``` and ```lang), keeping their content.
inline std::string strip_code_fences(std::string_view text, bool& applied) {
  if (text.find("```") == std::string_view::npos) {
    applied = false;
    return std::string(text);
  }
  std::string out;
  out.reserve(text.size());
  applied = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                           : eol - pos);
    std::string_view trimmed = line;
    while (!trimmed.empty() && (trimmed.front() == ' ' || trimmed.front() == '\t'))
      trimmed.remove_prefix(1);
    if (trimmed.rfind("```", 0) == 0) {
      applied = true;
    } else {
      out.append(line);
      if (eol != std::string_view::npos) out += '\n';
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return out;
}

/// Remove //-to-end-of-line sequences outside JSON string literals.
inline std::string strip_line_comments(std::string_view text, bool& applied) {
  std::string out;
  out.reserve(text.size());
  applied = false;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out += c;
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
      out += c;
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      applied = true;
      while (i < text.size() && text[i] != '\n') ++i;
      if (i < text.size()) out += '\n';
      continue;
    }
    out += c;
  }
  return out;
}

/// Remove commas that directly precede a closing brace or bracket.
inline std::string strip_trailing_commas(std::string_view text, bool& applied) {
  std::string out;
  out.reserve(text.size());
  applied = false;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      out += c;
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    if (c == ',') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == ' ' || text[j] == '\t' || text[j] == '\n' ||
                                 text[j] == '\r'))
        ++j;
      if (j < text.size() && (text[j] == '}' || text[j] == ']')) {
        applied = true;
        continue;
      }
    }
    out += c;
  }
  return out;
}

/// Extract the balanced {...} starting at `start`, tolerant of line comments
/// and strings. Returns nullopt when unterminated.
inline std::optional<std::string_view> balanced_object(std::string_view text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

}  // namespace repair

inline constexpr const char* kPredictionsKeyPrefix = "predictions for ";

namespace detail {

inline void add_tag(std::vector<std::string>& tags, const char* tag) {
  if (std::find(tags.begin(), tags.end(), tag) == tags.end()) {
    tags.emplace_back(tag);
    std::sort(tags.begin(), tags.end());
  }
}

inline std::optional<std::array<double, 4>> coords_of(const nlohmann::json& v) {
  if (!v.is_array() || v.size() != 4) return std::nullopt;
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) return std::nullopt;
    out[i] = v[i].get<double>();
  }
  return out;
}

}  // namespace detail

/// Pull validated-enough predictions out of arbitrary model text.
/// Repair order: code fences, line comments, trailing commas, then the first
/// JSON object owning a "predictions for ..." key. Entries that are not two
/// 4-number arrays are counted in rejected_entries, never fatal. Throws
/// NoPredictionsFound when no candidate object parses.
inline PredictionSet parse_response(std::string_view text, const Frame& frame) {
  bool fences = false;
  const std::string defenced = repair::strip_code_fences(text, fences);

  std::size_t pos = 0;
  while ((pos = defenced.find('{', pos)) != std::string::npos) {
    const auto candidate = repair::balanced_object(defenced, pos);
    if (!candidate) {
      // Unterminated at this depth; an inner object may still balance.
      ++pos;
      continue;
    }
    if (candidate->find(kPredictionsKeyPrefix) != std::string_view::npos) {
      bool comments = false, commas = false;
      std::string cleaned = repair::strip_line_comments(*candidate, comments);
      cleaned = repair::strip_trailing_commas(cleaned, commas);
      const auto doc = nlohmann::json::parse(cleaned, nullptr, /*allow_exceptions=*/false);
      if (doc.is_object()) {
        for (const auto& [key, value] : doc.items()) {
          if (key.rfind(kPredictionsKeyPrefix, 0) != 0 || !value.is_array()) continue;

          PredictionSet set;
          set.target_map_id = key.substr(std::string(kPredictionsKeyPrefix).size());
          set.frame = frame;
          if (fences) detail::add_tag(set.repairs_applied, kTagCodeFence);
          if (comments) detail::add_tag(set.repairs_applied, kTagComment);
          if (commas) detail::add_tag(set.repairs_applied, kTagTrailingComma);

          for (const auto& entry : value) {
            if (!entry.is_object()) {
              ++set.rejected_entries;
              continue;
            }
            const auto item = entry.contains("legend_item")
                                  ? detail::coords_of(entry["legend_item"])
                                  : std::nullopt;
            const auto desc = entry.contains("description")
                                  ? detail::coords_of(entry["description"])
                                  : std::nullopt;
            if (!item || !desc) {
              ++set.rejected_entries;
              continue;
            }
            set.pairs.push_back({*item, *desc, {}});
          }
          return set;
        }
      }
    }
    ++pos;
  }
  throw Error(Errc::NoPredictionsFound, "no prediction object found in response text");
}

/// Clamp small overshoots to the frame window, drop unanchored or reversed
/// boxes, and flag the failure modes seen in practice (oversized boxes,
/// implausible item-description links). Never aborts; idempotent.
inline PredictionSet validate_pairs(const PredictionSet& input, const Frame& frame) {
  PredictionSet out;
  out.target_map_id = input.target_map_id;
  out.frame = frame;
  out.repairs_applied = input.repairs_applied;
  out.rejected_entries = input.rejected_entries;

  const double left = frame.origin_x, top = frame.origin_y;
  const double right = frame.origin_x + frame.width, bottom = frame.origin_y + frame.height;

  auto clamp_box = [&](std::array<double, 4>& c, bool& clamped) -> bool {
    if (!(c[0] < c[2] && c[1] < c[3])) return false;  // reversed or empty
    for (double v : c)
      if (!std::isfinite(v)) return false;
    const double w = c[2] - c[0], h = c[3] - c[1];
    const double over_l = std::max(0.0, left - c[0]);
    const double over_t = std::max(0.0, top - c[1]);
    const double over_r = std::max(0.0, c[2] - right);
    const double over_b = std::max(0.0, c[3] - bottom);
    if (over_l > kClampMaxProtrusionRatio * w || over_r > kClampMaxProtrusionRatio * w ||
        over_t > kClampMaxProtrusionRatio * h || over_b > kClampMaxProtrusionRatio * h)
      return false;
    if (over_l > 0 || over_r > 0 || over_t > 0 || over_b > 0) {
      c[0] = std::max(c[0], left);
      c[1] = std::max(c[1], top);
      c[2] = std::min(c[2], right);
      c[3] = std::min(c[3], bottom);
      clamped = true;
    }
    return c[0] < c[2] && c[1] < c[3];
  };

  for (PredictedPair pair : input.pairs) {
    bool clamped = false;
    if (!clamp_box(pair.item, clamped) || !clamp_box(pair.description, clamped)) {
      ++out.rejected_entries;
      continue;
    }
    if (clamped) {
      detail::add_tag(pair.flags, kTagClamped);
      detail::add_tag(out.repairs_applied, kTagClamped);
    }
    const double frame_area = frame.width * frame.height;
    const double item_area = (pair.item[2] - pair.item[0]) * (pair.item[3] - pair.item[1]);
    const double desc_area = (pair.description[2] - pair.description[0]) *
                             (pair.description[3] - pair.description[1]);
    if (item_area > kOversizedFrameAreaRatio * frame_area ||
        desc_area > kOversizedFrameAreaRatio * frame_area) {
      detail::add_tag(pair.flags, kTagOversized);
      detail::add_tag(out.repairs_applied, kTagOversized);
    }
    out.pairs.push_back(std::move(pair));
  }

  // Link plausibility: a pair whose boxes sit much farther apart than is
  // typical for this sheet probably got mislinked.
  if (out.pairs.size() >= 2) {
    std::vector<double> gaps;
    gaps.reserve(out.pairs.size());
    for (const auto& p : out.pairs) {
      const BBox item(p.item[0], p.item[1], p.item[2], p.item[3]);
      const BBox desc(p.description[0], p.description[1], p.description[2], p.description[3]);
      gaps.push_back(box_gap(item, desc));
    }
    std::vector<double> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted.size() % 2 ? sorted[sorted.size() / 2]
                                            : 0.5 * (sorted[sorted.size() / 2 - 1] +
                                                     sorted[sorted.size() / 2]);
    for (std::size_t i = 0; i < out.pairs.size(); ++i) {
      if (gaps[i] > 0.0 && gaps[i] > kSuspectLinkGapFactor * median) {
        detail::add_tag(out.pairs[i].flags, kTagSuspectLink);
        detail::add_tag(out.repairs_applied, kTagSuspectLink);
      }
    }
  }
  return out;
}

}  // namespace legendforge
