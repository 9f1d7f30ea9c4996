#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "legendforge/error.hpp"
#include "legendforge/geometry.hpp"
#include "legendforge/jsonfmt.hpp"
#include "legendforge/raster.hpp"

namespace legendforge {

inline constexpr int kIndexSchemaVersion = 1;
// 5 bits per channel: coarse enough to absorb scan noise, fine enough to
// keep rock-unit tints apart.
inline constexpr int kColorQuantBits = 5;
// Legend swatches carry dark outlines; skip a ring just inside the box.
inline constexpr int kSwatchBorderPx = 2;

/// Searchable metadata for one extracted legend entry.
struct LegendEntry {
  enum class Source { GroundTruth, Predicted };

  std::string map_id;
  std::string pair_id;
  BBox item_bbox;
  BBox description_bbox;
  Rgb dominant_color{};
  std::optional<std::string> description_text;  // externally transcribed
  Source source = Source::GroundTruth;

  bool operator==(const LegendEntry&) const = default;
};

using Index = std::vector<LegendEntry>;

inline const char* to_string(LegendEntry::Source s) {
  return s == LegendEntry::Source::GroundTruth ? "ground_truth" : "predicted";
}

inline LegendEntry::Source source_from(const std::string& s) {
  if (s == "ground_truth") return LegendEntry::Source::GroundTruth;
  if (s == "predicted") return LegendEntry::Source::Predicted;
  throw Error(Errc::ParseError, "unknown entry source '" + s + "'");
}

/// Modal quantized color of a box interior, excluding a 2 px ring inside the
/// box edge. The box is in raster-local pixel coordinates. Ties go to the
/// lower packed bin; the returned color is the bin's center.
inline Rgb dominant_color(const Raster& raster, const BBox& item) {
  const int shift = 8 - kColorQuantBits;
  const double b = static_cast<double>(kSwatchBorderPx);
  int x_begin = static_cast<int>(std::ceil(item.x1() + b));
  int y_begin = static_cast<int>(std::ceil(item.y1() + b));
  int x_end = static_cast<int>(std::floor(item.x2() - b));  // pixel cells [c, c+1)
  int y_end = static_cast<int>(std::floor(item.y2() - b));
  x_begin = std::max(x_begin, 0);
  y_begin = std::max(y_begin, 0);
  x_end = std::min(x_end, raster.width);
  y_end = std::min(y_end, raster.height);
  if (x_begin >= x_end || y_begin >= y_end)
    throw Error(Errc::EmptyRegion, "box interior has no pixels after border exclusion");

  std::vector<int> bins(1 << (3 * kColorQuantBits), 0);
  for (int y = y_begin; y < y_end; ++y)
    for (int x = x_begin; x < x_end; ++x) {
      const Rgb& px = raster.at(x, y);
      const int key = ((px[0] >> shift) << (2 * kColorQuantBits)) |
                      ((px[1] >> shift) << kColorQuantBits) | (px[2] >> shift);
      ++bins[key];
    }

  int best = 0;
  for (int key = 1; key < static_cast<int>(bins.size()); ++key)
    if (bins[key] > bins[best]) best = key;

  auto center = [shift](int v) {
    return static_cast<std::uint8_t>((v << shift) + ((1 << shift) - 1) / 2);
  };
  const int mask = (1 << kColorQuantBits) - 1;
  return {center((best >> (2 * kColorQuantBits)) & mask), center((best >> kColorQuantBits) & mask),
          center(best & mask)};
}

inline double color_distance(const Rgb& a, const Rgb& b) {
  const double dr = static_cast<double>(a[0]) - b[0];
  const double dg = static_cast<double>(a[1]) - b[1];
  const double db = static_cast<double>(a[2]) - b[2];
  return std::sqrt(dr * dr + dg * dg + db * db);
}

namespace detail {

inline std::string number(double v) { return fmt::format("{}", v); }

inline std::string entry_line(const LegendEntry& e) {
  auto arr = [](const BBox& b) {
    return fmt::format("[{}, {}, {}, {}]", number(b.x1()), number(b.y1()), number(b.x2()),
                       number(b.y2()));
  };
  std::string s = "{";
  s += "\"description_bbox\": " + arr(e.description_bbox) + ", ";
  if (e.description_text) s += "\"description_text\": " + json_string(*e.description_text) + ", ";
  s += fmt::format("\"dominant_color\": [{}, {}, {}], ", e.dominant_color[0], e.dominant_color[1],
                   e.dominant_color[2]);
  s += "\"item_bbox\": " + arr(e.item_bbox) + ", ";
  s += "\"map_id\": " + json_string(e.map_id) + ", ";
  s += "\"pair_id\": " + json_string(e.pair_id) + ", ";
  s += "\"source\": " + json_string(to_string(e.source)) + "}";
  return s;
}

}  // namespace detail

/// Persist entries as line-delimited JSON under a schema-version header.
/// Canonical order (map_id, pair_id), so identical entry sets give
/// byte-identical files. Writes a temp file then renames.
inline void index_build(Index entries, const std::filesystem::path& path) {
  std::sort(entries.begin(), entries.end(), [](const LegendEntry& a, const LegendEntry& b) {
    return std::tie(a.map_id, a.pair_id) < std::tie(b.map_id, b.pair_id);
  });
  for (std::size_t i = 1; i < entries.size(); ++i)
    if (entries[i].map_id == entries[i - 1].map_id && entries[i].pair_id == entries[i - 1].pair_id)
      throw Error(Errc::DuplicateEntry,
                  "duplicate index entry " + entries[i].map_id + "/" + entries[i].pair_id);

  std::string body = fmt::format("{{\"schema\": {}}}\n", kIndexSchemaVersion);
  for (const auto& e : entries) body += detail::entry_line(e) + "\n";

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write index: " + tmp.string());
    out << body;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot finalize index: " + path.string());
}

inline Index index_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open index: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, "index is empty: " + path.string());

  try {
    const auto header = nlohmann::json::parse(line);
    if (header.value("schema", -1) != kIndexSchemaVersion)
      throw Error(Errc::ParseError, "unsupported index schema in " + path.string());

    Index entries;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = nlohmann::json::parse(line);
      auto box = [&](const char* key) {
        const auto& a = j.at(key);
        return BBox(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(),
                    a.at(3).get<double>());
      };
      LegendEntry e{
          j.at("map_id").get<std::string>(),
          j.at("pair_id").get<std::string>(),
          box("item_bbox"),
          box("description_bbox"),
          {j.at("dominant_color").at(0).get<std::uint8_t>(),
           j.at("dominant_color").at(1).get<std::uint8_t>(),
           j.at("dominant_color").at(2).get<std::uint8_t>()},
          std::nullopt,
          source_from(j.at("source").get<std::string>()),
      };
      if (j.contains("description_text"))
        e.description_text = j["description_text"].get<std::string>();
      entries.push_back(std::move(e));
    }
    return entries;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, "index " + path.string() + ": " + e.what());
  }
}

struct Query {
  std::vector<std::string> text_terms;
  std::optional<Rgb> color;
  double max_distance = 0.0;
  std::optional<std::set<std::string>> map_filter;

  void validate() const {
    if (text_terms.empty() && !color && !map_filter)
      throw Error(Errc::ValidationError, "query needs at least one criterion");
  }
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

/// Entries satisfying every present criterion. Ranked by ascending color
/// distance when a color is given, lexicographically by (map_id, pair_id)
/// otherwise. Deterministic; an empty result is a valid answer.
inline Index search(const Index& index, const Query& q) {
  q.validate();
  struct Hit {
    double dist;
    const LegendEntry* entry;
  };
  std::vector<Hit> hits;
  for (const auto& e : index) {
    if (q.map_filter && !q.map_filter->count(e.map_id)) continue;
    if (!q.text_terms.empty()) {
      if (!e.description_text) continue;  // no transcription, text can never match
      const std::string hay = detail::lower(*e.description_text);
      bool all = true;
      for (const auto& term : q.text_terms)
        if (hay.find(detail::lower(term)) == std::string::npos) {
          all = false;
          break;
        }
      if (!all) continue;
    }
    double dist = 0.0;
    if (q.color) {
      dist = color_distance(*q.color, e.dominant_color);
      if (dist > q.max_distance) continue;
    }
    hits.push_back({dist, &e});
  }
  std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
    if (q.color && a.dist != b.dist) return a.dist < b.dist;
    return std::tie(a.entry->map_id, a.entry->pair_id) <
           std::tie(b.entry->map_id, b.entry->pair_id);
  });
  Index out;
  out.reserve(hits.size());
  for (const auto& h : hits) out.push_back(*h.entry);
  return out;
}

}  // namespace legendforge
