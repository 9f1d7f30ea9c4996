#pragma once

#include <algorithm>
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

// An item box may not essentially coincide with its description box.
inline constexpr double kPairOverlapLimit = 0.95;

/// One legend swatch linked to its description text block. Symbol-only
/// entries carry no description box.
struct LegendPair {
  std::string pair_id;
  BBox item;
  std::optional<BBox> description;

  bool operator==(const LegendPair&) const = default;
};

inline void check_pair_distinct(const LegendPair& p) {
  if (!p.description) return;
  const double inter = intersection_area(p.item, *p.description);
  const double lo = std::min(p.item.area(), p.description->area());
  if (inter / lo >= kPairOverlapLimit)
    throw Error(Errc::ValidationError,
                "pair '" + p.pair_id + "': item and description boxes are near-duplicates");
}

/// A cropped legend-area raster, its window within the parent map, and the
/// ground-truth pairs annotated on it (empty for unannotated targets).
/// Pair coordinates are stored in the parent-map system.
struct LegendSheet {
  std::string map_id;
  std::filesystem::path raster_path;
  Frame crop_frame;
  std::vector<LegendPair> pairs;
  std::string provenance;

  /// Smallest map-level frame that spans the crop window.
  Frame full_frame() const {
    return Frame(0.0, 0.0, crop_frame.origin_x + crop_frame.width,
                 crop_frame.origin_y + crop_frame.height);
  }
  Frame local_frame() const { return crop_frame.local(); }
};

struct LoadOptions {
  bool check_rasters = true;
};

namespace detail {

inline std::array<double, 4> coord4(const nlohmann::json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4 || !std::all_of(j.begin(), j.end(), [](const auto& v) {
        return v.is_number();
      }))
    throw Error(Errc::ParseError, ctx + ": expected array of 4 numbers");
  return {j[0].template get<double>(), j[1].template get<double>(), j[2].template get<double>(),
          j[3].template get<double>()};
}

inline BBox bbox_from(const nlohmann::json& j, const std::string& ctx) {
  const auto c = coord4(j, ctx);
  auto b = BBox::try_make(c);
  if (!b)
    throw Error(Errc::ValidationError,
                ctx + ": degenerate or negative box " + coord_array(c));
  return *b;
}

}  // namespace detail

/// Parse a dataset manifest (a JSON file, or a directory holding
/// manifest.json). Sheets come back sorted by map_id with every invariant
/// enforced; raster paths resolve relative to the manifest location.
inline std::vector<LegendSheet> load_annotations(const std::filesystem::path& path,
                                                 const LoadOptions& opts = {}) {
  namespace fs = std::filesystem;
  fs::path manifest = path;
  if (fs::is_directory(manifest)) manifest /= "manifest.json";
  std::ifstream in(manifest);
  if (!in) throw Error(Errc::IoError, "cannot open manifest: " + manifest.string());

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, "manifest " + manifest.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("maps") || !doc["maps"].is_array())
    throw Error(Errc::ParseError, "manifest " + manifest.string() + ": missing \"maps\" array");

  const fs::path base = manifest.parent_path();
  std::vector<LegendSheet> sheets;
  std::set<std::string> seen_ids;

  for (const auto& m : doc["maps"]) {
    LegendSheet sheet;
    try {
      sheet.map_id = m.at("map_id").get<std::string>();
      const auto& cf = m.at("crop_frame");
      sheet.crop_frame = Frame(cf.at("origin_x").get<double>(), cf.at("origin_y").get<double>(),
                               cf.at("width").get<double>(), cf.at("height").get<double>());
      sheet.raster_path = base / m.at("raster").get<std::string>();
      sheet.provenance = m.value("provenance", std::string());
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, "manifest map entry: " + std::string(e.what()));
    }
    if (!seen_ids.insert(sheet.map_id).second)
      throw Error(Errc::ValidationError, "duplicate map_id '" + sheet.map_id + "'");

    std::set<std::string> pair_ids;
    for (const auto& pj : m.value("pairs", nlohmann::json::array())) {
      LegendPair pair{
          pj.value("pair_id", std::string()),
          detail::bbox_from(pj.at("legend_item"), sheet.map_id + " legend_item"),
          std::nullopt,
      };
      if (pj.contains("description"))
        pair.description = detail::bbox_from(pj["description"], sheet.map_id + " description");
      if (pair.pair_id.empty())
        throw Error(Errc::ParseError, sheet.map_id + ": pair without pair_id");
      if (!pair_ids.insert(pair.pair_id).second)
        throw Error(Errc::ValidationError,
                    sheet.map_id + ": duplicate pair_id '" + pair.pair_id + "'");
      check_pair_distinct(pair);
      if (!contains(sheet.crop_frame, pair.item, kFrameSlopPx) ||
          (pair.description && !contains(sheet.crop_frame, *pair.description, kFrameSlopPx)))
        throw Error(Errc::ValidationError,
                    sheet.map_id + ": pair '" + pair.pair_id + "' outside crop frame");
      sheet.pairs.push_back(std::move(pair));
    }

    if (opts.check_rasters && !std::filesystem::exists(sheet.raster_path))
      throw Error(Errc::MissingRaster,
                  sheet.map_id + ": raster not found: " + sheet.raster_path.string());
    sheets.push_back(std::move(sheet));
  }

  std::sort(sheets.begin(), sheets.end(),
            [](const LegendSheet& a, const LegendSheet& b) { return a.map_id < b.map_id; });
  return sheets;
}

/// Canonical manifest writer: sorted keys, 2-decimal coordinates, LF line
/// endings. save(load(m)) is byte-identical for manifests in this form.
inline std::string manifest_to_string(const std::vector<LegendSheet>& sheets,
                                      const std::string& dataset_name,
                                      const std::filesystem::path& base_dir = {}) {
  std::string s;
  s += "{\n";
  s += "  \"dataset\": " + json_string(dataset_name) + ",\n";
  s += "  \"maps\": [";
  for (std::size_t i = 0; i < sheets.size(); ++i) {
    const LegendSheet& sh = sheets[i];
    const Frame& f = sh.crop_frame;
    std::string raster = base_dir.empty()
                             ? sh.raster_path.string()
                             : std::filesystem::relative(sh.raster_path, base_dir).string();
    s += i ? ",\n    {\n" : "\n    {\n";
    s += "      \"crop_frame\": {\"height\": " + fmt_coord(f.height) +
         ", \"origin_x\": " + fmt_coord(f.origin_x) + ", \"origin_y\": " + fmt_coord(f.origin_y) +
         ", \"width\": " + fmt_coord(f.width) + "},\n";
    s += "      \"map_id\": " + json_string(sh.map_id) + ",\n";
    s += "      \"pairs\": [";
    for (std::size_t k = 0; k < sh.pairs.size(); ++k) {
      const LegendPair& p = sh.pairs[k];
      s += k ? ",\n        {" : "\n        {";
      if (p.description) s += "\"description\": " + coord_array(p.description->coords()) + ", ";
      s += "\"legend_item\": " + coord_array(p.item.coords());
      s += ", \"pair_id\": " + json_string(p.pair_id) + "}";
    }
    s += sh.pairs.empty() ? "],\n" : "\n      ],\n";
    if (!sh.provenance.empty()) s += "      \"provenance\": " + json_string(sh.provenance) + ",\n";
    s += "      \"raster\": " + json_string(raster) + "\n";
    s += "    }";
  }
  s += sheets.empty() ? "]\n" : "\n  ]\n";
  s += "}\n";
  return s;
}

inline void save_annotations(const std::vector<LegendSheet>& sheets,
                             const std::filesystem::path& path,
                             const std::string& dataset_name) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write manifest: " + path.string());
  out << manifest_to_string(sheets, dataset_name, path.parent_path());
}

/// Load and decode a sheet's raster, checking it against the crop frame.
inline Raster load_raster(const LegendSheet& sheet) {
  Raster r = load_raster_file(sheet.raster_path);
  const long fw = std::lround(sheet.crop_frame.width);
  const long fh = std::lround(sheet.crop_frame.height);
  if (r.width != fw || r.height != fh)
    throw Error(Errc::DimensionMismatch,
                fmt::format("{}: raster is {}x{} but crop frame says {}x{}", sheet.map_id, r.width,
                            r.height, fw, fh));
  return r;
}

// Legend rows on full-resolution USGS scans exceed 50 px, so 50 px bands
// approximate rows without any layout analysis.
inline constexpr double kReadingBandPx = 50.0;

/// Deterministic top-to-bottom, left-to-right order over pairs: sort by
/// 50 px row band of the item's top edge, then by its left edge.
/// Permutation-invariant (full coordinate tie-break) and idempotent.
inline std::vector<LegendPair> reading_order(std::vector<LegendPair> pairs) {
  auto key = [](const LegendPair& p) {
    return std::tuple(std::floor(p.item.y1() / kReadingBandPx), p.item.x1(), p.item.y1(),
                      p.item.x2(), p.item.y2(), p.pair_id);
  };
  std::sort(pairs.begin(), pairs.end(),
            [&](const LegendPair& a, const LegendPair& b) { return key(a) < key(b); });
  return pairs;
}

}  // namespace legendforge
