#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "legendforge/dataset.hpp"
#include "legendforge/error.hpp"
#include "legendforge/geometry.hpp"
#include "legendforge/jsonfmt.hpp"

namespace legendforge {

/// Task definition sent verbatim at the top of every prompt.
inline constexpr const char* kTaskString =
    "Given a scanned map legend area, detect legend items and their descriptions coordinates";

inline constexpr const char* kPlaceholder = "??";

/// Coordinate system used for the example coordinates inside the prompt:
/// parent-map pixels, or pixels local to the cropped legend image.
enum class CoordinateFrame { FullMap, CropLocal };

inline const char* to_string(CoordinateFrame f) {
  return f == CoordinateFrame::FullMap ? "fullmap" : "croplocal";
}

inline CoordinateFrame coordinate_frame_from(const std::string& s) {
  if (s == "fullmap") return CoordinateFrame::FullMap;
  if (s == "croplocal") return CoordinateFrame::CropLocal;
  throw Error(Errc::ValidationError, "unknown coordinate frame '" + s + "'");
}

struct RequestSettings {
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  // Observed responses run ~0.6k tokens; triple headroom.
  int max_output_tokens = 2048;
};

struct PromptSpec {
  const LegendSheet* example_sheet = nullptr;
  const LegendSheet* target_sheet = nullptr;
  int k = 15;
  CoordinateFrame coordinate_frame = CoordinateFrame::FullMap;
  RequestSettings settings;
};

struct ImageAttachment {
  std::string filename;  // raster basename, echoed in the prompt keys
  std::string media_type;
  std::string bytes;  // raw file content
};

/// The three prompt parts: example legend image, JSON text block, target
/// legend image, plus the request settings they ship with.
struct PromptBundle {
  ImageAttachment example_image;
  ImageAttachment target_image;
  std::string json_block;
  RequestSettings request_settings;
};

/// First k annotated pairs of the sheet in reading order. Pairs without a
/// description box never appear in prompts.
inline std::vector<LegendPair> select_examples(const LegendSheet& sheet, int k) {
  std::vector<LegendPair> annotated;
  for (const auto& p : sheet.pairs)
    if (p.description) annotated.push_back(p);
  if (k < 1 || static_cast<std::size_t>(k) > annotated.size())
    throw Error(Errc::NotEnoughExamples,
                fmt::format("{}: asked for {} example pairs but only {} annotated", sheet.map_id,
                            k, annotated.size()));
  annotated = reading_order(std::move(annotated));
  annotated.erase(annotated.begin() + k, annotated.end());
  return annotated;
}

namespace detail {

inline std::string media_type_for(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".tif" || ext == ".tiff") return "image/tiff";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  return "application/octet-stream";
}

inline ImageAttachment attach_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::MissingRaster, "cannot read image: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return {path.filename().string(), media_type_for(path), buf.str()};
}

inline std::string entry_lines(const std::string& item, const std::string& desc, bool last) {
  std::string s;
  s += "    {\n";
  s += "      \"legend_item\": " + item + ",\n";
  s += "      \"description\": " + desc + "\n";
  s += last ? "    }\n" : "    },\n";
  return s;
}

}  // namespace detail

/// Render the structured JSON block: the task string, k example entries
/// keyed by the example image's filename, and one placeholder entry keyed by
/// the target's. Byte-deterministic for identical inputs.
inline std::string build_json_block(const std::vector<LegendPair>& examples,
                                    const std::string& example_filename,
                                    const std::string& target_filename) {
  std::string s;
  s += "{\n";
  s += "  \"task\": " + json_string(kTaskString) + ",\n";
  s += "  \"examples from " + json_escape(example_filename) + "\": [\n";
  for (std::size_t i = 0; i < examples.size(); ++i)
    s += detail::entry_lines(coord_array(examples[i].item.coords()),
                             coord_array(examples[i].description->coords()),
                             i + 1 == examples.size());
  s += "  ],\n";
  s += "  \"predictions for " + json_escape(target_filename) + "\": [\n";
  const std::string holes = R"(["??", "??", "??", "??"])";
  s += detail::entry_lines(holes, holes, true);
  s += "  ]\n";
  s += "}";
  return s;
}

inline PromptBundle build_prompt(const PromptSpec& spec) {
  if (!spec.example_sheet || !spec.target_sheet)
    throw Error(Errc::ValidationError, "prompt spec missing sheets");
  auto examples = select_examples(*spec.example_sheet, spec.k);

  if (spec.coordinate_frame == CoordinateFrame::CropLocal) {
    const Frame from = spec.example_sheet->full_frame();
    const Frame to = spec.example_sheet->crop_frame;
    for (auto& p : examples) {
      p.item = translate(p.item, from, to);
      p.description = translate(*p.description, from, to);
    }
  }

  PromptBundle bundle;
  bundle.example_image = detail::attach_image(spec.example_sheet->raster_path);
  bundle.target_image = detail::attach_image(spec.target_sheet->raster_path);
  bundle.json_block = build_json_block(examples, bundle.example_image.filename,
                                       bundle.target_image.filename);
  bundle.request_settings = spec.settings;
  return bundle;
}

// Rough text tokenization density plus a flat per-image cost.
inline constexpr int kBytesPerToken = 4;
inline constexpr int kDefaultImageTokenSurcharge = 800;

inline long estimate_tokens(std::size_t json_block_bytes, int image_count,
                            int per_image_surcharge = kDefaultImageTokenSurcharge) {
  const long text = static_cast<long>((json_block_bytes + kBytesPerToken - 1) / kBytesPerToken);
  return text + static_cast<long>(image_count) * per_image_surcharge;
}

inline long estimate_tokens(const PromptBundle& bundle,
                            int per_image_surcharge = kDefaultImageTokenSurcharge) {
  return estimate_tokens(bundle.json_block.size(), 2, per_image_surcharge);
}

}  // namespace legendforge
