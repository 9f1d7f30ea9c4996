#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>
#include <sstream>
#include <string>

#include "legendforge/dataset.hpp"
#include "legendforge/geometry.hpp"
#include "legendforge/raster.hpp"

namespace lftest {

inline std::filesystem::path source_dir() { return LEGENDFORGE_SOURCE_DIR; }
inline std::filesystem::path fixture_dir() { return source_dir() / "tests" / "fixtures"; }

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("legendforge-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spit(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  out << body;
}

/// Random box with integer corners in [0, limit); at least 1x1.
inline legendforge::BBox random_int_box(std::mt19937& rng, int limit) {
  std::uniform_int_distribution<int> coord(0, limit - 2);
  std::uniform_int_distribution<int> extent(1, limit / 2);
  const int x1 = coord(rng), y1 = coord(rng);
  const int x2 = std::min(limit - 1, x1 + extent(rng));
  const int y2 = std::min(limit - 1, y1 + extent(rng));
  return legendforge::BBox(x1, y1, std::max(x2, x1 + 1), std::max(y2, y1 + 1));
}

inline legendforge::Raster solid_raster(int w, int h, legendforge::Rgb color) {
  legendforge::Raster r;
  r.width = w;
  r.height = h;
  r.pixels.assign(static_cast<std::size_t>(w) * h, color);
  return r;
}

inline void fill_rect(legendforge::Raster& r, int x1, int y1, int x2, int y2,
                      legendforge::Rgb color) {
  for (int y = std::max(0, y1); y < std::min(r.height, y2); ++y)
    for (int x = std::max(0, x1); x < std::min(r.width, x2); ++x) r.at(x, y) = color;
}

inline legendforge::Rgb palette_color(int i) {
  return {static_cast<std::uint8_t>((i * 37) % 200 + 40),
          static_cast<std::uint8_t>((i * 73) % 200 + 40),
          static_cast<std::uint8_t>((i * 113) % 200 + 40)};
}

// Grid layout used by synthetic sheets (local pixel coordinates).
inline constexpr int kSwatchW = 40, kSwatchH = 24;
inline constexpr int kDescW = 140;
inline constexpr int kCellW = 220, kCellH = 60;

/// Synthetic legend sheet: `rows x cols` swatch/description pairs drawn on a
/// white raster, ground truth in parent-map coordinates. Writes the PNG
/// into `dir`.
inline legendforge::LegendSheet make_grid_sheet(const std::filesystem::path& dir,
                                                const std::string& map_id, int rows, int cols,
                                                double origin_x, double origin_y) {
  using namespace legendforge;
  const int w = 40 + cols * kCellW;
  const int h = 20 + rows * kCellH;
  Raster raster = solid_raster(w, h, {255, 255, 255});

  LegendSheet sheet;
  sheet.map_id = map_id;
  sheet.raster_path = dir / (map_id + "_legend.png");
  sheet.crop_frame = Frame(origin_x, origin_y, w, h);
  sheet.provenance = "synthetic grid fixture";

  int idx = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c, ++idx) {
      const int x = 20 + c * kCellW;
      const int y = 16 + r * kCellH;
      fill_rect(raster, x, y, x + kSwatchW, y + kSwatchH, {10, 10, 10});  // outline
      fill_rect(raster, x + 1, y + 1, x + kSwatchW - 1, y + kSwatchH - 1, palette_color(idx));
      fill_rect(raster, x + kSwatchW + 10, y, x + kSwatchW + 10 + kDescW, y + kSwatchH,
                {210, 210, 210});
      LegendPair pair{
          map_id + "-p" + (idx < 9 ? "0" : "") + std::to_string(idx + 1),
          BBox(origin_x + x, origin_y + y, origin_x + x + kSwatchW, origin_y + y + kSwatchH),
          BBox(origin_x + x + kSwatchW + 10, origin_y + y,
               origin_x + x + kSwatchW + 10 + kDescW, origin_y + y + kSwatchH),
      };
      sheet.pairs.push_back(std::move(pair));
    }
  save_raster_png(raster, sheet.raster_path);
  return sheet;
}

}  // namespace lftest
