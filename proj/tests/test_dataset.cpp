#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "legendforge/dataset.hpp"
#include "support/helpers.hpp"

using namespace legendforge;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an Error");
}

}  // namespace

TEST_CASE("manifest round-trip", "[dataset]") {
  lftest::TempDir tmp;
  auto sheet = lftest::make_grid_sheet(tmp.path(), "alpha", 1, 2, 1000, 2000);
  save_annotations({sheet}, tmp.path() / "manifest.json", "demo");

  auto sheets = load_annotations(tmp.path() / "manifest.json");
  REQUIRE(sheets.size() == 1);
  CHECK(sheets[0].map_id == "alpha");
  REQUIRE(sheets[0].pairs.size() == 2);
  CHECK(sheets[0].pairs[0] == sheet.pairs[0]);
  CHECK(sheets[0].crop_frame == sheet.crop_frame);

  // Canonical form: saving what was loaded reproduces the bytes.
  save_annotations(sheets, tmp.path() / "again.json", "demo");
  CHECK(lftest::slurp(tmp.path() / "again.json") == lftest::slurp(tmp.path() / "manifest.json"));
}

TEST_CASE("realistic full-map pairs survive save+load byte-identically", "[dataset]") {
  lftest::TempDir tmp;
  lftest::spit(tmp.path() / "big_legend.png", "");  // existence is all that matters here
  LegendSheet sheet;
  sheet.map_id = "usgs_sample";
  sheet.raster_path = tmp.path() / "big_legend.png";
  sheet.crop_frame = Frame(4500, 400, 2800, 1000);
  sheet.pairs = {
      {"p01", BBox(6630.85, 472.34, 6779.79, 560.64), BBox(6214.89, 572.34, 7186.17, 621.28)},
      {"p02", BBox(4985.96, 1233.62, 5145.11, 1324.26), BBox(4572.34, 1244.68, 5342.55, 1298.94)},
  };
  save_annotations({sheet}, tmp.path() / "manifest.json", "usgs");
  const std::string first = lftest::slurp(tmp.path() / "manifest.json");
  CHECK(first.find("[6630.85, 472.34, 6779.79, 560.64]") != std::string::npos);

  auto loaded = load_annotations(tmp.path() / "manifest.json");
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].pairs == sheet.pairs);
  save_annotations(loaded, tmp.path() / "manifest.json", "usgs");
  CHECK(lftest::slurp(tmp.path() / "manifest.json") == first);
}

TEST_CASE("manifest validation failures", "[dataset]") {
  lftest::TempDir tmp;
  lftest::spit(tmp.path() / "m_legend.png", "");
  auto manifest = [&](const std::string& pairs) {
    return std::string(R"({"dataset": "bad", "maps": [{"map_id": "m", "raster": "m_legend.png",
      "crop_frame": {"origin_x": 0, "origin_y": 0, "width": 1000, "height": 1000},
      "pairs": [)") +
           pairs + "]}]}";
  };

  SECTION("description equal to item box") {
    lftest::spit(tmp.path() / "manifest.json",
                 manifest(R"({"pair_id": "a", "legend_item": [10, 10, 50, 34],
                              "description": [10, 10, 50, 34]})"));
    CHECK(code_of([&] { load_annotations(tmp.path()); }) == Errc::ValidationError);
  }
  SECTION("degenerate box") {
    lftest::spit(tmp.path() / "manifest.json",
                 manifest(R"({"pair_id": "a", "legend_item": [50, 10, 50, 34],
                              "description": [60, 10, 200, 34]})"));
    CHECK(code_of([&] { load_annotations(tmp.path()); }) == Errc::ValidationError);
  }
  SECTION("box outside crop frame") {
    lftest::spit(tmp.path() / "manifest.json",
                 manifest(R"({"pair_id": "a", "legend_item": [10, 10, 50, 34],
                              "description": [900, 10, 1200, 34]})"));
    CHECK(code_of([&] { load_annotations(tmp.path()); }) == Errc::ValidationError);
  }
  SECTION("slight protrusion within slop is fine") {
    lftest::spit(tmp.path() / "manifest.json",
                 manifest(R"({"pair_id": "a", "legend_item": [10, 10, 50, 34],
                              "description": [60, 10, 1000.5, 34]})"));
    CHECK_NOTHROW(load_annotations(tmp.path()));
  }
  SECTION("malformed JSON") {
    lftest::spit(tmp.path() / "manifest.json", "{\"dataset\": ");
    CHECK(code_of([&] { load_annotations(tmp.path()); }) == Errc::ParseError);
  }
}

TEST_CASE("missing raster detected unless disabled", "[dataset]") {
  lftest::TempDir tmp;
  lftest::spit(tmp.path() / "manifest.json", R"({"dataset": "d", "maps": [{
    "map_id": "m", "raster": "nope_legend.png",
    "crop_frame": {"origin_x": 0, "origin_y": 0, "width": 100, "height": 100},
    "pairs": []}]})");
  CHECK(code_of([&] { load_annotations(tmp.path()); }) == Errc::MissingRaster);
  CHECK_NOTHROW(load_annotations(tmp.path(), {.check_rasters = false}));
}

TEST_CASE("sheets come back sorted by map_id", "[dataset]") {
  lftest::TempDir tmp;
  auto b = lftest::make_grid_sheet(tmp.path(), "bravo", 1, 1, 0, 0);
  auto a = lftest::make_grid_sheet(tmp.path(), "alpha", 1, 1, 0, 0);
  save_annotations({b, a}, tmp.path() / "manifest.json", "two");
  auto sheets = load_annotations(tmp.path());
  REQUIRE(sheets.size() == 2);
  CHECK(sheets[0].map_id == "alpha");
  CHECK(sheets[1].map_id == "bravo");
}

TEST_CASE("raster loading", "[dataset]") {
  lftest::TempDir tmp;

  SECTION("solid color PNG") {
    save_raster_png(lftest::solid_raster(100, 50, {255, 0, 0}), tmp.path() / "red.png");
    LegendSheet sheet{"red", tmp.path() / "red.png", Frame(0, 0, 100, 50), {}, ""};
    const Raster r = load_raster(sheet);
    CHECK(r.width == 100);
    CHECK(r.height == 50);
    CHECK(std::all_of(r.pixels.begin(), r.pixels.end(),
                      [](const Rgb& p) { return p == Rgb{255, 0, 0}; }));
  }
  SECTION("dimension mismatch against crop frame") {
    save_raster_png(lftest::solid_raster(100, 50, {1, 2, 3}), tmp.path() / "img.png");
    LegendSheet sheet{"img", tmp.path() / "img.png", Frame(0, 0, 200, 50), {}, ""};
    CHECK(code_of([&] { load_raster(sheet); }) == Errc::DimensionMismatch);
  }
  SECTION("16-bit TIFF truncates to the high byte") {
    cv::Mat deep(4, 4, CV_16UC3, cv::Scalar(0xCDAB, 0x3412, 0x00FF));  // BGR order
    REQUIRE(cv::imwrite((tmp.path() / "deep.tiff").string(), deep));
    const Raster r = load_raster_file(tmp.path() / "deep.tiff");
    REQUIRE(r.width == 4);
    CHECK(r.at(0, 0) == Rgb{0x00, 0x34, 0xCD});  // RGB of (0x00FF, 0x3412, 0xCDAB) >> 8
  }
  SECTION("grayscale replicates channels") {
    cv::Mat gray(3, 3, CV_8UC1, cv::Scalar(77));
    REQUIRE(cv::imwrite((tmp.path() / "gray.png").string(), gray));
    const Raster r = load_raster_file(tmp.path() / "gray.png");
    CHECK(r.at(1, 1) == Rgb{77, 77, 77});
  }
}

TEST_CASE("reading order", "[dataset]") {
  auto pair_at = [](const std::string& id, double x, double y) {
    return LegendPair{id, BBox(x, y, x + 40, y + 24), BBox(x + 50, y, x + 190, y + 24)};
  };

  SECTION("stacked pairs: top first") {
    auto ordered = reading_order({pair_at("low", 10, 300), pair_at("high", 10, 10)});
    CHECK(ordered[0].pair_id == "high");
  }
  SECTION("same 50 px band: leftmost first") {
    auto ordered = reading_order({pair_at("right", 400, 20), pair_at("left", 10, 45)});
    CHECK(ordered[0].pair_id == "left");
  }
  SECTION("permutation invariant and idempotent") {
    std::vector<LegendPair> pairs;
    for (int i = 0; i < 20; ++i)
      pairs.push_back(pair_at("p" + std::to_string(i), 10 + (i % 4) * 230, 10 + (i / 4) * 60));
    auto sorted = reading_order(pairs);
    CHECK(reading_order(sorted) == sorted);
    std::mt19937 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
      std::shuffle(pairs.begin(), pairs.end(), rng);
      CHECK(reading_order(pairs) == sorted);
    }
  }
}
