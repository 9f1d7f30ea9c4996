#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "legendforge/response.hpp"
#include "support/helpers.hpp"

using namespace legendforge;
using Catch::Approx;

namespace {

// Shape of a well-behaved model reply, comment and all.
const char* kModelReply = R"({
  "predictions for target_map_legend.tiff": [
    {
      "legend_item": [4700.25, 678.40, 4852.67, 750.95],
      "description": [4302.14, 690.50, 5100.80, 738.80]
    },
    {
      "legend_item": [3150.10, 910.25, 3305.20, 980.30],
      "description": [2800.00, 920.40, 3500.90, 965.00]
    }
    // ... additional detected pairs
  ]
})";

const Frame kWideFrame(2500, 600, 3000, 500);

bool has_tag(const std::vector<std::string>& tags, const char* tag) {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

}  // namespace

TEST_CASE("parses a commented model reply", "[response]") {
  const auto set = parse_response(kModelReply, kWideFrame);
  REQUIRE(set.pairs.size() == 2);
  CHECK(set.rejected_entries == 0);
  CHECK(has_tag(set.repairs_applied, kTagComment));
  CHECK(set.target_map_id == "target_map_legend.tiff");
  CHECK(set.pairs[0].item == std::array<double, 4>{4700.25, 678.40, 4852.67, 750.95});
  CHECK(set.pairs[1].description == std::array<double, 4>{2800.00, 920.40, 3500.90, 965.00});
}

TEST_CASE("strips markdown fences", "[response]") {
  const std::string fenced = "Here are the detections you asked for:\n```json\n" +
                             std::string(kModelReply) + "\n```\nLet me know if ...";
  const auto set = parse_response(fenced, kWideFrame);
  REQUIRE(set.pairs.size() == 2);
  CHECK(has_tag(set.repairs_applied, kTagCodeFence));
}

TEST_CASE("repairs trailing commas", "[response]") {
  const auto set = parse_response(R"({"predictions for m.png": [
    {"legend_item": [1, 1, 5, 5], "description": [6, 1, 20, 5],},
  ]})",
                                  Frame(0, 0, 100, 100));
  REQUIRE(set.pairs.size() == 1);
  CHECK(has_tag(set.repairs_applied, kTagTrailingComma));
}

TEST_CASE("placeholder echoes and malformed entries are rejected, not fatal", "[response]") {
  const auto set = parse_response(R"({"predictions for m.png": [
    {"legend_item": ["??", "??", "??", "??"], "description": ["??", "??", "??", "??"]},
    {"legend_item": [1, 1, 5, 5], "description": [6, 1, 20, 5]},
    {"legend_item": [1, 1, 5]},
    "just a string"
  ]})",
                                  Frame(0, 0, 100, 100));
  CHECK(set.pairs.size() == 1);
  CHECK(set.rejected_entries == 3);
}

TEST_CASE("prediction object may be buried in prose or nesting", "[response]") {
  const auto set = parse_response(
      "Sure! The result {not json} is:\n"
      R"({"analysis": "ok", "result": {"predictions for m.png": [
        {"legend_item": [1, 1, 5, 5], "description": [6, 1, 20, 5]}]}})",
      Frame(0, 0, 100, 100));
  CHECK(set.pairs.size() == 1);

  // An unterminated outer brace must not hide a balanced inner object.
  const auto rescued = parse_response(
      R"(trace: { started {"predictions for m.png": [
        {"legend_item": [1, 1, 5, 5], "description": [6, 1, 20, 5]}]})",
      Frame(0, 0, 100, 100));
  CHECK(rescued.pairs.size() == 1);
}

TEST_CASE("comment stripping leaves string contents alone", "[response]") {
  bool applied = false;
  const std::string kept =
      repair::strip_line_comments(R"({"note": "see http://x//y", "a": 1})", applied);
  CHECK_FALSE(applied);
  CHECK(kept == R"({"note": "see http://x//y", "a": 1})");

  const std::string stripped = repair::strip_line_comments("[1, 2] // tail", applied);
  CHECK(applied);
  CHECK(stripped == "[1, 2] ");

  // Escaped quote does not end the string early.
  const std::string tricky =
      repair::strip_line_comments(R"({"s": "a\"b // not a comment"})", applied);
  CHECK_FALSE(applied);
  CHECK(tricky == R"({"s": "a\"b // not a comment"})");
}

TEST_CASE("no predictions anywhere", "[response]") {
  CHECK_THROWS_AS(parse_response("the model refused", Frame(0, 0, 10, 10)), Error);
  CHECK_THROWS_AS(parse_response("{\"answer\": 42}", Frame(0, 0, 10, 10)), Error);
  CHECK_THROWS_AS(parse_response("", Frame(0, 0, 10, 10)), Error);
  try {
    parse_response("nope", Frame(0, 0, 10, 10));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoPredictionsFound);
  }
}

TEST_CASE("random-bytes fuzzing never crashes", "[response][fuzz]") {
  std::mt19937 rng(20250904);
  std::uniform_int_distribution<int> len(0, 400);
  std::uniform_int_distribution<int> byte(0, 255);
  const Frame frame(0, 0, 1000, 1000);
  int parsed = 0, missed = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s(static_cast<std::size_t>(len(rng)), '\0');
    for (auto& c : s) c = static_cast<char>(byte(rng));
    // Seed a fraction with JSON-ish shrapnel to reach deeper code paths.
    if (i % 7 == 0) s.insert(s.size() / 2, "{\"predictions for ");
    if (i % 11 == 0) s.insert(0, "```");
    try {
      auto set = parse_response(s, frame);
      ++parsed;
      for (const auto& p : set.pairs)
        for (double v : p.item) REQUIRE(std::isfinite(v));
    } catch (const Error& e) {
      REQUIRE(e.code() == Errc::NoPredictionsFound);
      ++missed;
    }
  }
  CHECK(parsed + missed == 10000);
}

TEST_CASE("validate clamps small overshoot", "[response]") {
  const Frame frame(0, 0, 5000, 1000);
  PredictionSet set;
  set.frame = frame;
  set.pairs.push_back({{4900, 100, 5010, 160}, {4000, 100, 4400, 160}, {}});  // 10 px over

  const auto v = validate_pairs(set, frame);
  REQUIRE(v.pairs.size() == 1);
  CHECK(v.pairs[0].item[2] == 5000.0);
  CHECK(has_tag(v.pairs[0].flags, kTagClamped));
  CHECK(has_tag(v.repairs_applied, kTagClamped));
  CHECK(v.rejected_entries == 0);
}

TEST_CASE("validate drops unanchored and reversed boxes", "[response]") {
  const Frame frame(0, 0, 100, 100);
  PredictionSet set;
  set.frame = frame;
  set.pairs.push_back({{90, 10, 140, 20}, {10, 10, 20, 20}, {}});   // 80% past the edge
  set.pairs.push_back({{100, 100, 50, 50}, {10, 10, 20, 20}, {}});  // reversed
  set.pairs.push_back({{10, 10, 20, 20}, {30, 10, 60, 20}, {}});    // fine

  const auto v = validate_pairs(set, frame);
  CHECK(v.pairs.size() == 1);
  CHECK(v.rejected_entries == 2);
}

TEST_CASE("oversized boxes are kept but flagged", "[response]") {
  const Frame frame(0, 0, 100, 100);
  PredictionSet set;
  set.frame = frame;
  set.pairs.push_back({{2, 2, 97, 97}, {1, 1, 9, 9}, {}});  // ~90% of the frame

  const auto v = validate_pairs(set, frame);
  REQUIRE(v.pairs.size() == 1);
  CHECK(has_tag(v.pairs[0].flags, kTagOversized));
}

TEST_CASE("implausibly distant pairs get the suspect-link flag", "[response]") {
  const Frame frame(0, 0, 2000, 2000);
  PredictionSet set;
  set.frame = frame;
  // Typical pairs: ~10 px gap. One pair links across the sheet.
  for (int i = 0; i < 4; ++i) {
    const double y = 10 + i * 40.0;
    set.pairs.push_back({{10, y, 50, y + 24}, {60, y, 200, y + 24}, {}});
  }
  set.pairs.push_back({{10, 300, 50, 324}, {1500, 1800, 1900, 1824}, {}});

  const auto v = validate_pairs(set, frame);
  REQUIRE(v.pairs.size() == 5);
  CHECK_FALSE(has_tag(v.pairs[0].flags, kTagSuspectLink));
  CHECK(has_tag(v.pairs[4].flags, kTagSuspectLink));
}

TEST_CASE("validation is idempotent", "[response]") {
  const Frame frame(100, 50, 500, 400);
  PredictionSet set;
  set.target_map_id = "m";
  set.frame = frame;
  set.repairs_applied = {kTagComment};
  set.rejected_entries = 1;
  set.pairs.push_back({{90, 60, 140, 90}, {150, 60, 300, 90}, {}});   // clamps left
  set.pairs.push_back({{110, 60, 590, 440}, {110, 60, 200, 90}, {}});  // oversized
  set.pairs.push_back({{200, 100, 240, 124}, {250, 100, 380, 124}, {}});

  const auto once = validate_pairs(set, frame);
  const auto twice = validate_pairs(once, frame);
  CHECK(twice == once);
}
