#pragma once

// Independent reference implementations the real code is checked against.
// These deliberately use the dumbest correct algorithm available.

#include <cmath>
#include <cstdint>
#include <vector>

#include "legendforge/evaluation.hpp"
#include "legendforge/geometry.hpp"
#include "legendforge/raster.hpp"

namespace lftest {

/// IoU by counting unit pixels on an integer grid. Boxes must have integer
/// corners; pixel (x, y) belongs to a box iff x in [x1, x2) and y in [y1, y2).
inline double iou_pixel_oracle(const legendforge::BBox& a, const legendforge::BBox& b) {
  const int lo_x = static_cast<int>(std::min(a.x1(), b.x1()));
  const int lo_y = static_cast<int>(std::min(a.y1(), b.y1()));
  const int hi_x = static_cast<int>(std::max(a.x2(), b.x2()));
  const int hi_y = static_cast<int>(std::max(a.y2(), b.y2()));
  long inter = 0, uni = 0;
  for (int y = lo_y; y < hi_y; ++y)
    for (int x = lo_x; x < hi_x; ++x) {
      const bool in_a = x >= a.x1() && x < a.x2() && y >= a.y1() && y < a.y2();
      const bool in_b = x >= b.x1() && x < b.x2() && y >= b.y1() && y < b.y2();
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Exhaustive best one-to-one assignment among pairs with iou >= threshold:
/// maximize cardinality, then total IoU. Assumes small instances.
struct BruteForceMatch {
  std::size_t cardinality = 0;
  double total_iou = 0.0;
};

inline BruteForceMatch brute_force_best_matching(const std::vector<legendforge::BBox>& preds,
                                                 const std::vector<legendforge::BBox>& gts,
                                                 double threshold) {
  std::vector<std::vector<double>> iou_of(preds.size(), std::vector<double>(gts.size(), -1.0));
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = legendforge::iou(preds[p], gts[g]);
      if (v >= threshold) iou_of[p][g] = v;
    }

  BruteForceMatch best;
  std::vector<bool> g_used(gts.size(), false);

  auto dfs = [&](auto&& self, std::size_t p, std::size_t count, double total) -> void {
    if (p == preds.size()) {
      if (count > best.cardinality ||
          (count == best.cardinality && total > best.total_iou)) {
        best.cardinality = count;
        best.total_iou = total;
      }
      return;
    }
    self(self, p + 1, count, total);  // leave prediction p unmatched
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (g_used[g] || iou_of[p][g] < 0.0) continue;
      g_used[g] = true;
      self(self, p + 1, count + 1, total + iou_of[p][g]);
      g_used[g] = false;
    }
  };
  dfs(dfs, 0, 0, 0.0);
  return best;
}

/// Modal 5-bit color bin by building the complete histogram over the same
/// interior-minus-border region, with the same low-bin tie rule.
inline legendforge::Rgb dominant_color_oracle(const legendforge::Raster& raster,
                                              const legendforge::BBox& item) {
  std::vector<long> bins(32768, 0);
  for (int y = 0; y < raster.height; ++y)
    for (int x = 0; x < raster.width; ++x) {
      if (x < item.x1() + 2.0 || x + 1 > item.x2() - 2.0) continue;
      if (y < item.y1() + 2.0 || y + 1 > item.y2() - 2.0) continue;
      const legendforge::Rgb& px = raster.at(x, y);
      ++bins[((px[0] >> 3) << 10) | ((px[1] >> 3) << 5) | (px[2] >> 3)];
    }
  int best = 0;
  for (int k = 1; k < 32768; ++k)
    if (bins[k] > bins[best]) best = k;
  auto center = [](int v5) { return static_cast<std::uint8_t>((v5 << 3) + 3); };
  return {center((best >> 10) & 31), center((best >> 5) & 31), center(best & 31)};
}

}  // namespace lftest
