#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "legendforge/dataset.hpp"
#include "legendforge/error.hpp"
#include "legendforge/geometry.hpp"

namespace legendforge {

inline constexpr double kDefaultIouThreshold = 0.5;

/// One-to-one assignment between predicted and ground-truth boxes.
struct MatchResult {
  struct Match {
    std::size_t prediction;
    std::size_t ground_truth;
    double iou;
  };
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::size_t> unmatched_ground_truth;
  double threshold = kDefaultIouThreshold;
};

/// Greedy descending-IoU matching over all cross pairs at or above the
/// threshold. One-to-one; ties broken by lower prediction index, then lower
/// ground-truth index.
inline MatchResult match_boxes(const std::vector<BBox>& predictions,
                               const std::vector<BBox>& ground_truth, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(Errc::ValidationError, "IoU threshold must be in (0, 1]");

  struct Edge {
    double iou;
    std::size_t p, g;
  };
  std::vector<Edge> edges;
  for (std::size_t p = 0; p < predictions.size(); ++p)
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const double v = iou(predictions[p], ground_truth[g]);
      if (v >= threshold) edges.push_back({v, p, g});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.p != b.p) return a.p < b.p;
    return a.g < b.g;
  });

  MatchResult result;
  result.threshold = threshold;
  std::vector<bool> p_used(predictions.size(), false), g_used(ground_truth.size(), false);
  for (const Edge& e : edges) {
    if (p_used[e.p] || g_used[e.g]) continue;
    p_used[e.p] = g_used[e.g] = true;
    result.matches.push_back({e.p, e.g, e.iou});
  }
  for (std::size_t p = 0; p < predictions.size(); ++p)
    if (!p_used[p]) result.unmatched_predictions.push_back(p);
  for (std::size_t g = 0; g < ground_truth.size(); ++g)
    if (!g_used[g]) result.unmatched_ground_truth.push_back(g);
  return result;
}

struct ClassMetrics {
  long tp = 0;
  long fp = 0;
  long fn = 0;
  double iou_sum = 0.0;  // over matched pairs
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_iou = 0.0;            // over matched pairs; 0 when none
  double mean_iou_penalized = 0.0;  // over all ground truth, unmatched count as 0
};

inline ClassMetrics finalize_metrics(long tp, long fp, long fn, double iou_sum) {
  ClassMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.iou_sum = iou_sum;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  m.mean_iou = tp > 0 ? iou_sum / tp : 0.0;
  m.mean_iou_penalized = tp + fn > 0 ? iou_sum / (tp + fn) : 0.0;
  return m;
}

inline ClassMetrics score(const MatchResult& match) {
  double iou_sum = 0.0;
  for (const auto& m : match.matches) iou_sum += m.iou;
  return finalize_metrics(static_cast<long>(match.matches.size()),
                          static_cast<long>(match.unmatched_predictions.size()),
                          static_cast<long>(match.unmatched_ground_truth.size()), iou_sum);
}

struct MapEval {
  std::string map_id;
  ClassMetrics legend_item;
  ClassMetrics description;
};

struct EvalReport {
  std::vector<MapEval> per_map;       // sorted by map_id
  ClassMetrics legend_item;           // micro average across maps
  ClassMetrics description;
  double threshold = kDefaultIouThreshold;
  std::optional<int> k;               // example count, for ablation rows
};

namespace detail {

inline std::vector<BBox> item_boxes(const std::vector<LegendPair>& pairs) {
  std::vector<BBox> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(p.item);
  return out;
}

// Symbol-only entries are excluded from the description class.
inline std::vector<BBox> description_boxes(const std::vector<LegendPair>& pairs) {
  std::vector<BBox> out;
  for (const auto& p : pairs)
    if (p.description) out.push_back(*p.description);
  return out;
}

}  // namespace detail

/// Score predictions against ground truth per map and micro-averaged across
/// maps; legend items and descriptions are independent classes. A truth map
/// without a prediction entry counts as zero predictions; a prediction for
/// an unknown map is a MapMismatch.
inline EvalReport evaluate_dataset(const std::vector<LegendSheet>& predictions,
                                   const std::vector<LegendSheet>& truth,
                                   double threshold = kDefaultIouThreshold) {
  std::map<std::string, const LegendSheet*> pred_by_id;
  for (const auto& s : predictions) pred_by_id[s.map_id] = &s;

  std::map<std::string, const LegendSheet*> truth_by_id;
  for (const auto& s : truth) truth_by_id[s.map_id] = &s;
  for (const auto& [id, sheet] : pred_by_id)
    if (!truth_by_id.count(id))
      throw Error(Errc::MapMismatch, "predictions reference unknown map '" + id + "'");

  EvalReport report;
  report.threshold = threshold;
  long tp_i = 0, fp_i = 0, fn_i = 0, tp_d = 0, fp_d = 0, fn_d = 0;
  double sum_i = 0.0, sum_d = 0.0;

  for (const auto& [id, truth_sheet] : truth_by_id) {
    static const std::vector<LegendPair> kNoPairs;
    const auto& pred_pairs =
        pred_by_id.count(id) ? pred_by_id.at(id)->pairs : kNoPairs;

    MapEval row;
    row.map_id = id;
    row.legend_item = score(match_boxes(detail::item_boxes(pred_pairs),
                                        detail::item_boxes(truth_sheet->pairs), threshold));
    row.description =
        score(match_boxes(detail::description_boxes(pred_pairs),
                          detail::description_boxes(truth_sheet->pairs), threshold));
    tp_i += row.legend_item.tp;
    fp_i += row.legend_item.fp;
    fn_i += row.legend_item.fn;
    sum_i += row.legend_item.iou_sum;
    tp_d += row.description.tp;
    fp_d += row.description.fp;
    fn_d += row.description.fn;
    sum_d += row.description.iou_sum;
    report.per_map.push_back(std::move(row));
  }

  report.legend_item = finalize_metrics(tp_i, fp_i, fn_i, sum_i);
  report.description = finalize_metrics(tp_d, fp_d, fn_d, sum_d);
  return report;
}

/// Per-map arithmetic mean of a metric (macro average).
struct MacroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double mean_iou = 0.0;
};

inline MacroMetrics macro_average(const EvalReport& report, bool description_class) {
  MacroMetrics m;
  if (report.per_map.empty()) return m;
  for (const auto& row : report.per_map) {
    const ClassMetrics& c = description_class ? row.description : row.legend_item;
    m.precision += c.precision;
    m.recall += c.recall;
    m.f1 += c.f1;
    m.mean_iou += c.mean_iou;
  }
  const double n = static_cast<double>(report.per_map.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  m.mean_iou /= n;
  return m;
}

}  // namespace legendforge
