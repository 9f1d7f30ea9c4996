#pragma once

#include <string>
#include <vector>

#include <fmt/core.h>

#include "legendforge/evaluation.hpp"
#include "legendforge/jsonfmt.hpp"

namespace legendforge {

namespace detail {

inline std::string metric(double v) { return fmt::format("{:.4f}", v); }

inline std::string class_json(const ClassMetrics& c) {
  return fmt::format(
      "{{\"tp\": {}, \"fp\": {}, \"fn\": {}, \"precision\": {}, \"recall\": {}, "
      "\"f1\": {}, \"mean_iou\": {}, \"mean_iou_penalized\": {}}}",
      c.tp, c.fp, c.fn, metric(c.precision), metric(c.recall), metric(c.f1), metric(c.mean_iou),
      metric(c.mean_iou_penalized));
}

}  // namespace detail

/// Aligned human-readable table; one row per class, then per-map rows.
inline std::string render_table(const EvalReport& report, bool with_macro = false) {
  std::string s;
  s += fmt::format("IoU threshold: {:.2f}", report.threshold);
  if (report.k) s += fmt::format("   examples (k): {}", *report.k);
  s += "\n";
  s += fmt::format("{:<22}{:>7}{:>8}{:>8}{:>8}{:>13}{:>13}{:>6}{:>6}{:>6}\n", "scope", "class",
                   "prec", "recall", "f1", "iou(matched)", "iou(all-gt)", "tp", "fp", "fn");
  auto row = [&](const std::string& scope, const char* cls, const ClassMetrics& c) {
    s += fmt::format("{:<22}{:>7}{:>8}{:>8}{:>8}{:>13}{:>13}{:>6}{:>6}{:>6}\n", scope, cls,
                     detail::metric(c.precision), detail::metric(c.recall), detail::metric(c.f1),
                     detail::metric(c.mean_iou), detail::metric(c.mean_iou_penalized), c.tp, c.fp,
                     c.fn);
  };
  row("aggregate", "item", report.legend_item);
  row("aggregate", "desc", report.description);
  if (with_macro) {
    auto mi = macro_average(report, false);
    auto md = macro_average(report, true);
    s += fmt::format("{:<22}{:>7}{:>8}{:>8}{:>8}{:>13}{:>13}{:>6}{:>6}{:>6}\n", "aggregate-macro",
                     "item", detail::metric(mi.precision), detail::metric(mi.recall),
                     detail::metric(mi.f1), detail::metric(mi.mean_iou), "-", "-", "-", "-");
    s += fmt::format("{:<22}{:>7}{:>8}{:>8}{:>8}{:>13}{:>13}{:>6}{:>6}{:>6}\n", "aggregate-macro",
                     "desc", detail::metric(md.precision), detail::metric(md.recall),
                     detail::metric(md.f1), detail::metric(md.mean_iou), "-", "-", "-", "-");
  }
  for (const auto& m : report.per_map) {
    row(m.map_id, "item", m.legend_item);
    row(m.map_id, "desc", m.description);
  }
  return s;
}

/// Machine-readable report with every count; byte-deterministic.
inline std::string render_json(const EvalReport& report, bool with_macro = false) {
  std::string s;
  s += "{\n";
  if (report.k) s += fmt::format("  \"k\": {},\n", *report.k);
  s += fmt::format("  \"threshold\": {:.2f},\n", report.threshold);
  s += "  \"aggregate\": {\n";
  s += "    \"legend_item\": " + detail::class_json(report.legend_item) + ",\n";
  s += "    \"description\": " + detail::class_json(report.description) + "\n";
  s += "  },\n";
  if (with_macro) {
    auto mi = macro_average(report, false);
    auto md = macro_average(report, true);
    auto macro_json = [](const MacroMetrics& m) {
      return fmt::format(
          "{{\"precision\": {}, \"recall\": {}, \"f1\": {}, \"mean_iou\": {}}}",
          detail::metric(m.precision), detail::metric(m.recall), detail::metric(m.f1),
          detail::metric(m.mean_iou));
    };
    s += "  \"aggregate_macro\": {\n";
    s += "    \"legend_item\": " + macro_json(mi) + ",\n";
    s += "    \"description\": " + macro_json(md) + "\n";
    s += "  },\n";
  }
  s += "  \"per_map\": [";
  for (std::size_t i = 0; i < report.per_map.size(); ++i) {
    const auto& m = report.per_map[i];
    s += i ? ",\n    {" : "\n    {";
    s += "\"map_id\": " + json_string(m.map_id) + ", ";
    s += "\"legend_item\": " + detail::class_json(m.legend_item) + ", ";
    s += "\"description\": " + detail::class_json(m.description) + "}";
  }
  s += report.per_map.empty() ? "]\n" : "\n  ]\n";
  s += "}\n";
  return s;
}

inline std::string render_csv(const EvalReport& report) {
  std::string s =
      "scope,class,precision,recall,f1,mean_iou,mean_iou_penalized,tp,fp,fn\n";
  auto row = [&](const std::string& scope, const char* cls, const ClassMetrics& c) {
    s += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", scope, cls, detail::metric(c.precision),
                     detail::metric(c.recall), detail::metric(c.f1), detail::metric(c.mean_iou),
                     detail::metric(c.mean_iou_penalized), c.tp, c.fp, c.fn);
  };
  row("aggregate", "legend_item", report.legend_item);
  row("aggregate", "description", report.description);
  for (const auto& m : report.per_map) {
    row(m.map_id, "legend_item", m.legend_item);
    row(m.map_id, "description", m.description);
  }
  return s;
}

/// Ablation table over example counts: one row per k, IoU and F1 per class,
/// best cell of each column wrapped in asterisks.
inline std::string render_ablation_table(const std::vector<EvalReport>& reports) {
  struct Cell {
    double v;
    bool best = false;
  };
  std::vector<std::array<Cell, 4>> cells(reports.size());
  for (std::size_t i = 0; i < reports.size(); ++i)
    cells[i] = {Cell{reports[i].legend_item.mean_iou}, Cell{reports[i].legend_item.f1},
                Cell{reports[i].description.mean_iou}, Cell{reports[i].description.f1}};
  for (std::size_t col = 0; col < 4; ++col) {
    double best = -1.0;
    for (const auto& r : cells) best = std::max(best, r[col].v);
    for (auto& r : cells)
      if (r[col].v == best) r[col].best = true;
  }

  std::string s;
  s += fmt::format("{:<12}|{:^35}|{:^35}\n", "", " Legend Item ", " Description ");
  s += fmt::format("{:<12}|{:>16} {:>18}|{:>16} {:>18}\n", "# Examples", "IoU", "F1", "IoU", "F1");
  s += std::string(12, '-') + "+" + std::string(35, '-') + "+" + std::string(35, '-') + "\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    auto cell = [&](std::size_t col) {
      const std::string v = detail::metric(cells[i][col].v);
      return cells[i][col].best ? "*" + v + "*" : v;
    };
    s += fmt::format("{:<12}|{:>16} {:>18}|{:>16} {:>18}\n",
                     reports[i].k ? std::to_string(*reports[i].k) : "-", cell(0), cell(1), cell(2),
                     cell(3));
  }
  return s;
}

inline std::string render_ablation_json(const std::vector<EvalReport>& reports) {
  std::string s = "[";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    s += i ? ",\n  {" : "\n  {";
    s += fmt::format("\"k\": {}, ", r.k ? *r.k : 0);
    s += "\"legend_item\": " + detail::class_json(r.legend_item) + ", ";
    s += "\"description\": " + detail::class_json(r.description) + "}";
  }
  s += reports.empty() ? "]\n" : "\n]\n";
  return s;
}

inline std::string render_ablation_csv(const std::vector<EvalReport>& reports) {
  std::string s = "k,legend_item_iou,legend_item_f1,description_iou,description_f1\n";
  for (const auto& r : reports)
    s += fmt::format("{},{},{},{},{}\n", r.k ? *r.k : 0, detail::metric(r.legend_item.mean_iou),
                     detail::metric(r.legend_item.f1), detail::metric(r.description.mean_iou),
                     detail::metric(r.description.f1));
  return s;
}

}  // namespace legendforge
