#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "legendforge/dataset.hpp"
#include "legendforge/error.hpp"
#include "legendforge/evaluation.hpp"
#include "legendforge/gateway_http.hpp"
#include "legendforge/jsonfmt.hpp"
#include "legendforge/log.hpp"
#include "legendforge/prompting.hpp"
#include "legendforge/response.hpp"

namespace legendforge {

enum class RunMode { Live, Replay };

inline const char* to_string(RunMode m) { return m == RunMode::Live ? "live" : "replay"; }

struct ExtractConfig {
  std::string example_map_id;
  int k = 15;
  CoordinateFrame coordinate_frame = CoordinateFrame::FullMap;
  RunMode mode = RunMode::Replay;
  std::filesystem::path cassette_dir;
  bool record_cassettes = false;  // live mode: persist exchanges as they arrive
  RequestSettings settings;
  GatewayConfig gateway;
};

struct MapOutcome {
  std::string map_id;
  std::string digest;
  std::vector<std::string> repairs_applied;
  int rejected_entries = 0;
  long input_tokens = 0;
  long output_tokens = 0;
  long latency_ms = 0;
  std::string exchange_timestamp;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct ExtractResult {
  std::vector<LegendSheet> predictions;  // successful targets, sorted by map_id
  std::vector<MapOutcome> outcomes;      // every target, sorted by map_id
  bool transport_failure = false;

  bool all_ok() const {
    return std::all_of(outcomes.begin(), outcomes.end(),
                       [](const MapOutcome& o) { return o.ok(); });
  }
};

namespace detail {

inline const LegendSheet& sheet_by_id(const std::vector<LegendSheet>& sheets,
                                      const std::string& map_id) {
  for (const auto& s : sheets)
    if (s.map_id == map_id) return s;
  throw Error(Errc::ValidationError, "map '" + map_id + "' not present in dataset");
}

}  // namespace detail

/// Run the extraction pipeline over every sheet except the example map:
/// build prompt, send (or replay), parse, validate. Per-map failures are
/// recorded, not thrown. Targets run concurrently up to gateway parallelism.
inline ExtractResult run_extract(const std::vector<LegendSheet>& sheets,
                                 const ExtractConfig& cfg) {
  const LegendSheet& example = detail::sheet_by_id(sheets, cfg.example_map_id);
  // Fails fast before any target is touched.
  select_examples(example, cfg.k);

  std::unique_ptr<Gateway> gateway;
  if (cfg.mode == RunMode::Live) {
    const char* key = std::getenv(cfg.gateway.api_key_env_var.c_str());
    if (!key || !*key)
      throw Error(Errc::AuthError,
                  "API key env var " + cfg.gateway.api_key_env_var + " is not set");
    gateway = std::make_unique<Gateway>(cfg.gateway);
  }

  std::vector<const LegendSheet*> targets;
  for (const auto& s : sheets)
    if (s.map_id != cfg.example_map_id) targets.push_back(&s);

  ExtractResult result;
  result.outcomes.resize(targets.size());
  std::vector<std::optional<LegendSheet>> preds(targets.size());

  auto process = [&](std::size_t i) {
    const LegendSheet& target = *targets[i];
    MapOutcome& outcome = result.outcomes[i];
    outcome.map_id = target.map_id;
    try {
      PromptSpec spec;
      spec.example_sheet = &example;
      spec.target_sheet = &target;
      spec.k = cfg.k;
      spec.coordinate_frame = cfg.coordinate_frame;
      spec.settings = cfg.settings;
      const PromptBundle bundle = build_prompt(spec);
      outcome.digest = bundle_digest(bundle);

      Exchange exchange = cfg.mode == RunMode::Replay ? replay(bundle, cfg.cassette_dir)
                                                      : gateway->send(bundle);
      if (cfg.mode == RunMode::Live && cfg.record_cassettes)
        record(exchange, cfg.cassette_dir);
      outcome.input_tokens = exchange.input_tokens;
      outcome.output_tokens = exchange.output_tokens;
      outcome.latency_ms = exchange.latency_ms;
      outcome.exchange_timestamp = exchange.timestamp;

      const Frame check_frame = cfg.coordinate_frame == CoordinateFrame::FullMap
                                    ? target.crop_frame
                                    : target.local_frame();
      PredictionSet parsed = parse_response(exchange.response_text, check_frame);
      parsed.target_map_id = target.map_id;
      const PredictionSet validated = validate_pairs(parsed, check_frame);
      outcome.repairs_applied = validated.repairs_applied;
      outcome.rejected_entries = validated.rejected_entries;

      LegendSheet out;
      out.map_id = target.map_id;
      out.raster_path = target.raster_path;
      out.crop_frame = target.crop_frame;
      out.provenance = "predicted";
      out.pairs = validated.to_legend_pairs();
      // Manifests store parent-map coordinates.
      if (cfg.coordinate_frame == CoordinateFrame::CropLocal)
        for (auto& p : out.pairs) {
          p.item = translate(p.item, target.crop_frame, target.full_frame());
          p.description = translate(*p.description, target.crop_frame, target.full_frame());
        }
      preds[i] = std::move(out);
    } catch (const Error& e) {
      outcome.error = std::string(errc_name(e.code())) + ": " + e.what();
      if (exit_code_for(e.code()) == 2) result.transport_failure = true;
      log::error("map {} failed: {}", target.map_id, outcome.error);
    }
  };

  const int workers = std::max(1, std::min<int>(cfg.gateway.parallelism,
                                                static_cast<int>(targets.size())));
  if (workers <= 1 || cfg.mode == RunMode::Replay) {
    for (std::size_t i = 0; i < targets.size(); ++i) process(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < targets.size(); i = next.fetch_add(1))
          process(i);
      });
    for (auto& t : pool) t.join();
  }

  for (auto& p : preds)
    if (p) result.predictions.push_back(std::move(*p));
  // Targets were visited in dataset order (already sorted by map_id).
  return result;
}

/// Deterministic in replay mode: derived from the run configuration and the
/// request digests, not from wall time.
inline std::string run_id_for(const ExtractConfig& cfg, const std::vector<MapOutcome>& outcomes) {
  std::vector<std::string_view> parts{cfg.example_map_id, cfg.settings.model_name};
  const std::string k = std::to_string(cfg.k);
  const std::string frame = to_string(cfg.coordinate_frame);
  const std::string temp = fmt::format("{:g}", cfg.settings.temperature);
  parts.push_back(k);
  parts.push_back(frame);
  parts.push_back(temp);
  for (const auto& o : outcomes) parts.push_back(o.digest);
  return sha256_hex(parts).substr(0, 16);
}

/// Replay runs take their timestamp from the recorded exchanges, so the
/// manifest bytes are reproducible; live runs use wall clock.
inline std::string run_timestamp(const ExtractConfig& cfg,
                                 const std::vector<MapOutcome>& outcomes) {
  if (cfg.mode == RunMode::Live) return utc_timestamp_now();
  std::string latest;
  for (const auto& o : outcomes) latest = std::max(latest, o.exchange_timestamp);
  return latest.empty() ? "replay" : latest;
}

inline std::string run_manifest_to_string(const ExtractConfig& cfg,
                                          const std::vector<MapOutcome>& outcomes,
                                          const std::string& timestamp,
                                          const std::string& dataset_path = {}) {
  std::string s;
  s += "{\n";
  s += "  \"run_id\": " + json_string(run_id_for(cfg, outcomes)) + ",\n";
  s += "  \"timestamp\": " + json_string(timestamp) + ",\n";
  s += "  \"config\": {";
  s += "\"cassettes\": " + json_string(cfg.cassette_dir.string()) + ", ";
  s += "\"coordinate_frame\": " + json_string(to_string(cfg.coordinate_frame)) + ", ";
  s += "\"dataset\": " + json_string(dataset_path) + ", ";
  s += "\"example_map_id\": " + json_string(cfg.example_map_id) + ", ";
  s += fmt::format("\"k\": {}, ", cfg.k);
  s += "\"mode\": " + json_string(to_string(cfg.mode)) + ", ";
  s += "\"model_name\": " + json_string(cfg.settings.model_name) + ", ";
  s += fmt::format("\"temperature\": {:.2f}", cfg.settings.temperature);
  s += "},\n";
  s += "  \"outcomes\": [";
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const MapOutcome& o = outcomes[i];
    s += i ? ",\n    {" : "\n    {";
    s += "\"digest\": " + json_string(o.digest) + ", ";
    s += "\"error\": " + json_string(o.error) + ", ";
    s += fmt::format("\"input_tokens\": {}, \"latency_ms\": {}, ", o.input_tokens, o.latency_ms);
    s += "\"map_id\": " + json_string(o.map_id) + ", ";
    s += fmt::format("\"output_tokens\": {}, \"rejected_entries\": {}, ", o.output_tokens,
                     o.rejected_entries);
    s += "\"repairs_applied\": [";
    for (std::size_t r = 0; r < o.repairs_applied.size(); ++r)
      s += (r ? ", " : "") + json_string(o.repairs_applied[r]);
    s += "]}";
  }
  s += outcomes.empty() ? "]\n" : "\n  ]\n";
  s += "}\n";
  return s;
}

/// One evaluation per example count, replaying (or sending) every target
/// cell. Any failed cell aborts with the map and k named.
inline std::vector<EvalReport> ablate(const std::vector<LegendSheet>& sheets,
                                      const ExtractConfig& base, const std::vector<int>& k_values,
                                      double threshold = kDefaultIouThreshold) {
  std::vector<LegendSheet> truth;
  for (const auto& s : sheets)
    if (s.map_id != base.example_map_id) truth.push_back(s);

  std::vector<EvalReport> reports;
  for (int k : k_values) {
    ExtractConfig cfg = base;
    cfg.k = k;
    ExtractResult run = run_extract(sheets, cfg);
    for (const auto& o : run.outcomes)
      if (!o.ok())
        throw Error(Errc::CassetteMiss,
                    fmt::format("ablation cell (map '{}', k={}) failed: {}", o.map_id, k, o.error));
    EvalReport report = evaluate_dataset(run.predictions, truth, threshold);
    report.k = k;
    reports.push_back(std::move(report));
  }
  return reports;
}

}  // namespace legendforge
