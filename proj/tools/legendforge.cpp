// Command-line front end for the legend extraction pipeline: extract,
// evaluate, ablate, index, search, schema.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "legendforge/legendforge.hpp"

namespace lf = legendforge;
namespace fs = std::filesystem;

namespace {

struct GatewayFlags {
  lf::GatewayConfig config;
  lf::RequestSettings settings;

  void attach(CLI::App* cmd) {
    cmd->add_option("--endpoint", config.endpoint_url, "Chat-completions endpoint URL");
    cmd->add_option("--model", config.model_name, "Model name sent with each request");
    cmd->add_option("--timeout", config.timeout_s, "Request timeout in seconds");
    cmd->add_option("--max-retries", config.max_retries, "Retry budget for transient failures");
    cmd->add_option("--parallel", config.parallelism, "Max in-flight requests");
    cmd->add_option("--api-key-env", config.api_key_env_var,
                    "Environment variable holding the API key");
    cmd->add_option("--temperature", settings.temperature, "Sampling temperature");
    cmd->add_option("--max-output-tokens", settings.max_output_tokens, "Response token cap");
    cmd->add_option("--backoff-ms", config.backoff_initial_ms, "Initial retry backoff")
        ->group("");  // tuning knob, hidden from --help
  }

  void finalize() { settings.model_name = config.model_name; }
};

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw lf::Error(lf::Errc::IoError, "cannot write " + path.string());
  out << body;
}

std::string dataset_name_of(const fs::path& manifest_path) {
  fs::path p = manifest_path;
  if (fs::is_directory(p)) p /= "manifest.json";
  std::ifstream in(p);
  if (!in) throw lf::Error(lf::Errc::IoError, "cannot open manifest: " + p.string());
  try {
    return nlohmann::json::parse(in).value("dataset", "dataset");
  } catch (const nlohmann::json::exception& e) {
    throw lf::Error(lf::Errc::ParseError, "manifest " + p.string() + ": " + e.what());
  }
}

lf::Rgb parse_hex_color(const std::string& hex) {
  std::string h = hex;
  if (!h.empty() && h[0] == '#') h.erase(0, 1);
  if (h.size() != 6 || h.find_first_not_of("0123456789abcdefABCDEF") != std::string::npos)
    throw lf::Error(lf::Errc::ValidationError, "color must be RRGGBB hex, got '" + hex + "'");
  auto byte = [&](int i) {
    return static_cast<std::uint8_t>(std::stoi(h.substr(i, 2), nullptr, 16));
  };
  return {byte(0), byte(2), byte(4)};
}

int run_extract_cmd(const fs::path& dataset, const fs::path& out_dir, lf::ExtractConfig cfg) {
  auto sheets = lf::load_annotations(dataset);
  auto result = lf::run_extract(sheets, cfg);

  fs::create_directories(out_dir);
  lf::save_annotations(result.predictions, out_dir / "predictions.json",
                       dataset_name_of(dataset) + "-predictions");
  write_file(out_dir / "run_manifest.json",
             lf::run_manifest_to_string(cfg, result.outcomes,
                                        lf::run_timestamp(cfg, result.outcomes),
                                        dataset.string()));

  for (const auto& o : result.outcomes)
    lf::log::info("map={} ok={} rejected={} tokens_in={} tokens_out={}", o.map_id,
                  o.ok() ? "yes" : "no", o.rejected_entries, o.input_tokens, o.output_tokens);
  if (!result.all_ok()) {
    std::cerr << "error: one or more maps failed; see run_manifest.json\n";
    return result.transport_failure ? 2 : 1;
  }
  std::cout << "extracted predictions for " << result.predictions.size() << " map(s) -> "
            << (out_dir / "predictions.json").string() << "\n";
  return 0;
}

int run_evaluate_cmd(const fs::path& predictions, const fs::path& truth, double threshold,
                     bool macro, const fs::path& out_dir) {
  const lf::LoadOptions no_rasters{.check_rasters = false};
  auto pred_sheets = lf::load_annotations(predictions, no_rasters);
  auto truth_sheets = lf::load_annotations(truth, no_rasters);
  auto report = lf::evaluate_dataset(pred_sheets, truth_sheets, threshold);

  fs::create_directories(out_dir);
  write_file(out_dir / "report.txt", lf::render_table(report, macro));
  write_file(out_dir / "report.json", lf::render_json(report, macro));
  write_file(out_dir / "report.csv", lf::render_csv(report));
  std::cout << lf::render_table(report, macro);
  return 0;
}

int run_ablate_cmd(const fs::path& dataset, std::vector<int> k_values, double threshold,
                   const fs::path& out_dir, const lf::ExtractConfig& base) {
  auto sheets = lf::load_annotations(dataset);
  auto reports = lf::ablate(sheets, base, k_values, threshold);

  fs::create_directories(out_dir);
  write_file(out_dir / "ablation.txt", lf::render_ablation_table(reports));
  write_file(out_dir / "ablation.json", lf::render_ablation_json(reports));
  write_file(out_dir / "ablation.csv", lf::render_ablation_csv(reports));
  for (const auto& r : reports)
    write_file(out_dir / fmt::format("report_k{}.json", r.k ? *r.k : 0), lf::render_json(r));
  std::cout << lf::render_ablation_table(reports);
  return 0;
}

int run_index_cmd(const fs::path& manifest, const std::string& source,
                  const fs::path& transcriptions, const fs::path& out_dir) {
  auto sheets = lf::load_annotations(manifest);

  nlohmann::json texts;
  if (!transcriptions.empty()) {
    std::ifstream in(transcriptions);
    if (!in)
      throw lf::Error(lf::Errc::IoError, "cannot open transcriptions: " + transcriptions.string());
    try {
      texts = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw lf::Error(lf::Errc::ParseError, std::string("transcriptions: ") + e.what());
    }
  }

  lf::Index entries;
  int skipped = 0;
  for (const auto& sheet : sheets) {
    const lf::Raster raster = lf::load_raster(sheet);
    for (const auto& pair : sheet.pairs) {
      if (!pair.description) {
        ++skipped;
        continue;  // symbol-only rows have no description box to index
      }
      const lf::BBox local_item =
          lf::translate(pair.item, sheet.full_frame(), sheet.crop_frame);
      lf::LegendEntry entry{
          sheet.map_id,
          pair.pair_id,
          pair.item,
          *pair.description,
          lf::dominant_color(raster, local_item),
          std::nullopt,
          source == "predicted" ? lf::LegendEntry::Source::Predicted
                                : lf::LegendEntry::Source::GroundTruth,
      };
      if (texts.contains(sheet.map_id) && texts[sheet.map_id].contains(pair.pair_id))
        entry.description_text = texts[sheet.map_id][pair.pair_id].get<std::string>();
      entries.push_back(std::move(entry));
    }
  }

  fs::create_directories(out_dir);
  const fs::path out = out_dir / "legend_index.jsonl";
  lf::index_build(entries, out);
  std::cout << "indexed " << entries.size() << " entries";
  if (skipped) std::cout << " (" << skipped << " without description skipped)";
  std::cout << " -> " << out.string() << "\n";
  return 0;
}

int run_search_cmd(const fs::path& index_path, const std::vector<std::string>& terms,
                   const std::string& color_hex, double max_distance,
                   const std::vector<std::string>& maps) {
  lf::Query q;
  q.text_terms = terms;
  if (!color_hex.empty()) {
    q.color = parse_hex_color(color_hex);
    q.max_distance = max_distance;
  }
  if (!maps.empty()) q.map_filter = std::set<std::string>(maps.begin(), maps.end());

  const auto results = lf::search(lf::index_load(index_path), q);
  for (const auto& e : results) std::cout << lf::detail::entry_line(e) << "\n";
  lf::log::info("search matched {} entries", results.size());
  return 0;
}

int run_schema_cmd() {
  // Canonical sample prompt over a two-pair fixture.
  std::vector<lf::LegendPair> pairs{
      {"s1", lf::BBox(6630.85, 472.34, 6779.79, 560.64),
       lf::BBox(6214.89, 572.34, 7186.17, 621.28)},
      {"s2", lf::BBox(4985.96, 1233.62, 5145.11, 1324.26),
       lf::BBox(4572.34, 1244.68, 5342.55, 1298.94)},
  };
  std::cout << lf::build_json_block(pairs, "example_map_legend.tiff", "target_map_legend.tiff")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Legend item-description extraction, evaluation, and search for scanned maps"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; command-line flags win");
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "Log more (-v info, -vv debug)");

  // extract
  auto* extract = app.add_subcommand("extract", "Run the extraction pipeline over a dataset");
  fs::path x_dataset, x_out = ".", x_cassettes;
  std::string x_example, x_frame = "fullmap", x_mode = "replay";
  int x_k = 15;
  bool x_record = false;
  GatewayFlags x_gw;
  extract->add_option("--dataset", x_dataset, "Dataset manifest")->required();
  extract->add_option("--example", x_example, "Map id providing in-context examples")->required();
  extract->add_option("--k", x_k, "Number of example pairs in the prompt");
  extract->add_option("--frame", x_frame, "Coordinate frame: fullmap or croplocal");
  extract->add_option("--mode", x_mode, "live or replay");
  extract->add_option("--cassettes", x_cassettes, "Cassette directory for replay/record");
  extract->add_flag("--record", x_record, "Record live exchanges into --cassettes");
  extract->add_option("--out", x_out, "Output directory");
  x_gw.attach(extract);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against ground truth");
  fs::path e_pred, e_truth, e_out = ".";
  double e_threshold = lf::kDefaultIouThreshold;
  bool e_macro = false;
  evaluate->add_option("--predictions", e_pred, "Predictions manifest")->required();
  evaluate->add_option("--truth", e_truth, "Ground-truth manifest")->required();
  evaluate->add_option("--threshold", e_threshold, "IoU match threshold");
  evaluate->add_flag("--macro", e_macro, "Also report per-map macro averages");
  evaluate->add_option("--out", e_out, "Output directory");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Evaluate across example counts");
  fs::path a_dataset, a_out = ".", a_cassettes;
  std::string a_example, a_frame = "fullmap", a_mode = "replay";
  std::vector<int> a_ks{5, 10, 15, 20};
  double a_threshold = lf::kDefaultIouThreshold;
  GatewayFlags a_gw;
  ablate->add_option("--dataset", a_dataset, "Dataset manifest")->required();
  ablate->add_option("--example", a_example, "Map id providing in-context examples")->required();
  ablate->add_option("--k", a_ks, "Example counts, e.g. 5,10,15,20")->delimiter(',');
  ablate->add_option("--frame", a_frame, "Coordinate frame: fullmap or croplocal");
  ablate->add_option("--mode", a_mode, "live or replay");
  ablate->add_option("--cassettes", a_cassettes, "Cassette directory")->required();
  ablate->add_option("--threshold", a_threshold, "IoU match threshold");
  ablate->add_option("--out", a_out, "Output directory");
  a_gw.attach(ablate);

  // index
  auto* index = app.add_subcommand("index", "Build the searchable legend metadata index");
  fs::path i_manifest, i_text, i_out = ".";
  std::string i_source = "truth";
  index->add_option("--manifest", i_manifest, "Manifest with pairs to index")->required();
  index->add_option("--source", i_source, "Entry provenance: truth or predicted")
      ->check(CLI::IsMember({"truth", "predicted"}));
  index->add_option("--text", i_text, "Transcriptions JSON {map_id: {pair_id: text}}");
  index->add_option("--out", i_out, "Output directory");

  // search
  auto* search = app.add_subcommand("search", "Query a legend index");
  fs::path s_index;
  std::vector<std::string> s_terms, s_maps;
  std::string s_color;
  double s_maxdist = 32.0;
  search->add_option("--index", s_index, "Index file (JSON lines)")->required();
  search->add_option("--text", s_terms, "Keyword(s); all must match");
  search->add_option("--color", s_color, "Target color as RRGGBB hex");
  search->add_option("--max-distance", s_maxdist, "Max Euclidean RGB distance");
  search->add_option("--maps", s_maps, "Restrict to these map ids")->delimiter(',');

  // schema
  app.add_subcommand("schema", "Print a canonical sample of the prompt JSON block");

  CLI11_PARSE(app, argc, argv);

  lf::log::set_level(verbosity >= 2   ? lf::log::Level::Debug
                     : verbosity == 1 ? lf::log::Level::Info
                                      : lf::log::Level::Quiet);

  try {
    if (extract->parsed()) {
      x_gw.finalize();
      lf::ExtractConfig cfg;
      cfg.example_map_id = x_example;
      cfg.k = x_k;
      cfg.coordinate_frame = lf::coordinate_frame_from(x_frame);
      cfg.mode = x_mode == "live" ? lf::RunMode::Live : lf::RunMode::Replay;
      cfg.cassette_dir = x_cassettes;
      cfg.record_cassettes = x_record;
      cfg.settings = x_gw.settings;
      cfg.gateway = x_gw.config;
      if (x_mode != "live" && x_mode != "replay")
        throw lf::Error(lf::Errc::ValidationError, "--mode must be live or replay");
      if (cfg.mode == lf::RunMode::Replay && x_cassettes.empty())
        throw lf::Error(lf::Errc::ValidationError, "replay mode needs --cassettes");
      if (cfg.record_cassettes && x_cassettes.empty())
        throw lf::Error(lf::Errc::ValidationError, "--record needs --cassettes");
      return run_extract_cmd(x_dataset, x_out, std::move(cfg));
    }
    if (evaluate->parsed())
      return run_evaluate_cmd(e_pred, e_truth, e_threshold, e_macro, e_out);
    if (ablate->parsed()) {
      a_gw.finalize();
      lf::ExtractConfig cfg;
      cfg.example_map_id = a_example;
      cfg.coordinate_frame = lf::coordinate_frame_from(a_frame);
      cfg.mode = a_mode == "live" ? lf::RunMode::Live : lf::RunMode::Replay;
      cfg.cassette_dir = a_cassettes;
      cfg.settings = a_gw.settings;
      cfg.gateway = a_gw.config;
      return run_ablate_cmd(a_dataset, a_ks, a_threshold, a_out, cfg);
    }
    if (index->parsed()) {
      const std::string src = i_source == "predicted" ? "predicted" : "truth";
      return run_index_cmd(i_manifest, src, i_text, i_out);
    }
    if (search->parsed())
      return run_search_cmd(s_index, s_terms, s_color, s_maxdist, s_maps);
    return run_schema_cmd();
  } catch (const lf::Error& e) {
    std::cerr << "error: [" << lf::errc_name(e.code()) << "] " << e.what() << "\n";
    return lf::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
