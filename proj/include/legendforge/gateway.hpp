#pragma once

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <memory>
#include <semaphore>
#include <sstream>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "legendforge/digest.hpp"
#include "legendforge/error.hpp"
#include "legendforge/jsonfmt.hpp"
#include "legendforge/prompting.hpp"

namespace legendforge {

inline constexpr const char* kDefaultApiKeyEnvVar = "LEGEND_FORGE_API_KEY";

struct GatewayConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env_var = kDefaultApiKeyEnvVar;
  std::string model_name = "gpt-4o";
  double timeout_s = 120.0;
  int max_retries = 3;
  int parallelism = 4;
  // Test servers shrink this; live runs keep the 1s, 2s, 4s... ladder.
  int backoff_initial_ms = 1000;

  void validate() const {
    if (timeout_s <= 0.0) throw Error(Errc::ValidationError, "gateway timeout must be > 0");
    if (max_retries < 0 || max_retries > 5)
      throw Error(Errc::ValidationError, "gateway max_retries must be in [0, 5]");
    if (parallelism < 1) throw Error(Errc::ValidationError, "gateway parallelism must be >= 1");
  }
};

/// One request/response round trip, keyed by the content digest of the
/// bundle that produced it.
struct Exchange {
  std::string request_digest;
  std::string response_text;
  long input_tokens = 0;
  long output_tokens = 0;
  long latency_ms = 0;
  std::string timestamp;  // UTC, ISO 8601
  int retries = 0;        // in-memory diagnostic, not persisted

  bool operator==(const Exchange& o) const {
    return request_digest == o.request_digest && response_text == o.response_text &&
           input_tokens == o.input_tokens && output_tokens == o.output_tokens &&
           latency_ms == o.latency_ms && timestamp == o.timestamp;
  }
};

/// Stable across processes and platforms: covers exactly the content that
/// can change the model's behavior.
inline std::string bundle_digest(const PromptBundle& b) {
  return sha256_hex({b.json_block, b.example_image.bytes, b.target_image.bytes,
                     b.request_settings.model_name,
                     fmt::format("{:g}", b.request_settings.temperature)});
}

inline std::string utc_timestamp_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline std::string cassette_to_string(const Exchange& e) {
  std::string s;
  s += "{\n";
  s += "  \"digest\": " + json_string(e.request_digest) + ",\n";
  s += "  \"input_tokens\": " + std::to_string(e.input_tokens) + ",\n";
  s += "  \"latency_ms\": " + std::to_string(e.latency_ms) + ",\n";
  s += "  \"output_tokens\": " + std::to_string(e.output_tokens) + ",\n";
  s += "  \"response_text\": " + json_string(e.response_text) + ",\n";
  s += "  \"timestamp\": " + json_string(e.timestamp) + "\n";
  s += "}\n";
  return s;
}

inline Exchange cassette_from_json(const nlohmann::json& j) {
  Exchange e;
  e.request_digest = j.at("digest").get<std::string>();
  e.response_text = j.at("response_text").get<std::string>();
  e.input_tokens = j.at("input_tokens").get<long>();
  e.output_tokens = j.at("output_tokens").get<long>();
  e.latency_ms = j.at("latency_ms").get<long>();
  e.timestamp = j.at("timestamp").get<std::string>();
  return e;
}

}  // namespace detail

/// Append an exchange to the cassette directory (one JSON file per digest).
/// Idempotent: re-recording an identical exchange leaves the file untouched.
inline void record(const Exchange& e, const std::filesystem::path& cassette_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cassette_dir, ec);
  const fs::path dest = cassette_dir / (e.request_digest + ".json");
  const std::string body = detail::cassette_to_string(e);

  if (fs::exists(dest)) {
    std::ifstream in(dest, std::ios::binary);
    std::ostringstream have;
    have << in.rdbuf();
    if (have.str() == body) return;
  }
  // Writer-unique temp name; concurrent recorders of the same digest then
  // race only on the atomic rename.
  static std::atomic<unsigned> seq{0};
  const fs::path tmp =
      dest.string() + fmt::format(".{}.{}.tmp", ::getpid(), seq.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write cassette: " + tmp.string());
    out << body;
  }
  fs::rename(tmp, dest, ec);
  if (ec) throw Error(Errc::IoError, "cannot finalize cassette: " + dest.string());
}

/// Look up the stored exchange for this bundle; never touches the network.
inline Exchange replay(const PromptBundle& bundle, const std::filesystem::path& cassette_dir) {
  const std::string digest = bundle_digest(bundle);
  const std::filesystem::path src = cassette_dir / (digest + ".json");
  std::ifstream in(src, std::ios::binary);
  if (!in)
    throw Error(Errc::CassetteMiss,
                "no cassette for digest " + digest + " under " + cassette_dir.string());
  try {
    return detail::cassette_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, "cassette " + src.string() + ": " + e.what());
  }
}

/// Dispatches bundles to an OpenAI-compatible chat endpoint. A semaphore
/// bounds in-flight requests at config.parallelism; send() is thread-safe.
class Gateway {
public:
  explicit Gateway(GatewayConfig config) : cfg_(std::move(config)), sem_(cfg_.parallelism) {
    cfg_.validate();
  }

  const GatewayConfig& config() const { return cfg_; }

  Exchange send(const PromptBundle& bundle);

private:
  struct HttpReply {
    int status = 0;
    std::string body;
    bool transport_ok = false;
    bool timed_out = false;
  };

  HttpReply post_once(const std::string& body);
  static std::string request_body(const PromptBundle& bundle);

  GatewayConfig cfg_;
  std::counting_semaphore<4096> sem_;
};

}  // namespace legendforge

// Gateway's member definitions live in gateway_http.hpp; include that header
// in translation units that actually send. Replay-only code stays free of
// the socket stack.
