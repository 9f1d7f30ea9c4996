#pragma once

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "legendforge/gateway.hpp"
#include "legendforge/log.hpp"

namespace legendforge {

inline std::string Gateway::request_body(const PromptBundle& bundle) {
  auto image_part = [](const ImageAttachment& img) {
    nlohmann::json part;
    part["type"] = "image_url";
    part["image_url"]["url"] =
        "data:" + img.media_type + ";base64," + base64_encode(img.bytes);
    return part;
  };
  nlohmann::json body;
  body["model"] = bundle.request_settings.model_name;
  body["temperature"] = bundle.request_settings.temperature;
  body["max_tokens"] = bundle.request_settings.max_output_tokens;
  // Part order mirrors the prompt structure: example image, JSON block,
  // target image.
  body["messages"] = nlohmann::json::array(
      {{{"role", "user"},
        {"content", nlohmann::json::array({image_part(bundle.example_image),
                                           {{"type", "text"}, {"text", bundle.json_block}},
                                           image_part(bundle.target_image)})}}});
  return body.dump();
}

inline Gateway::HttpReply Gateway::post_once(const std::string& body) {
  const auto scheme_end = cfg_.endpoint_url.find("://");
  const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = cfg_.endpoint_url.find('/', host_start);
  std::string base = cfg_.endpoint_url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : cfg_.endpoint_url.substr(path_start);
  httplib::Client client(base);

  const char* key = std::getenv(cfg_.api_key_env_var.c_str());
  client.set_default_headers({{"Authorization", std::string("Bearer ") + (key ? key : "")}});
  client.set_connection_timeout(std::chrono::milliseconds(static_cast<long>(cfg_.timeout_s * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(static_cast<long>(cfg_.timeout_s * 1000)));
  client.set_write_timeout(std::chrono::milliseconds(static_cast<long>(cfg_.timeout_s * 1000)));

  HttpReply reply;
  auto res = client.Post(path, body, "application/json");
  if (!res) {
    reply.timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                      res.error() == httplib::Error::Read || res.error() == httplib::Error::Write;
    return reply;
  }
  reply.transport_ok = true;
  reply.status = res->status;
  reply.body = res->body;
  return reply;
}

inline Exchange Gateway::send(const PromptBundle& bundle) {
  const char* key = std::getenv(cfg_.api_key_env_var.c_str());
  if (!key || !*key)
    throw Error(Errc::AuthError, "API key env var " + cfg_.api_key_env_var + " is not set");

  sem_.acquire();
  struct Release {
    std::counting_semaphore<4096>& s;
    ~Release() { s.release(); }
  } release{sem_};

  const std::string body = request_body(bundle);
  // Bodies only at debug, truncated; the Authorization header is never logged.
  log::debug("gateway request endpoint={} model={} bytes={} body={}", cfg_.endpoint_url,
             bundle.request_settings.model_name, body.size(), body.substr(0, 2048));

  HttpReply reply;
  int attempts = 0;
  long latency_ms = 0;
  for (;;) {
    const auto t0 = std::chrono::steady_clock::now();
    reply = post_once(body);
    latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    ++attempts;

    if (reply.transport_ok)
      log::debug("gateway response status={} bytes={} body={}", reply.status, reply.body.size(),
                 reply.body.substr(0, 2048));
    if (reply.transport_ok && reply.status == 200) break;
    if (reply.transport_ok && (reply.status == 401 || reply.status == 403))
      throw Error(Errc::AuthError, "endpoint rejected credentials (HTTP " +
                                       std::to_string(reply.status) + ")");

    const bool retryable =
        !reply.transport_ok || reply.status == 429 || reply.status >= 500;
    if (!retryable)
      throw Error(Errc::TransportError,
                  "HTTP " + std::to_string(reply.status) + ": " + reply.body.substr(0, 200));
    if (attempts > cfg_.max_retries) {
      if (reply.transport_ok && reply.status == 429)
        throw Error(Errc::RateLimited, "rate limited after " + std::to_string(attempts) +
                                           " attempts");
      if (!reply.transport_ok && reply.timed_out)
        throw Error(Errc::TimeoutError, "request timed out after " + std::to_string(attempts) +
                                            " attempts");
      throw Error(Errc::TransportError,
                  reply.transport_ok
                      ? "HTTP " + std::to_string(reply.status) + " after retries"
                      : "transport failure after " + std::to_string(attempts) + " attempts");
    }
    const long delay = static_cast<long>(cfg_.backoff_initial_ms) << (attempts - 1);
    log::info("gateway retry attempt={} delay_ms={} status={}", attempts, delay,
              reply.transport_ok ? std::to_string(reply.status) : "transport-error");
    std::this_thread::sleep_for(std::chrono::milliseconds(delay));
  }

  Exchange ex;
  ex.request_digest = bundle_digest(bundle);
  ex.retries = attempts - 1;
  ex.latency_ms = latency_ms;
  ex.timestamp = utc_timestamp_now();

  try {
    const auto j = nlohmann::json::parse(reply.body);
    ex.response_text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      ex.input_tokens = j["usage"].value("prompt_tokens", 0L);
      ex.output_tokens = j["usage"].value("completion_tokens", 0L);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::TransportError, std::string("malformed endpoint response: ") + e.what());
  }
  if (ex.input_tokens == 0) ex.input_tokens = estimate_tokens(bundle);
  if (ex.output_tokens == 0)
    ex.output_tokens = estimate_tokens(ex.response_text.size(), 0);
  return ex;
}

}  // namespace legendforge
