#include <cmath>
#include <thread>

#include <httplib.h>

#include "guidex/error.hpp"
#include "guidex/extraction.hpp"

namespace guidex {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw Error("base url '" + base_url + "' lacks a scheme");
  const auto path_start = base_url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  e.path = prefix + "/chat/completions";
  return e;
}

class SlotGuard {
 public:
  explicit SlotGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SlotGuard() { s_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

std::ptrdiff_t checked_slots(const HttpBackendConfig& c) {
  if (c.max_in_flight == 0) throw Error("max_in_flight must be at least 1");
  return static_cast<std::ptrdiff_t>(c.max_in_flight);
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleep_(std::move(sleeper)), in_flight_(checked_slots(config_)) {
  if (config_.base_url.empty()) throw Error("http backend needs a base url (GUIDEX_LLM_BASE_URL)");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

HttpChatBackend::~HttpChatBackend() = default;

std::string HttpChatBackend::complete(const ChatRequest& request) {
  const Endpoint endpoint = split_url(config_.base_url);
  Json body = request_to_json(request);
  if (!config_.model.empty()) body["model"] = config_.model;
  const std::string payload = body.dump();

  SlotGuard slot(in_flight_);
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double scale = std::pow(config_.backoff_factor, attempt - 1);
      sleep_(std::chrono::milliseconds(
          static_cast<long long>(std::llround(config_.base_delay.count() * scale))));
    }
    httplib::Client client(endpoint.origin);
    client.set_connection_timeout(config_.timeout.count());
    client.set_read_timeout(config_.timeout.count());
    client.set_write_timeout(config_.timeout.count());
    if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

    auto res = client.Post(endpoint.path, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) throw BackendError("chat endpoint returned HTTP " + std::to_string(res->status));
    try {
      const Json reply = Json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
      throw BackendError(std::string("malformed chat-completions reply: ") + e.what());
    }
  }
  throw BackendError("chat endpoint failed after " + std::to_string(config_.max_retries) +
                     " retries: " + last_error);
}

}  // namespace guidex
