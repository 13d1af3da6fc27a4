#include "guidex/service.hpp"

#include <istream>
#include <ostream>

#include <httplib.h>

#include "guidex/error.hpp"

namespace guidex {

namespace {

ServiceReply bad_request(std::string message) {
  // Parser messages can echo raw request bytes, which may not be UTF-8.
  for (char& c : message) {
    if (static_cast<unsigned char>(c) >= 0x80) c = '?';
  }
  Json body = Json::object();
  body["error"] = "bad_request";
  body["message"] = std::move(message);
  return {400, std::move(body)};
}

// Throws Error with a client-facing message on a malformed request object.
std::pair<std::string, std::string> read_request(const Json& req) {
  if (!req.is_object()) throw Error("request must be a JSON object");
  auto id = req.find("instance_id");
  auto resp = req.find("response");
  if (id == req.end() || !id->is_string()) throw Error("'instance_id' must be a string");
  if (resp == req.end() || !resp->is_string()) throw Error("'response' must be a string");
  return {id->get<std::string>(), resp->get<std::string>()};
}

}  // namespace

ServiceReply RewardService::handle_single(std::string_view body) const {
  std::pair<std::string, std::string> req;
  try {
    req = read_request(Json::parse(body));
  } catch (const Json::exception& e) {
    return bad_request(std::string("malformed JSON: ") + e.what());
  } catch (const Error& e) {
    return bad_request(e.what());
  }
  const ScoreItem item = score_one(store_, req.first, req.second, mode_);
  return {item.error ? 404 : 200, score_item_to_json(item)};
}

ServiceReply RewardService::handle_batch(std::string_view body) const {
  std::vector<std::pair<std::string, std::string>> requests;
  try {
    const Json doc = Json::parse(body);
    if (!doc.is_array()) return bad_request("batch body must be a JSON array");
    for (const auto& r : doc) requests.push_back(read_request(r));
  } catch (const Json::exception& e) {
    return bad_request(std::string("malformed JSON: ") + e.what());
  } catch (const Error& e) {
    return bad_request(e.what());
  }
  Json out = Json::array();
  for (const auto& item : score_batch(store_, requests, mode_)) out.push_back(score_item_to_json(item));
  return {200, std::move(out)};
}

Json RewardService::health() const {
  Json out = Json::object();
  out["status"] = "ok";
  out["trees"] = store_.tree_count();
  out["factual"] = store_.factual_count();
  out["counterfactual"] = store_.counterfactual_count();
  return out;
}

std::string RewardService::handle_line(std::string_view line) const {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
  const bool batch = i < line.size() && line[i] == '[';
  return canonical_dump((batch ? handle_batch(line) : handle_single(line)).body);
}

void serve_stdio(const RewardService& service, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out << service.handle_line(line) << '\n' << std::flush;
  }
}

struct HttpRewardServer::Impl {
  const RewardService& service;
  httplib::Server server;

  explicit Impl(const RewardService& s) : service(s) {}
};

HttpRewardServer::HttpRewardServer(const RewardService& service, std::size_t workers)
    : impl_(std::make_unique<Impl>(service)) {
  if (workers == 0) throw Error("at least one worker is required");
  auto& server = impl_->server;
  server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  server.set_tcp_nodelay(true);
  const RewardService* svc = &service;

  auto reply = [](httplib::Response& res, const ServiceReply& r) {
    res.status = r.status;
    res.set_content(canonical_dump(r.body), "application/json");
  };
  server.Post("/reward", [svc, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->handle_single(req.body));
  });
  server.Post("/reward/batch", [svc, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->handle_batch(req.body));
  });
  server.Get("/healthz", [svc](const httplib::Request&, httplib::Response& res) {
    res.set_content(canonical_dump(svc->health()), "application/json");
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    Json body = Json::object();
    body["error"] = "internal";
    body["message"] = what;
    res.status = 500;
    res.set_content(canonical_dump(body), "application/json");
  });
}

HttpRewardServer::~HttpRewardServer() { stop(); }

int HttpRewardServer::bind(const std::string& host, int port) {
  auto& server = impl_->server;
  if (port == 0) {
    const int bound = server.bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host + " on any port");
    return bound;
  }
  if (!server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpRewardServer::listen() { impl_->server.listen_after_bind(); }

void HttpRewardServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace guidex
