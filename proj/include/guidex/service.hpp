#pragma once

// Reward service: the verifier wire contract over stdio lines or HTTP.
//
//   request  {"instance_id": "...", "response": "<full text>"}
//   reply    {"instance_id", "reward", "format", "answer", "hidden_match",
//             "consistency", "error"}
//   batch    a JSON array of requests -> array of replies, same order

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include "guidex/canonical_json.hpp"
#include "guidex/instance_store.hpp"
#include "guidex/verifier.hpp"

namespace guidex {

struct ServiceReply {
  int status = 200;  // HTTP status; 400 malformed, 404 unknown instance
  Json body;
};

class RewardService {
 public:
  RewardService(const InstanceStore& store, RewardMode mode) : store_(store), mode_(mode) {}

  ServiceReply handle_single(std::string_view body) const;
  ServiceReply handle_batch(std::string_view body) const;
  /// {"status":"ok","trees":N,"factual":N,"counterfactual":N}
  Json health() const;

  /// One stdio line: an object is scored singly, an array as a batch.
  std::string handle_line(std::string_view line) const;

 private:
  const InstanceStore& store_;
  RewardMode mode_;
};

/// Reads requests line by line until EOF, writing one reply line each.
void serve_stdio(const RewardService& service, std::istream& in, std::ostream& out);

class HttpRewardServer {
 public:
  /// `workers` request threads; 1 gives the single-worker configuration.
  HttpRewardServer(const RewardService& service, std::size_t workers = 1);
  ~HttpRewardServer();

  /// Binds `host:port` (port 0 picks a free one) and returns the bound port.
  /// Throws Error when the address cannot be bound.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace guidex
