#pragma once

// In-process NDJSON server speaking the sidecar wire protocol, with knobs
// for misbehaving.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

namespace intent_miner::testing {

class FakeSidecar {
 public:
  enum class Fault {
    kNone,
    kWrongId,          // echo a different id
    kErrorReply,       // {"id", "error"}
    kWrongDimension,   // vector one shorter than announced
    kGarbage,          // a line that is not JSON
    kCloseAfterHello,  // drop the connection after the handshake
  };

  explicit FakeSidecar(std::size_t dimension, std::size_t announced_dimension = 0, Fault fault = Fault::kNone);
  ~FakeSidecar();

  FakeSidecar(const FakeSidecar&) = delete;
  FakeSidecar& operator=(const FakeSidecar&) = delete;

  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }

  // Requests seen so far (handshakes included), in arrival order.
  std::vector<nlohmann::json> requests() const;

  // The vector the server returns for `text`.
  static std::vector<double> vector_for(const std::string& text, std::size_t dimension);

 private:
  void serve();
  void handle(int fd);

  std::size_t dimension_;
  std::size_t announced_;
  Fault fault_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stop_{false};
  std::thread thread_;
  mutable std::mutex mu_;
  std::vector<nlohmann::json> requests_;
};

}  // namespace intent_miner::testing
