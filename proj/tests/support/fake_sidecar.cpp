#include "fake_sidecar.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <stdexcept>

namespace intent_miner::testing {

namespace {

void send_all(int fd, const std::string& s) {
  std::size_t off = 0;
  while (off < s.size()) {
    const auto n = ::send(fd, s.data() + off, s.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return;
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

FakeSidecar::FakeSidecar(std::size_t dimension, std::size_t announced_dimension, Fault fault)
    : dimension_(dimension), announced_(announced_dimension == 0 ? dimension : announced_dimension), fault_(fault) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(listen_fd_, 8) != 0) {
    ::close(listen_fd_);
    throw std::runtime_error("bind/listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  thread_ = std::thread([this] { serve(); });
}

FakeSidecar::~FakeSidecar() {
  stop_ = true;
  if (thread_.joinable()) thread_.join();
  ::close(listen_fd_);
}

std::vector<nlohmann::json> FakeSidecar::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_;
}

std::vector<double> FakeSidecar::vector_for(const std::string& text, std::size_t dimension) {
  std::vector<double> v(dimension);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) h = (h ^ c) * 1099511628211ULL;
  for (std::size_t i = 0; i < dimension; ++i) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 29;
    v[i] = static_cast<double>(h % 2001) / 1000.0 - 1.0;
  }
  return v;
}

void FakeSidecar::serve() {
  while (!stop_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    handle(fd);
    ::close(fd);
  }
}

void FakeSidecar::handle(int fd) {
  std::string buffer;
  char chunk[4096];
  while (!stop_) {
    auto nl = buffer.find('\n');
    if (nl == std::string::npos) {
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, 50) <= 0) continue;
      const auto n = ::recv(fd, chunk, sizeof(chunk), 0);
      if (n <= 0) return;
      buffer.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    const std::string line = buffer.substr(0, nl);
    buffer.erase(0, nl + 1);

    nlohmann::json req;
    try {
      req = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      send_all(fd, nlohmann::json{{"id", nullptr}, {"error", "bad json"}}.dump() + "\n");
      continue;
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      requests_.push_back(req);
    }

    if (req.value("op", "") == "hello") {
      send_all(fd, nlohmann::json{{"dimension", announced_}, {"model", "fake-encoder"}}.dump() + "\n");
      if (fault_ == Fault::kCloseAfterHello) return;
      continue;
    }

    const std::string id = req.value("id", "");
    nlohmann::json resp;
    switch (fault_) {
      case Fault::kWrongId:
        resp = {{"id", id + "-x"}, {"vector", vector_for(req.value("text", ""), dimension_)}};
        break;
      case Fault::kErrorReply:
        resp = {{"id", id}, {"error", "model unavailable"}};
        break;
      case Fault::kWrongDimension:
        resp = {{"id", id}, {"vector", vector_for(req.value("text", ""), dimension_ - 1)}};
        break;
      case Fault::kGarbage:
        send_all(fd, "this is not json\n");
        continue;
      default:
        resp = {{"id", id}, {"vector", vector_for(req.value("text", ""), dimension_)}};
        break;
    }
    send_all(fd, resp.dump() + "\n");
  }
}

}  // namespace intent_miner::testing
