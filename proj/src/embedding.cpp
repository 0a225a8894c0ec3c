#include "intent_miner/embedding.hpp"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "intent_miner/errors.hpp"

namespace intent_miner::embedding {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::uint64_t kUnigramSeed = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kBigramSeed = 0xd1b54a32d192ed03ULL;

std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void add_hashed(Embedding& v, std::string_view key, std::uint64_t seed) {
  const auto h = stable_hash64(key, seed);
  const auto idx = static_cast<std::size_t>(h % v.size());
  v[idx] += (h >> 63) ? -1.0 : 1.0;
}

}  // namespace

void ProviderSpec::validate() const {
  if (dimension == 0) throw ValidationError("embedding dimension must be positive");
  if (max_tokens == 0) throw ValidationError("max_tokens must be positive");
}

std::string_view to_code(ProviderKind kind) { return kind == ProviderKind::kHashed ? "hashed" : "sidecar"; }
std::string_view to_code(PoolingMode mode) { return mode == PoolingMode::kRawCls ? "raw_cls" : "pooled"; }

ProviderKind parse_provider_kind(std::string_view s) {
  if (s == "hashed") return ProviderKind::kHashed;
  if (s == "sidecar") return ProviderKind::kSidecar;
  throw ValidationError("unknown provider kind '" + std::string(s) + "'");
}

PoolingMode parse_pooling_mode(std::string_view s) {
  if (s == "raw_cls") return PoolingMode::kRawCls;
  if (s == "pooled") return PoolingMode::kPooled;
  throw ValidationError("unknown pooling mode '" + std::string(s) + "'");
}

nlohmann::json ProviderSpec::to_json() const {
  return nlohmann::json{{"kind", to_code(kind)},
                        {"dimension", dimension},
                        {"max_tokens", max_tokens},
                        {"mode", to_code(mode)}};
}

ProviderSpec ProviderSpec::from_json(const nlohmann::json& j) {
  ProviderSpec s;
  try {
    if (j.contains("kind")) s.kind = parse_provider_kind(j.at("kind").get<std::string>());
    if (j.contains("dimension")) s.dimension = j.at("dimension").get<std::size_t>();
    if (j.contains("max_tokens")) s.max_tokens = j.at("max_tokens").get<std::size_t>();
    if (j.contains("mode")) s.mode = parse_pooling_mode(j.at("mode").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed provider spec: ") + e.what());
  }
  s.validate();
  return s;
}

std::uint64_t stable_hash64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = kFnvOffset;
  for (int shift = 0; shift < 64; shift += 8) {
    h ^= (seed >> shift) & 0xFF;
    h *= kFnvPrime;
  }
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return splitmix_finalize(h);
}

std::vector<std::string> hashed_tokens(std::string_view text, std::size_t max_tokens) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size() && out.size() < max_tokens) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::string tok;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) {
      tok += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
      ++i;
    }
    if (!tok.empty()) out.push_back(std::move(tok));
  }
  return out;
}

HashedProvider::HashedProvider(ProviderSpec spec) : spec_(spec) {
  spec_.kind = ProviderKind::kHashed;
  spec_.validate();
}

Embedding HashedProvider::embed(std::string_view text) {
  Embedding v(spec_.dimension, 0.0);
  const auto tokens = hashed_tokens(text, spec_.max_tokens);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add_hashed(v, tokens[i], kUnigramSeed);
    if (i + 1 < tokens.size()) {
      std::string bigram = tokens[i];
      bigram += ' ';
      bigram += tokens[i + 1];
      add_hashed(v, bigram, kBigramSeed);
    }
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
  }
  return v;
}

SidecarProvider::SidecarProvider(ProviderSpec spec, const std::string& address,
                                 std::chrono::milliseconds timeout)
    : spec_(spec) {
  spec_.kind = ProviderKind::kSidecar;
  spec_.validate();
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
    throw ValidationError("sidecar address must be host:port, got '" + address + "'");
  }
  const std::string host = address.substr(0, colon);
  const std::string port = address.substr(colon + 1);

  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw TransportError("cannot resolve sidecar '" + address + "': " + ::gai_strerror(rc));
  }
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw TransportError("cannot connect to sidecar at '" + address + "'");

  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);

  try {
    send_line(R"({"op":"hello"})");
    const auto reply = nlohmann::json::parse(read_line());
    const auto served = reply.at("dimension").get<std::size_t>();
    model_name_ = reply.value("model", std::string());
    if (served != spec_.dimension) {
      throw ProtocolError("sidecar serves dimension " + std::to_string(served) + ", expected " +
                          std::to_string(spec_.dimension));
    }
  } catch (const nlohmann::json::exception& e) {
    ::close(fd_);
    throw ProtocolError(std::string("bad sidecar handshake: ") + e.what());
  } catch (...) {
    ::close(fd_);
    throw;
  }
}

SidecarProvider::~SidecarProvider() {
  if (fd_ >= 0) ::close(fd_);
}

void SidecarProvider::send_line(const std::string& line) {
  std::string data = line;
  data += '\n';
  std::size_t sent = 0;
  while (sent < data.size()) {
    const auto n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(std::string("sidecar send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::string SidecarProvider::read_line() {
  for (;;) {
    if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    char chunk[65536];
    const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n == 0) throw TransportError("sidecar closed the connection");
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw TransportError("sidecar timed out");
      throw TransportError(std::string("sidecar receive failed: ") + std::strerror(errno));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

Embedding SidecarProvider::embed(std::string_view text) {
  std::lock_guard lock(mutex_);
  const std::string id = std::to_string(next_id_++);
  const nlohmann::json request{{"id", id},
                               {"text", std::string(text)},
                               {"max_tokens", spec_.max_tokens},
                               {"mode", to_code(spec_.mode)}};
  send_line(request.dump());
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(read_line());
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("unparseable sidecar reply: ") + e.what());
  }
  if (!reply.is_object() || !reply.contains("id") || !reply["id"].is_string() ||
      reply["id"].get<std::string>() != id) {
    throw ProtocolError("sidecar reply id does not match request " + id);
  }
  if (reply.contains("error")) {
    throw ProtocolError("sidecar error: " + reply["error"].dump());
  }
  if (!reply.contains("vector") || !reply["vector"].is_array()) {
    throw ProtocolError("sidecar reply has no vector");
  }
  Embedding v;
  v.reserve(spec_.dimension);
  for (const auto& x : reply["vector"]) {
    if (!x.is_number()) throw ProtocolError("sidecar vector has a non-numeric entry");
    const double d = x.get<double>();
    if (!std::isfinite(d)) throw ProtocolError("sidecar vector has a non-finite entry");
    v.push_back(d);
  }
  if (v.size() != spec_.dimension) {
    throw ProtocolError("sidecar vector has dimension " + std::to_string(v.size()) + ", expected " +
                        std::to_string(spec_.dimension));
  }
  return v;
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec, const std::string& address) {
  if (spec.kind == ProviderKind::kHashed) return std::make_unique<HashedProvider>(spec);
  std::string addr = address;
  if (const char* env = std::getenv(kSidecarEnvVar); env != nullptr && *env != '\0') addr = env;
  if (addr.empty()) {
    throw ValidationError(std::string("sidecar provider needs an address (config or ") + kSidecarEnvVar + ")");
  }
  return std::make_unique<SidecarProvider>(spec, addr);
}

std::vector<Embedding> embed_batch(EmbeddingProvider& provider, std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      out.push_back(provider.embed(texts[i]));
    } catch (const TransportError& e) {
      throw TransportError("batch element " + std::to_string(i) + ": " + e.what());
    } catch (const ProtocolError& e) {
      throw ProtocolError("batch element " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace intent_miner::embedding
