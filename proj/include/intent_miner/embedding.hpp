#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace intent_miner::embedding {

enum class ProviderKind { kHashed, kSidecar };
// raw_cls: last-hidden-state vector of the first token; pooled: pooler output.
enum class PoolingMode { kRawCls, kPooled };

struct ProviderSpec {
  ProviderKind kind = ProviderKind::kHashed;
  std::size_t dimension = 768;
  std::size_t max_tokens = 256;
  PoolingMode mode = PoolingMode::kPooled;

  void validate() const;
  nlohmann::json to_json() const;
  static ProviderSpec from_json(const nlohmann::json& j);
};

std::string_view to_code(ProviderKind kind);
std::string_view to_code(PoolingMode mode);
ProviderKind parse_provider_kind(std::string_view s);
PoolingMode parse_pooling_mode(std::string_view s);

using Embedding = std::vector<double>;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  // Head-only truncation to spec().max_tokens tokens happens inside the
  // provider, using its own tokenization.
  virtual Embedding embed(std::string_view text) = 0;
  virtual const ProviderSpec& spec() const = 0;
};

// Feature hashing over lowercased whitespace unigrams and bigrams: each
// n-gram adds +1 or -1 (hash bit 63) at index hash % dimension; the result is
// L2-normalized. Empty text gives the zero vector. Hashes are FNV-1a 64 with
// a splitmix64 finalizer and fixed seeds, so vectors are identical on every
// platform. Thread-safe.
class HashedProvider final : public EmbeddingProvider {
 public:
  explicit HashedProvider(ProviderSpec spec);

  Embedding embed(std::string_view text) override;
  const ProviderSpec& spec() const override { return spec_; }

 private:
  ProviderSpec spec_;
};

std::uint64_t stable_hash64(std::string_view bytes, std::uint64_t seed);

// Lowercased whitespace tokens, truncated to the first max_tokens.
std::vector<std::string> hashed_tokens(std::string_view text, std::size_t max_tokens);

// Client for the embedding sidecar: newline-delimited JSON over TCP.
//
//   -> {"op":"hello"}
//   <- {"dimension": 768, "model": "..."}
//   -> {"id": "7", "text": "...", "max_tokens": 256, "mode": "raw_cls"}
//   <- {"id": "7", "vector": [...]}  or  {"id": "7", "error": "..."}
//
// Requests on one connection are serialized with a mutex.
class SidecarProvider final : public EmbeddingProvider {
 public:
  // address is "host:port". Connects and performs the handshake; throws
  // TransportError when unreachable and ProtocolError when the served
  // dimension differs from spec.dimension.
  SidecarProvider(ProviderSpec spec, const std::string& address,
                  std::chrono::milliseconds timeout = std::chrono::seconds(60));
  ~SidecarProvider() override;

  SidecarProvider(const SidecarProvider&) = delete;
  SidecarProvider& operator=(const SidecarProvider&) = delete;

  Embedding embed(std::string_view text) override;
  const ProviderSpec& spec() const override { return spec_; }
  const std::string& model_name() const { return model_name_; }

 private:
  void send_line(const std::string& line);
  std::string read_line();

  ProviderSpec spec_;
  int fd_ = -1;
  std::string buffer_;
  std::string model_name_;
  std::uint64_t next_id_ = 0;
  std::mutex mutex_;
};

// Environment variable that overrides the configured sidecar address.
inline constexpr const char* kSidecarEnvVar = "INTENT_MINER_SIDECAR";

// Hashed specs ignore the address. For sidecar specs the environment variable
// wins over `address`.
std::unique_ptr<EmbeddingProvider> make_provider(const ProviderSpec& spec, const std::string& address = {});

// Element-wise embed; failures are rethrown with the element index.
std::vector<Embedding> embed_batch(EmbeddingProvider& provider, std::span<const std::string> texts);

}  // namespace intent_miner::embedding
