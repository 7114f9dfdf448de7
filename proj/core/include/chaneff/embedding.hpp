#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chaneff/stimulus.hpp"

namespace chaneff::embedding {

using stimulus::ChannelId;
using stimulus::StimulusParams;

struct EmbeddingVector {
  std::vector<float> values;
  std::string model_id;

  std::size_t dim() const { return values.size(); }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

/// What the harness knows about the image it sends. Backends that embed
/// pixels ignore it; the mock backends read it instead of decoding PNGs.
struct StimulusTag {
  ChannelId varied = ChannelId::Length;
  double t = 0.0;
  StimulusParams params;
};

struct EmbedRequest {
  std::vector<std::uint8_t> png;
  std::optional<StimulusTag> stimulus;
};

enum class ProviderKind { Http, Mock, CacheOnly };

struct ProviderDescriptor {
  ProviderKind kind = ProviderKind::CacheOnly;
  /// Absolute URL for Http, mock name for Mock, empty for CacheOnly.
  std::string endpoint;
  std::string model_id;
};

/// Parses "http://host:port[/prefix]", "mock:<name>" or "cache-only".
/// Throws ConfigError on malformed input or an empty model id.
ProviderDescriptor parse_backend(std::string_view backend, std::string_view model_id);

/// Round-trips through parse_backend.
std::string backend_string(const ProviderDescriptor& descriptor);

/// A source of embeddings. Implementations must be safe to call from several
/// threads at once.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual const ProviderDescriptor& descriptor() const = 0;

  /// Raw vectors in request order; counts one backend call. Validation
  /// happens in embed_batch.
  std::vector<std::vector<float>> embed(std::span<const EmbedRequest> batch) {
    calls_.fetch_add(1);
    return do_embed(batch);
  }

  /// True for the "mock:" model namespace, whose vectors come from the
  /// attached StimulusTag rather than the image bytes; cache keys then cover
  /// the tag too. Cache-only providers follow the same rule, so they find
  /// entries written by a mock.
  bool reads_stimulus_tag() const { return descriptor().model_id.starts_with("mock:"); }

  std::size_t backend_calls() const { return calls_.load(); }

 protected:
  virtual std::vector<std::vector<float>> do_embed(std::span<const EmbedRequest> batch) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

inline constexpr std::size_t kMockDim = 8;

/// Deterministic test backends:
///  - "linear":   (length, tilt/90, curvature/180, luminance, saturation, area, 0, 0)
///  - "circle":   (cos 2πt, sin 2πt, 0, ...)
///  - "constant": every component 0.5
/// Throws ConfigError for any other name or a model id outside "mock:".
std::unique_ptr<EmbeddingProvider> mock_provider(std::string_view name,
                                                 std::string model_id = {});

/// Never produces vectors; every request is a BackendError. Use with a
/// populated cache.
std::unique_ptr<EmbeddingProvider> cache_only_provider(std::string model_id);

struct HttpOptions {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  std::chrono::seconds timeout{120};
};

struct HealthStatus {
  std::string status;
  std::vector<std::string> models;
};

/// Client for the embedding service: POST /v1/embed, GET /v1/health. 503
/// responses and connection failures are retried with exponential backoff.
class HttpProvider final : public EmbeddingProvider {
 public:
  explicit HttpProvider(ProviderDescriptor descriptor, HttpOptions options = {});
  ~HttpProvider() override;

  const ProviderDescriptor& descriptor() const override { return descriptor_; }
  HealthStatus health() const;

 protected:
  std::vector<std::vector<float>> do_embed(std::span<const EmbedRequest> batch) override;

 private:
  ProviderDescriptor descriptor_;
  HttpOptions options_;
  std::string origin_;
  std::string prefix_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderDescriptor& descriptor);

// --- cache -------------------------------------------------------------------

struct CacheKey {
  std::string content_hash;
  std::string model_id;

  friend bool operator==(const CacheKey&, const CacheKey&) = default;
};

CacheKey cache_key(const EmbedRequest& request, const EmbeddingProvider& provider);

/// Content-addressed store. Entry layout: "EMB1", u32 LE dim, dim × f32 LE.
/// Writes go through a temp file and rename, so concurrent writers of the
/// same key are harmless.
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path entry_path(const CacheKey& key) const;

  /// nullopt when absent. Throws ParseError ("corrupt cache entry <path>")
  /// for truncated or mis-tagged files.
  std::optional<std::vector<float>> get(const CacheKey& key) const;
  void put(const CacheKey& key, std::span<const float> values) const;

 private:
  std::filesystem::path root_;
};

std::vector<std::uint8_t> encode_cache_entry(std::span<const float> values);
std::vector<float> decode_cache_entry(std::span<const std::uint8_t> bytes);

// --- batching ----------------------------------------------------------------

struct BatchOptions {
  std::size_t batch_size = 32;
};

/// One vector per request, in order. Cache hits skip the backend; misses are
/// sent in chunks of batch_size and written through. Throws BackendError on
/// an empty batch, a count or dimension mismatch, or a non-finite component
/// ("non-finite embedding").
std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider,
                                         std::span<const EmbedRequest> requests,
                                         EmbeddingCache* cache = nullptr,
                                         const BatchOptions& options = {});

/// Scales each vector to unit L2 norm; zero vectors are left unchanged.
void l2_normalize(std::span<EmbeddingVector> vectors);

// --- embeddings file ---------------------------------------------------------

struct EmbeddingRecord {
  std::string id;
  double t = 0.0;
  std::optional<std::size_t> cell;
  std::vector<float> values;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

/// Hand-off between the embed and analyze stages: a JSON-lines file whose
/// header names the model, dimension and source manifest.
struct EmbeddingsFile {
  std::string model_id;
  std::string backend;
  std::size_t dim = 0;
  ChannelId channel = ChannelId::Length;
  std::string plan_kind = "sweep";
  std::size_t steps = 0;
  std::string manifest;
  std::vector<EmbeddingRecord> records;

  friend bool operator==(const EmbeddingsFile&, const EmbeddingsFile&) = default;
};

std::string serialize_embeddings(const EmbeddingsFile& file);
EmbeddingsFile parse_embeddings(std::string_view text);
void write_embeddings(const EmbeddingsFile& file, const std::filesystem::path& path);
EmbeddingsFile load_embeddings(const std::filesystem::path& path);

}  // namespace chaneff::embedding
