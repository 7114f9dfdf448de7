#include "chaneff/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "chaneff/codec.hpp"
#include "chaneff/error.hpp"
#include "json_io.hpp"

namespace chaneff::embedding {

namespace fs = std::filesystem;
using detail::ojson;

ProviderDescriptor parse_backend(std::string_view backend, std::string_view model_id) {
  ProviderDescriptor d;
  d.model_id = std::string(model_id);
  if (backend == "cache-only") {
    d.kind = ProviderKind::CacheOnly;
  } else if (backend.starts_with("mock:")) {
    d.kind = ProviderKind::Mock;
    d.endpoint = std::string(backend.substr(5));
    if (d.endpoint != "linear" && d.endpoint != "circle" && d.endpoint != "constant") {
      throw ConfigError("unknown mock backend '" + d.endpoint + "'");
    }
    if (d.model_id.empty()) d.model_id = "mock:" + d.endpoint;
    if (!d.model_id.starts_with("mock:")) {
      throw ConfigError("mock model ids must start with 'mock:', got '" + d.model_id + "'");
    }
  } else if (backend.starts_with("http://")) {
    d.kind = ProviderKind::Http;
    d.endpoint = std::string(backend);
    if (backend.size() <= 7 || backend[7] == '/') {
      throw ConfigError("backend URL has no host: " + d.endpoint);
    }
  } else if (backend.starts_with("https://")) {
    throw ConfigError("https backends are not supported; use http:// or a local proxy");
  } else {
    throw ConfigError("backend must be an http:// URL, mock:<name> or cache-only; got '" +
                      std::string(backend) + "'");
  }
  if (d.model_id.empty()) {
    throw ConfigError("a model id is required for backend '" + std::string(backend) + "'");
  }
  return d;
}

std::string backend_string(const ProviderDescriptor& d) {
  switch (d.kind) {
    case ProviderKind::Http: return d.endpoint;
    case ProviderKind::Mock: return "mock:" + d.endpoint;
    case ProviderKind::CacheOnly: return "cache-only";
  }
  return "cache-only";
}

namespace {

class MockProvider final : public EmbeddingProvider {
 public:
  MockProvider(std::string name, std::string model_id) {
    descriptor_.kind = ProviderKind::Mock;
    descriptor_.endpoint = std::move(name);
    descriptor_.model_id = model_id.empty() ? "mock:" + descriptor_.endpoint : std::move(model_id);
  }

  const ProviderDescriptor& descriptor() const override { return descriptor_; }

 protected:
  std::vector<std::vector<float>> do_embed(std::span<const EmbedRequest> batch) override {
    std::vector<std::vector<float>> out;
    out.reserve(batch.size());
    for (const EmbedRequest& r : batch) out.push_back(one(r));
    return out;
  }

 private:
  std::vector<float> one(const EmbedRequest& r) const {
    std::vector<float> e(kMockDim, 0.0f);
    const std::string& name = descriptor_.endpoint;
    if (name == "constant") {
      std::fill(e.begin(), e.end(), 0.5f);
      return e;
    }
    if (!r.stimulus) {
      throw BackendError("mock backend '" + name + "' needs a stimulus tag on every request");
    }
    const StimulusTag& tag = *r.stimulus;
    if (name == "circle") {
      const double angle = 2.0 * std::numbers::pi * tag.t;
      e[0] = static_cast<float>(std::cos(angle));
      e[1] = static_cast<float>(std::sin(angle));
      return e;
    }
    // linear
    if (const auto* line = tag.params.line()) {
      e[0] = static_cast<float>(line->length_pct);
      e[1] = static_cast<float>(line->tilt_deg / 90.0);
      e[2] = static_cast<float>(line->curvature_deg / 180.0);
    } else {
      e[5] = static_cast<float>(tag.params.square()->area_pct);
    }
    e[3] = static_cast<float>(tag.params.luminance_pct);
    e[4] = static_cast<float>(tag.params.saturation_pct);
    return e;
  }

  ProviderDescriptor descriptor_;
};

class CacheOnlyProvider final : public EmbeddingProvider {
 public:
  explicit CacheOnlyProvider(std::string model_id) {
    descriptor_.kind = ProviderKind::CacheOnly;
    descriptor_.model_id = std::move(model_id);
  }
  const ProviderDescriptor& descriptor() const override { return descriptor_; }

 protected:
  std::vector<std::vector<float>> do_embed(std::span<const EmbedRequest> batch) override {
    throw BackendError("cache miss for " + std::to_string(batch.size()) +
                       " image(s) in cache-only mode (model " + descriptor_.model_id + ")");
  }

 private:
  ProviderDescriptor descriptor_;
};

}  // namespace

std::unique_ptr<EmbeddingProvider> mock_provider(std::string_view name, std::string model_id) {
  if (name != "linear" && name != "circle" && name != "constant") {
    throw ConfigError("unknown mock backend '" + std::string(name) + "'");
  }
  if (!model_id.empty() && !model_id.starts_with("mock:")) {
    throw ConfigError("mock model ids must start with 'mock:', got '" + model_id + "'");
  }
  return std::make_unique<MockProvider>(std::string(name), std::move(model_id));
}

std::unique_ptr<EmbeddingProvider> cache_only_provider(std::string model_id) {
  return std::make_unique<CacheOnlyProvider>(std::move(model_id));
}

std::unique_ptr<EmbeddingProvider> make_provider(const ProviderDescriptor& d) {
  switch (d.kind) {
    case ProviderKind::Http: return std::make_unique<HttpProvider>(d);
    case ProviderKind::Mock: return mock_provider(d.endpoint, d.model_id);
    case ProviderKind::CacheOnly: return cache_only_provider(d.model_id);
  }
  throw ConfigError("unknown provider kind");
}

// --- cache -------------------------------------------------------------------

CacheKey cache_key(const EmbedRequest& request, const EmbeddingProvider& provider) {
  std::string hash = codec::sha256_hex(request.png);
  if (provider.reads_stimulus_tag() && request.stimulus) {
    const StimulusTag& tag = *request.stimulus;
    char t[40];
    std::snprintf(t, sizeof t, "%.17g", tag.t);
    hash = codec::sha256_hex(hash + "|" + std::string(stimulus::channel_name(tag.varied)) +
                             "|" + t + "|" + stimulus::canonical_string(tag.params));
  }
  return {std::move(hash), provider.descriptor().model_id};
}

EmbeddingCache::EmbeddingCache(fs::path root) : root_(std::move(root)) {}

fs::path EmbeddingCache::entry_path(const CacheKey& key) const {
  const std::string model_dir = codec::sha256_hex(key.model_id).substr(0, 16);
  return root_ / model_dir / key.content_hash.substr(0, 2) / (key.content_hash + ".emb");
}

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'M', 'B', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::uint8_t> encode_cache_entry(std::span<const float> values) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.reserve(8 + 4 * values.size());
  put_u32(out, static_cast<std::uint32_t>(values.size()));
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

std::vector<float> decode_cache_entry(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw ParseError("bad magic");
  }
  const std::uint32_t dim = get_u32(bytes.data() + 4);
  if (dim == 0 || bytes.size() != 8 + 4 * static_cast<std::size_t>(dim)) {
    throw ParseError("length does not match dim " + std::to_string(dim));
  }
  std::vector<float> values(dim);
  for (std::uint32_t i = 0; i < dim; ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes.data() + 8 + 4 * i));
  }
  return values;
}

std::optional<std::vector<float>> EmbeddingCache::get(const CacheKey& key) const {
  const fs::path path = entry_path(key);
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    return decode_cache_entry(codec::read_file(path));
  } catch (const ParseError& e) {
    throw ParseError("corrupt cache entry " + path.string() + ": " + e.what());
  }
}

void EmbeddingCache::put(const CacheKey& key, std::span<const float> values) const {
  codec::write_file_atomic(entry_path(key), encode_cache_entry(values));
}

// --- batching ----------------------------------------------------------------

std::vector<EmbeddingVector> embed_batch(EmbeddingProvider& provider,
                                         std::span<const EmbedRequest> requests,
                                         EmbeddingCache* cache, const BatchOptions& options) {
  if (requests.empty()) {
    throw BackendError("empty embedding batch");
  }
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::optional<std::vector<float>>> found(requests.size());
  std::vector<CacheKey> keys;
  std::vector<std::size_t> misses;
  if (cache) {
    keys.reserve(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
      keys.push_back(cache_key(requests[i], provider));
      found[i] = cache->get(keys.back());
      if (!found[i]) misses.push_back(i);
    }
  } else {
    misses.resize(requests.size());
    for (std::size_t i = 0; i < misses.size(); ++i) misses[i] = i;
  }

  std::vector<char> fresh(requests.size(), 0);
  for (std::size_t begin = 0; begin < misses.size(); begin += batch_size) {
    const std::size_t end = std::min(misses.size(), begin + batch_size);
    std::vector<std::vector<float>> got;
    if (misses.size() == requests.size()) {
      got = provider.embed(requests.subspan(begin, end - begin));
    } else {
      std::vector<EmbedRequest> chunk;
      chunk.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) chunk.push_back(requests[misses[k]]);
      got = provider.embed(chunk);
    }
    if (got.size() != end - begin) {
      throw BackendError("backend returned " + std::to_string(got.size()) + " vectors for " +
                         std::to_string(end - begin) + " images");
    }
    for (std::size_t k = begin; k < end; ++k) {
      found[misses[k]] = std::move(got[k - begin]);
      fresh[misses[k]] = 1;
    }
  }

  const std::size_t dim = found.front()->size();
  if (dim == 0) {
    throw BackendError("backend returned an empty embedding");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    std::vector<float>& v = *found[i];
    if (v.size() != dim) {
      throw BackendError("dimension mismatch within batch: " + std::to_string(v.size()) +
                         " vs " + std::to_string(dim));
    }
    for (float x : v) {
      if (!std::isfinite(x)) throw BackendError("non-finite embedding");
    }
    out.push_back({std::move(v), provider.descriptor().model_id});
  }
  if (cache) {
    for (std::size_t i = 0; i < requests.size(); ++i) {
      if (fresh[i]) cache->put(keys[i], out[i].values);
    }
  }
  return out;
}

void l2_normalize(std::span<EmbeddingVector> vectors) {
  for (EmbeddingVector& v : vectors) {
    double sum = 0.0;
    for (float x : v.values) sum += static_cast<double>(x) * x;
    if (sum == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sum);
    for (float& x : v.values) x = static_cast<float>(x * inv);
  }
}

// --- embeddings file ---------------------------------------------------------

namespace {
constexpr std::string_view kEmbeddingsSchema = "chaneff.embeddings";
}

std::string serialize_embeddings(const EmbeddingsFile& file) {
  ojson h;
  h["schema"] = kEmbeddingsSchema;
  h["version"] = 1;
  h["model"] = file.model_id;
  h["backend"] = file.backend;
  h["dim"] = file.dim;
  h["channel"] = detail::channel_to_json(file.channel);
  h["plan"] = file.plan_kind;
  h["steps"] = file.steps;
  h["manifest"] = file.manifest;
  std::string out = h.dump();
  out.push_back('\n');
  for (const EmbeddingRecord& r : file.records) {
    ojson j;
    j["id"] = r.id;
    j["t"] = r.t;
    if (r.cell) j["cell"] = *r.cell;
    j["values"] = r.values;
    out += j.dump();
    out.push_back('\n');
  }
  return out;
}

EmbeddingsFile parse_embeddings(std::string_view text) {
  EmbeddingsFile file;
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      if (line_no == 1) {
        if (j.value("schema", std::string{}) != kEmbeddingsSchema ||
            j.value("version", 0) != 1) {
          throw ParseError("missing header");
        }
        file.model_id = j.at("model").get<std::string>();
        file.backend = j.at("backend").get<std::string>();
        file.dim = j.at("dim").get<std::size_t>();
        file.channel = detail::channel_from_json(j.at("channel"));
        file.plan_kind = j.at("plan").get<std::string>();
        file.steps = j.at("steps").get<std::size_t>();
        file.manifest = j.at("manifest").get<std::string>();
        continue;
      }
      EmbeddingRecord r;
      r.id = j.at("id").get<std::string>();
      r.t = j.at("t").get<double>();
      if (j.contains("cell")) r.cell = j.at("cell").get<std::size_t>();
      r.values = j.at("values").get<std::vector<float>>();
      if (r.values.size() != file.dim) {
        throw ParseError("dimension " + std::to_string(r.values.size()) + " != header dim " +
                         std::to_string(file.dim));
      }
      file.records.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw ParseError("embeddings file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (line_no == 0) {
    throw ParseError("embeddings file: missing header");
  }
  return file;
}

void write_embeddings(const EmbeddingsFile& file, const fs::path& path) {
  codec::write_file_atomic(path, serialize_embeddings(file));
}

EmbeddingsFile load_embeddings(const fs::path& path) {
  return parse_embeddings(codec::read_text_file(path));
}

}  // namespace chaneff::embedding
