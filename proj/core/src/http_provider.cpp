#include <httplib.h>

#include <cmath>
#include <limits>
#include <thread>

#include "chaneff/codec.hpp"
#include "chaneff/embedding.hpp"
#include "chaneff/error.hpp"
#include "json_io.hpp"

namespace chaneff::embedding {

using detail::ojson;

HttpProvider::HttpProvider(ProviderDescriptor descriptor, HttpOptions options)
    : descriptor_(std::move(descriptor)), options_(options) {
  if (descriptor_.kind != ProviderKind::Http || !descriptor_.endpoint.starts_with("http://")) {
    throw ConfigError("HttpProvider needs an absolute http:// URL");
  }
  const std::size_t slash = descriptor_.endpoint.find('/', 7);
  origin_ = descriptor_.endpoint.substr(0, slash);
  if (slash != std::string::npos) {
    prefix_ = descriptor_.endpoint.substr(slash);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }
}

HttpProvider::~HttpProvider() = default;

namespace {

httplib::Client make_client(const std::string& origin, std::chrono::seconds timeout) {
  httplib::Client client(origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  return client;
}

float to_float(const ojson& v) {
  if (v.is_null()) return std::numeric_limits<float>::quiet_NaN();
  if (!v.is_number()) throw BackendError("embedding component is not a number");
  return static_cast<float>(v.get<double>());
}

}  // namespace

std::vector<std::vector<float>> HttpProvider::do_embed(std::span<const EmbedRequest> batch) {
  ojson body;
  body["model"] = descriptor_.model_id;
  body["images"] = ojson::array();
  for (const EmbedRequest& r : batch) body["images"].push_back(codec::base64_encode(r.png));
  const std::string payload = body.dump();
  const std::string path = prefix_ + "/v1/embed";

  httplib::Client client = make_client(origin_, options_.timeout);
  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 0; attempt < std::max(1, options_.attempts); ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    const httplib::Result res = client.Post(path, payload, "application/json");
    if (!res) {
      last_error = "backend unreachable at " + descriptor_.endpoint + ": " +
                   httplib::to_string(res.error());
      continue;
    }
    if (res->status == 503) {
      last_error = "backend busy (503): " + res->body;
      continue;
    }
    if (res->status == 404) {
      throw BackendError("unknown model '" + descriptor_.model_id + "' (404)");
    }
    if (res->status != 200) {
      throw BackendError("backend returned HTTP " + std::to_string(res->status) + ": " +
                         res->body);
    }
    ojson reply;
    try {
      reply = ojson::parse(res->body);
    } catch (const std::exception& e) {
      throw BackendError(std::string("malformed embed response: ") + e.what());
    }
    try {
      const std::size_t dim = reply.at("dim").get<std::size_t>();
      const ojson& rows = reply.at("embeddings");
      if (!rows.is_array() || rows.size() != batch.size()) {
        throw BackendError("backend returned " + std::to_string(rows.size()) +
                           " embeddings for " + std::to_string(batch.size()) + " images");
      }
      std::vector<std::vector<float>> out;
      out.reserve(rows.size());
      for (const ojson& row : rows) {
        if (!row.is_array() || row.size() != dim) {
          throw BackendError("embedding length does not match reported dim " +
                             std::to_string(dim));
        }
        std::vector<float> v;
        v.reserve(dim);
        for (const ojson& x : row) v.push_back(to_float(x));
        out.push_back(std::move(v));
      }
      return out;
    } catch (const BackendError&) {
      throw;
    } catch (const std::exception& e) {
      throw BackendError(std::string("malformed embed response: ") + e.what());
    }
  }
  throw BackendError(last_error + " (after " + std::to_string(options_.attempts) +
                     " attempts)");
}

HealthStatus HttpProvider::health() const {
  httplib::Client client = make_client(origin_, options_.timeout);
  const httplib::Result res = client.Get(prefix_ + "/v1/health");
  if (!res) {
    throw BackendError("backend unreachable at " + descriptor_.endpoint + ": " +
                       httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw BackendError("health check returned HTTP " + std::to_string(res->status));
  }
  try {
    const ojson j = ojson::parse(res->body);
    return {j.at("status").get<std::string>(), j.at("models").get<std::vector<std::string>>()};
  } catch (const std::exception& e) {
    throw BackendError(std::string("malformed health response: ") + e.what());
  }
}

}  // namespace chaneff::embedding
