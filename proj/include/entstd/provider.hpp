#pragma once

// Remote embedding provider with an on-disk cache. Define
// CPPHTTPLIB_OPENSSL_SUPPORT (and link OpenSSL) for https endpoints.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "entstd/binary_io.hpp"
#include "entstd/distance.hpp"
#include "entstd/errors.hpp"
#include "entstd/hash.hpp"
#include "entstd/text.hpp"

namespace entstd {

inline constexpr const char* kProviderTokenEnv = "ENTSTD_PROVIDER_TOKEN";

struct ProviderConfig {
  std::string endpoint;  // e.g. https://host/v1/embeddings
  std::string token;     // sent as a bearer token when non-empty
  std::size_t batch_limit = 64;
  std::filesystem::path cache_path;  // empty: no persistent cache
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff{250};  // doubled after each failed attempt
  std::chrono::seconds timeout{30};

  void validate() const {
    if (endpoint.empty()) throw InvalidArgument("provider endpoint is empty");
    if (batch_limit == 0) throw InvalidArgument("provider batch limit must be >= 1");
  }
};

// FNV-1a over endpoint, a NUL separator and the canonical text.
inline std::uint64_t provider_cache_key(std::string_view endpoint, std::string_view text) {
  return fnv1a64(text, fnv1a64(std::string_view("\0", 1), fnv1a64(endpoint)));
}

// Append-only record log: 16-byte magic/version header, then records of
// (u64 key, u32 dim, dim little-endian f32). A torn trailing record left by
// an interrupted write is cut off when the cache is opened.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;

  explicit EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty()) return;
    if (!std::filesystem::exists(path_)) {
      binary::Writer w;
      w.header(binary::kCacheMagic);
      w.save(path_);
      return;
    }
    auto r = binary::Reader::from_file(path_);
    const auto size = std::filesystem::file_size(path_);
    r.expect_header(binary::kCacheMagic);
    std::uintmax_t good = binary::kMagicSize + 4;
    try {
      while (r.remaining() > 0) {
        const std::uint64_t key = r.u64();
        const std::uint32_t dim = r.u32();
        if (r.remaining() < std::uint64_t{dim} * sizeof(float)) throw CorruptFileError("torn cache record");
        std::vector<float> v(dim);
        for (float& x : v) x = r.f32();
        entries_[key] = std::move(v);
        good = size - r.remaining();
      }
    } catch (const CorruptFileError&) {
      std::filesystem::resize_file(path_, good);
    }
  }

  const std::vector<float>* find(std::uint64_t key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  void put(std::uint64_t key, std::vector<float> values) {
    std::lock_guard lock(mutex_);
    if (!path_.empty()) {
      binary::Writer w;
      w.u64(key);
      w.u32(static_cast<std::uint32_t>(values.size()));
      for (float x : values) w.f32(x);
      std::ofstream out(path_, std::ios::binary | std::ios::app);
      out.write(reinterpret_cast<const char*>(w.buffer().data()),
                static_cast<std::streamsize>(w.buffer().size()));
      if (!out) throw DataError("cannot append to cache " + path_.string());
    }
    entries_[key] = std::move(values);
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  std::filesystem::path path_;
  std::unordered_map<std::uint64_t, std::vector<float>> entries_;
  mutable std::mutex mutex_;
};

namespace detail {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/?#]+)(/[^#]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw InvalidArgument("invalid provider endpoint: " + url);
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

inline std::vector<std::vector<float>> parse_response(const std::string& body, std::size_t expected) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("malformed provider response: ") + e.what(), false);
  }
  if (j.contains("error"))
    throw ProviderError("provider error: " + j["error"].dump(), false);
  if (!j.contains("data") || !j["data"].is_array() || j["data"].size() != expected)
    throw ProviderError("provider response lacks " + std::to_string(expected) + " data items", false);
  std::vector<std::vector<float>> out;
  for (const auto& item : j["data"]) {
    if (!item.contains("embedding") || !item["embedding"].is_array())
      throw ProviderError("provider item without embedding", false);
    std::vector<float> v;
    for (const auto& x : item["embedding"]) {
      if (!x.is_number()) throw ProviderError("non-numeric embedding component", false);
      v.push_back(x.get<float>());
    }
    if (v.empty() || (!out.empty() && v.size() != out.front().size()))
      throw ProviderError("inconsistent embedding dimensions in provider batch", false);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace detail

// Fetches embeddings in input order, consulting the cache first. Values are
// rounded to f32, the cache precision, whether or not they came from the
// network, so warm and cold runs agree bitwise.
class ProviderClient {
 public:
  explicit ProviderClient(ProviderConfig cfg)
      : cfg_(std::move(cfg)), cache_(cfg_.cache_path) {
    cfg_.validate();
    endpoint_ = detail::parse_endpoint(cfg_.endpoint);
  }

  std::vector<Vector> fetch(std::span<const std::string> texts) {
    std::vector<Vector> out(texts.size());
    std::vector<std::size_t> missing;
    std::vector<std::pair<std::size_t, std::size_t>> repeats;  // (index, first index)
    std::unordered_map<std::string, std::size_t> queued;
    std::vector<std::string> canonical(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      canonical[i] = canonicalize(texts[i]);
      if (canonical[i].empty()) throw InvalidArgument("empty text at batch index " + std::to_string(i));
      if (const auto* hit = cache_.find(key(canonical[i]))) {
        out[i].assign(hit->begin(), hit->end());
      } else if (auto [it, fresh] = queued.try_emplace(canonical[i], i); fresh) {
        missing.push_back(i);
      } else {
        repeats.emplace_back(i, it->second);
      }
    }
    for (std::size_t start = 0; start < missing.size(); start += cfg_.batch_limit) {
      const std::size_t n = std::min(cfg_.batch_limit, missing.size() - start);
      std::vector<std::string> batch;
      for (std::size_t j = 0; j < n; ++j) batch.push_back(canonical[missing[start + j]]);
      auto vectors = post_with_retries(batch);
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i = missing[start + j];
        out[i].assign(vectors[j].begin(), vectors[j].end());
        cache_.put(key(canonical[i]), std::move(vectors[j]));
      }
    }
    for (const auto& [i, first] : repeats) out[i] = out[first];
    for (const auto& v : out) {
      if (dim_ == 0) dim_ = v.size();
      if (v.size() != dim_)
        throw ProviderError("provider dimension changed from " + std::to_string(dim_) + " to " +
                            std::to_string(v.size()),
                            false);
    }
    return out;
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t requests() const noexcept { return requests_; }
  const ProviderConfig& config() const noexcept { return cfg_; }

 private:
  std::uint64_t key(const std::string& text) const { return provider_cache_key(cfg_.endpoint, text); }

  std::vector<std::vector<float>> post_with_retries(const std::vector<std::string>& batch) {
    auto delay = cfg_.backoff;
    for (std::size_t attempt = 0;; ++attempt) {
      try {
        return post(batch);
      } catch (const ProviderError& e) {
        if (!e.retriable() || attempt >= cfg_.max_retries) throw;
      }
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }

  std::vector<std::vector<float>> post(const std::vector<std::string>& batch) {
    httplib::Client client(endpoint_.origin);
    client.set_connection_timeout(cfg_.timeout);
    client.set_read_timeout(cfg_.timeout);
    if (!cfg_.token.empty()) client.set_bearer_token_auth(cfg_.token);
    ++requests_;
    const std::string body = nlohmann::json{{"input", batch}}.dump();
    auto res = client.Post(endpoint_.path, body, "application/json");
    if (!res) throw ProviderError("provider request failed: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500)
      throw ProviderError("provider returned HTTP " + std::to_string(res->status), true);
    if (res->status != 200)
      throw ProviderError("provider returned HTTP " + std::to_string(res->status) + ": " + res->body,
                          false);
    return detail::parse_response(res->body, batch.size());
  }

  ProviderConfig cfg_;
  detail::Endpoint endpoint_;
  EmbeddingCache cache_;
  std::size_t dim_ = 0;
  std::size_t requests_ = 0;
};

inline std::vector<Vector> fetch_embeddings(ProviderClient& client, std::span<const std::string> texts) {
  return client.fetch(texts);
}

// TextEncoder adapter. dim() is 0 until the first fetch.
class ProviderEncoder {
 public:
  explicit ProviderEncoder(ProviderConfig cfg)
      : client_(std::make_shared<ProviderClient>(std::move(cfg))) {}

  std::vector<Vector> encode_batch(std::span<const std::string> texts) const {
    std::lock_guard lock(*mutex_);
    return client_->fetch(texts);
  }
  std::size_t dim() const noexcept { return client_->dim(); }
  const ProviderClient& client() const noexcept { return *client_; }

 private:
  std::shared_ptr<ProviderClient> client_;
  std::shared_ptr<std::mutex> mutex_ = std::make_shared<std::mutex>();
};

}  // namespace entstd
