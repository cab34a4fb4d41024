#include "picl/embed.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <stdexcept>

#include "json.hpp"
#include "picl/http.hpp"
#include "picl/util.hpp"

namespace picl::embed {

namespace {

double dot(const std::vector<double>& u, const std::vector<double>& v) {
  double acc = 0.0;
  for (size_t i = 0; i < u.size(); ++i) acc += u[i] * v[i];
  return acc;
}

double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

void require_finite(const std::vector<double>& v, const std::string& surface) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::runtime_error("non-finite embedding component for '" + surface + "'");
    }
  }
}

class TrigramEncoder final : public Encoder {
 public:
  explicit TrigramEncoder(size_t dim) : dim_(dim), id_("trigram:" + std::to_string(dim)) {
    if (dim == 0) throw std::invalid_argument("encoder dim must be positive");
  }

  const std::string& id() const override { return id_; }
  size_t dim() const override { return dim_; }

  std::vector<std::vector<double>> encode(const std::vector<std::string>& surfaces) override {
    std::vector<std::vector<double>> out;
    out.reserve(surfaces.size());
    for (const auto& s : surfaces) {
      std::vector<double> counts(dim_, 0.0);
      const std::string padded = "^" + s + "$";
      for (size_t i = 0; i + 3 <= padded.size(); ++i) {
        counts[fnv1a64(std::string_view(padded).substr(i, 3)) % dim_] += 1.0;
      }
      out.push_back(l2_normalize(counts));
    }
    return out;
  }

 private:
  size_t dim_;
  std::string id_;
};

class RemoteEncoder final : public Encoder {
 public:
  explicit RemoteEncoder(RemoteEncoderConfig config)
      : config_(std::move(config)), id_("remote:" + config_.model), dim_(config_.dim) {
    if (config_.url.empty()) throw std::invalid_argument("remote encoder needs a URL");
    if (config_.batch_size == 0) config_.batch_size = 1;
    if (config_.parallel < 1) config_.parallel = 1;
  }

  const std::string& id() const override { return id_; }
  size_t dim() const override { return dim_; }

  std::vector<std::vector<double>> encode(const std::vector<std::string>& surfaces) override {
    std::vector<std::vector<double>> out(surfaces.size());
    size_t next = 0;
    while (next < surfaces.size()) {
      // up to `parallel` batches in flight
      std::vector<std::pair<size_t, std::future<std::vector<std::vector<double>>>>> inflight;
      for (int p = 0; p < config_.parallel && next < surfaces.size(); ++p) {
        const size_t begin = next;
        const size_t end = std::min(surfaces.size(), begin + config_.batch_size);
        next = end;
        std::vector<std::string> batch(surfaces.begin() + static_cast<long>(begin),
                                       surfaces.begin() + static_cast<long>(end));
        inflight.emplace_back(begin, std::async(std::launch::async, [this, b = std::move(batch)] {
                                return encode_one_batch(b);
                              }));
      }
      for (auto& [begin, fut] : inflight) {
        auto vectors = fut.get();
        for (size_t i = 0; i < vectors.size(); ++i) out[begin + i] = std::move(vectors[i]);
      }
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> encode_one_batch(const std::vector<std::string>& batch) {
    nlohmann::ordered_json body;
    body["model"] = config_.model;
    body["input"] = batch;

    const std::string response = http_post_json(config_.url, body.dump(), config_.api_key,
                                                config_.max_attempts, config_.backoff_ms);
    nlohmann::json j = nlohmann::json::parse(response, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array()) {
      throw std::runtime_error("embedding endpoint returned malformed response");
    }
    std::vector<std::vector<double>> vectors(batch.size());
    size_t filled = 0;
    for (const auto& item : j["data"]) {
      const size_t index = item.value("index", filled);
      if (index >= vectors.size() || !item.contains("embedding")) {
        throw std::runtime_error("embedding response index out of range");
      }
      std::vector<double> vec = item["embedding"].get<std::vector<double>>();
      size_t expected = 0;
      dim_.compare_exchange_strong(expected, vec.size());
      if (vec.size() != dim_.load()) {
        throw std::runtime_error("embedding dimension mismatch: expected " +
                                 std::to_string(dim_.load()) + ", got " +
                                 std::to_string(vec.size()));
      }
      vectors[index] = std::move(vec);
      ++filled;
    }
    if (filled != batch.size()) {
      throw std::runtime_error("embedding response covered " + std::to_string(filled) + " of " +
                               std::to_string(batch.size()) + " inputs");
    }
    return vectors;
  }

  RemoteEncoderConfig config_;
  std::string id_;
  std::atomic<size_t> dim_;
};

std::string cache_key(const std::string& encoder_id, const std::string& surface) {
  // two independent 64-bit hashes; a 128-bit key makes collisions a non-issue
  const std::string forward = encoder_id + '\0' + surface;
  const std::string backward = surface + '\0' + encoder_id;
  return to_hex(fnv1a64(forward)) + to_hex(fnv1a64(backward));
}

}  // namespace

double cosine(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine: length mismatch (" + std::to_string(u.size()) + " vs " +
                                std::to_string(v.size()) + ")");
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) {
    throw std::invalid_argument("cosine: zero vector");
  }
  return dot(u, v) / (nu * nv);
}

std::vector<double> l2_normalize(const std::vector<double>& v) {
  const double n = norm(v);
  if (n == 0.0) throw std::invalid_argument("l2_normalize: zero vector");
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

std::unique_ptr<Encoder> make_test_encoder(size_t dim) {
  return std::make_unique<TrigramEncoder>(dim);
}

std::unique_ptr<Encoder> make_remote_encoder(RemoteEncoderConfig config) {
  return std::make_unique<RemoteEncoder>(std::move(config));
}

EmbeddingCache::EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path EmbeddingCache::path_for(const std::string& key_hex) const {
  return dir_ / (key_hex + ".vec");
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& encoder_id,
                                                       const std::string& surface) {
  const std::string key = cache_key(encoder_id, surface);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = memory_.find(key);
    if (it != memory_.end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  const auto path = path_for(key);
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;

  std::string header;
  if (!std::getline(in, header)) return std::nullopt;
  nlohmann::json meta = nlohmann::json::parse(header, nullptr, false);
  if (meta.is_discarded()) throw std::runtime_error("corrupt cache header: " + path.string());
  if (meta.value("encoder", "") != encoder_id || meta.value("surface", "") != surface) {
    throw std::runtime_error("cache key collision at " + path.string());
  }
  const size_t dim = meta.value("dim", size_t{0});
  std::vector<double> vec(dim);
  in.read(reinterpret_cast<char*>(vec.data()), static_cast<std::streamsize>(dim * sizeof(double)));
  if (static_cast<size_t>(in.gcount()) != dim * sizeof(double)) {
    throw std::runtime_error("truncated cache entry: " + path.string());
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    memory_.emplace(key, vec);
  }
  return vec;
}

void EmbeddingCache::put(const std::string& encoder_id, const std::string& surface,
                         const std::vector<double>& vec) {
  const std::string key = cache_key(encoder_id, surface);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!memory_.emplace(key, vec).second) return;  // already present; never overwrite
  }
  if (dir_.empty()) return;
  const auto path = path_for(key);
  if (std::filesystem::exists(path)) return;

  nlohmann::ordered_json meta;
  meta["encoder"] = encoder_id;
  meta["dim"] = vec.size();
  meta["surface_fnv"] = to_hex(fnv1a64(surface));
  meta["surface"] = surface;
  std::string blob = meta.dump();
  blob += '\n';
  const size_t header_size = blob.size();
  blob.resize(header_size + vec.size() * sizeof(double));
  std::memcpy(blob.data() + header_size, vec.data(), vec.size() * sizeof(double));
  write_text_file_atomic(path, blob);
}

std::vector<EmbeddedEntity> embed_batch(Encoder& encoder, const std::vector<std::string>& surfaces,
                                        EmbeddingCache* cache) {
  for (const auto& s : surfaces) {
    if (s.empty()) throw std::invalid_argument("embed_batch: empty surface");
  }

  std::vector<EmbeddedEntity> out(surfaces.size());
  std::unordered_map<std::string, size_t> miss_index;  // surface -> slot in miss batch
  std::vector<std::string> misses;

  for (size_t i = 0; i < surfaces.size(); ++i) {
    out[i].surface = surfaces[i];
    if (cache) {
      if (auto hit = cache->get(encoder.id(), surfaces[i])) {
        out[i].vector = std::move(*hit);
        continue;
      }
    }
    if (!miss_index.count(surfaces[i])) {
      miss_index.emplace(surfaces[i], misses.size());
      misses.push_back(surfaces[i]);
    }
  }

  std::vector<std::vector<double>> encoded;
  if (!misses.empty()) {
    encoded = encoder.encode(misses);
    if (encoded.size() != misses.size()) {
      throw std::runtime_error("encoder returned " + std::to_string(encoded.size()) +
                               " vectors for " + std::to_string(misses.size()) + " inputs");
    }
    for (size_t i = 0; i < misses.size(); ++i) {
      if (encoder.dim() != 0 && encoded[i].size() != encoder.dim()) {
        throw std::runtime_error("encoder width " + std::to_string(encoded[i].size()) +
                                 " does not match declared dim " + std::to_string(encoder.dim()));
      }
      require_finite(encoded[i], misses[i]);
      if (norm(encoded[i]) == 0.0) {
        throw std::runtime_error("encoder produced a zero vector for '" + misses[i] + "'");
      }
      if (cache) cache->put(encoder.id(), misses[i], encoded[i]);
    }
  }

  for (size_t i = 0; i < surfaces.size(); ++i) {
    if (out[i].vector.empty()) {
      out[i].vector = encoded[miss_index.at(surfaces[i])];
    }
  }
  return out;
}

}  // namespace picl::embed
