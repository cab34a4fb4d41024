#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace picl::embed {

struct EmbeddedEntity {
  std::string surface;
  std::vector<double> vector;
};

/// Pluggable text encoder. id() participates in cache keys and selection
/// provenance; dim() is fixed for the encoder's lifetime.
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual const std::string& id() const = 0;
  virtual size_t dim() const = 0;
  /// One vector per surface, order preserved. Surfaces must be non-empty.
  virtual std::vector<std::vector<double>> encode(const std::vector<std::string>& surfaces) = 0;
};

/// dot(u,v) / (|u||v|). Errors on length mismatch or a zero vector — a zero
/// vector signals an upstream encoder fault and is never patched to 0.
double cosine(const std::vector<double>& u, const std::vector<double>& v);

/// Unit-length copy; errors on the zero vector.
std::vector<double> l2_normalize(const std::vector<double>& v);

/// Deterministic offline encoder: counts of character trigrams over the
/// string padded with '^' and '$' boundary markers, each trigram bucketed by
/// FNV-1a 64 modulo dim, counts L2-normalized.
std::unique_ptr<Encoder> make_test_encoder(size_t dim = 64);

struct RemoteEncoderConfig {
  std::string url;    // full endpoint, e.g. http://host:8080/v1/embeddings
  std::string model;  // becomes part of the encoder id ("remote:<model>")
  std::string api_key;
  size_t dim = 0;  // 0 = adopt the first response's width, then enforce it
  size_t batch_size = 128;
  int parallel = 4;  // max in-flight batches
  int max_attempts = 3;
  int backoff_ms = 200;
};

/// Embeddings wire format: POST {"model", "input": [strings]} ->
/// {"data": [{"index", "embedding": [floats]}]}. Transient transport errors
/// are retried with exponential backoff; a dimension mismatch is fatal.
std::unique_ptr<Encoder> make_remote_encoder(RemoteEncoderConfig config);

/// (encoder id, surface)-keyed vector store. Entries are immutable once
/// written; disk files are written atomically and never evicted. Safe for
/// concurrent use.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;  // memory only
  explicit EmbeddingCache(std::filesystem::path dir);

  std::optional<std::vector<double>> get(const std::string& encoder_id,
                                         const std::string& surface);
  void put(const std::string& encoder_id, const std::string& surface,
           const std::vector<double>& vec);

 private:
  std::filesystem::path path_for(const std::string& key_hex) const;

  std::filesystem::path dir_;
  std::mutex mutex_;
  std::unordered_map<std::string, std::vector<double>> memory_;
};

/// Encodes surfaces through the cache: hits are returned bit-identically,
/// misses go to the encoder in one deduplicated batch. Order preserved.
/// Validates width and finiteness; rejects zero vectors and empty surfaces.
std::vector<EmbeddedEntity> embed_batch(Encoder& encoder,
                                        const std::vector<std::string>& surfaces,
                                        EmbeddingCache* cache = nullptr);

}  // namespace picl::embed
