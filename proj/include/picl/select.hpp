#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "picl/corpus.hpp"
#include "picl/embed.hpp"

namespace picl::select {

struct ClusterCenter {
  std::vector<double> vector;
  int member_count = 0;
};

struct KMeansResult {
  std::vector<ClusterCenter> centers;
  std::vector<int> assignments;  // per input vector, index into centers
  double sse = 0.0;
  /// Within-cluster SSE recorded at every assignment step, one trace per
  /// restart (the winning restart's trace is restart_traces[best_restart]).
  std::vector<std::vector<double>> restart_traces;
  size_t best_restart = 0;
};

/// Lloyd's algorithm with k-means++ seeding from a deterministic splitmix64
/// stream. Iterates until the largest center shift drops below tol or
/// max_iter is reached; empty clusters are repaired by stealing the point
/// farthest from its center. If k >= the number of distinct vectors, returns
/// one center per distinct vector. With restarts > 1 the lowest-SSE run wins
/// (ties to the earliest restart).
KMeansResult kmeans(const std::vector<std::vector<double>>& vectors, int k, uint64_t seed,
                    int max_iter = 100, double tol = 1e-6, int restarts = 1);

/// Chosen point entities for one type, with provenance.
struct PointSelection {
  std::string type;
  std::vector<std::string> points;
  std::string method;  // cluster | random | restricted | tau | extend
  uint64_t seed = 0;
  std::string encoder_id;  // empty for random selection
  int tau = 1;
  std::vector<std::string> warnings;
};

std::string selection_to_json(const PointSelection& sel);
PointSelection selection_from_json(const std::string& json_text);

/// argmax over untaken pool members of cosine(member vector, center); ties
/// broken by lexicographically smallest surface. embedded must align with
/// pool order. Errors when the pool minus taken is empty.
std::string decode_center(const std::vector<double>& center, const corpus::EntityPool& pool,
                          const std::vector<embed::EmbeddedEntity>& embedded,
                          const std::set<std::string>& taken);

/// Cluster-based selection: embed pool -> L2 normalize -> kmeans(a) ->
/// decode centers largest-cluster-first with an accumulating taken set.
/// A pool smaller than a yields the whole pool plus a warning.
PointSelection select_points(const corpus::EntityPool& pool, embed::Encoder& encoder, int a,
                             uint64_t seed, embed::EmbeddingCache* cache = nullptr,
                             int kmeans_restarts = 1);

/// Uniform sample without replacement, seeded.
PointSelection select_points_random(const corpus::EntityPool& pool, int a, uint64_t seed);

/// Pools built solely from the demonstrations' gold mentions (their canonical
/// outputs parsed back), in schema order.
std::vector<corpus::EntityPool> restrict_pool(const std::vector<corpus::Demonstration>& demos,
                                              const std::vector<corpus::EntityType>& schema);

/// Per center (largest cluster first), the tau most cosine-similar untaken
/// pool members; total points = min(tau * a, |pool|). tau = 1 reproduces
/// select_points exactly.
PointSelection select_points_tau(const corpus::EntityPool& pool, embed::Encoder& encoder, int a,
                                 int tau, uint64_t seed, embed::EmbeddingCache* cache = nullptr,
                                 int kmeans_restarts = 1);

/// Base points preserved in order, followed by `extra` distinct random pool
/// members not already chosen.
PointSelection extend_random(const PointSelection& base, const corpus::EntityPool& pool,
                             int extra, uint64_t seed);

}  // namespace picl::select
