#include "picl/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "picl/parse.hpp"
#include "picl/rng.hpp"

namespace picl::select {

namespace {

double dist2(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

struct SingleRun {
  std::vector<std::vector<double>> centers;
  std::vector<int> assignments;
  double sse = 0.0;
  std::vector<double> trace;
};

int nearest_center(const std::vector<double>& v, const std::vector<std::vector<double>>& centers,
                   double* best_d2) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < centers.size(); ++c) {
    const double d = dist2(v, centers[c]);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  if (best_d2) *best_d2 = bd;
  return best;
}

double assign_all(const std::vector<std::vector<double>>& vectors,
                  const std::vector<std::vector<double>>& centers, std::vector<int>& assignments) {
  double sse = 0.0;
  for (size_t i = 0; i < vectors.size(); ++i) {
    double d2 = 0.0;
    assignments[i] = nearest_center(vectors[i], centers, &d2);
    sse += d2;
  }
  return sse;
}

std::vector<std::vector<double>> centroids(const std::vector<std::vector<double>>& vectors,
                                           const std::vector<int>& assignments,
                                           const std::vector<std::vector<double>>& previous,
                                           size_t k, size_t dim) {
  std::vector<std::vector<double>> centers(k, std::vector<double>(dim, 0.0));
  std::vector<size_t> counts(k, 0);
  for (size_t i = 0; i < vectors.size(); ++i) {
    const auto c = static_cast<size_t>(assignments[i]);
    ++counts[c];
    for (size_t d = 0; d < dim; ++d) centers[c][d] += vectors[i][d];
  }
  for (size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      centers[c] = previous[c];  // repair always refills; keep the old center regardless
      continue;
    }
    for (size_t d = 0; d < dim; ++d) centers[c][d] /= static_cast<double>(counts[c]);
  }
  return centers;
}

/// Moves the point farthest from its own center into each empty cluster
/// (clusters of size one are never robbed). Returns true when anything moved.
bool repair_empty(const std::vector<std::vector<double>>& vectors,
                  const std::vector<std::vector<double>>& centers,
                  std::vector<int>& assignments, size_t k) {
  std::vector<size_t> counts(k, 0);
  for (int a : assignments) ++counts[static_cast<size_t>(a)];
  bool repaired = false;
  for (size_t empty = 0; empty < k; ++empty) {
    if (counts[empty] != 0) continue;
    long victim = -1;
    double worst = -1.0;
    for (size_t i = 0; i < vectors.size(); ++i) {
      const auto c = static_cast<size_t>(assignments[i]);
      if (counts[c] <= 1) continue;
      const double d = dist2(vectors[i], centers[c]);
      if (d > worst) {
        worst = d;
        victim = static_cast<long>(i);
      }
    }
    if (victim < 0) break;  // nothing left to steal
    --counts[static_cast<size_t>(assignments[static_cast<size_t>(victim)])];
    assignments[static_cast<size_t>(victim)] = static_cast<int>(empty);
    ++counts[empty];
    repaired = true;
  }
  return repaired;
}

std::vector<std::vector<double>> kmeanspp_init(const std::vector<std::vector<double>>& vectors,
                                               size_t k, Rng& rng) {
  std::vector<std::vector<double>> centers;
  centers.reserve(k);
  centers.push_back(vectors[rng.below(vectors.size())]);
  std::vector<double> d2(vectors.size());
  for (size_t i = 0; i < vectors.size(); ++i) d2[i] = dist2(vectors[i], centers[0]);
  while (centers.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    size_t chosen = 0;
    if (total > 0.0) {
      const double target = rng.next_double() * total;
      double cum = 0.0;
      chosen = vectors.size();  // sentinel
      for (size_t i = 0; i < vectors.size(); ++i) {
        cum += d2[i];
        if (cum > target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      if (chosen == vectors.size()) {  // fp rounding fell off the end
        for (size_t i = vectors.size(); i-- > 0;) {
          if (d2[i] > 0.0) {
            chosen = i;
            break;
          }
        }
      }
    } else {
      chosen = rng.below(vectors.size());
    }
    centers.push_back(vectors[chosen]);
    for (size_t i = 0; i < vectors.size(); ++i) {
      d2[i] = std::min(d2[i], dist2(vectors[i], centers.back()));
    }
  }
  return centers;
}

SingleRun kmeans_single(const std::vector<std::vector<double>>& vectors, size_t k, uint64_t seed,
                        int max_iter, double tol) {
  Rng rng(seed);
  const size_t dim = vectors[0].size();
  SingleRun run;
  run.centers = kmeanspp_init(vectors, k, rng);
  run.assignments.assign(vectors.size(), 0);

  for (int iter = 0; iter < max_iter; ++iter) {
    const double sse = assign_all(vectors, run.centers, run.assignments);
    run.trace.push_back(sse);
    repair_empty(vectors, run.centers, run.assignments, k);
    auto next = centroids(vectors, run.assignments, run.centers, k, dim);
    double shift = 0.0;
    for (size_t c = 0; c < k; ++c) shift = std::max(shift, std::sqrt(dist2(next[c], run.centers[c])));
    run.centers = std::move(next);
    if (shift < tol) break;
  }

  run.sse = assign_all(vectors, run.centers, run.assignments);
  run.trace.push_back(run.sse);
  if (repair_empty(vectors, run.centers, run.assignments, k)) {
    // keep the terminal state repair-closed: recompute centroids and report
    // the SSE consistent with the repaired assignment
    run.centers = centroids(vectors, run.assignments, run.centers, k, dim);
    run.sse = 0.0;
    for (size_t i = 0; i < vectors.size(); ++i) {
      run.sse += dist2(vectors[i], run.centers[static_cast<size_t>(run.assignments[i])]);
    }
    run.trace.push_back(run.sse);
  }
  return run;
}

std::string pool_exhausted_message(const corpus::EntityPool& pool) {
  return "pool for type '" + pool.type + "' exhausted";
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& vectors, int k, uint64_t seed,
                    int max_iter, double tol, int restarts) {
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (vectors.empty()) throw std::invalid_argument("kmeans: no vectors");
  const size_t dim = vectors[0].size();
  for (const auto& v : vectors) {
    if (v.size() != dim) throw std::invalid_argument("kmeans: dimension mismatch");
  }
  if (restarts < 1) restarts = 1;

  // degenerate case: one center per distinct vector
  std::map<std::vector<double>, int> distinct;
  for (const auto& v : vectors) distinct.emplace(v, static_cast<int>(distinct.size()));
  if (static_cast<size_t>(k) >= distinct.size()) {
    KMeansResult result;
    std::map<std::vector<double>, int> order;  // first-occurrence index
    for (const auto& v : vectors) {
      if (!order.count(v)) {
        order.emplace(v, static_cast<int>(result.centers.size()));
        result.centers.push_back({v, 0});
      }
    }
    result.assignments.reserve(vectors.size());
    for (const auto& v : vectors) {
      const int c = order.at(v);
      result.assignments.push_back(c);
      ++result.centers[static_cast<size_t>(c)].member_count;
    }
    result.sse = 0.0;
    result.restart_traces = {{0.0}};
    return result;
  }

  SingleRun best;
  size_t best_restart = 0;
  std::vector<std::vector<double>> traces;
  for (int r = 0; r < restarts; ++r) {
    SingleRun run = kmeans_single(vectors, static_cast<size_t>(k), mix_seed(seed, "kmeans", r),
                                  max_iter, tol);
    traces.push_back(run.trace);
    if (r == 0 || run.sse < best.sse) {
      best = std::move(run);
      best_restart = static_cast<size_t>(r);
    }
  }

  KMeansResult result;
  result.assignments = best.assignments;
  result.sse = best.sse;
  result.restart_traces = std::move(traces);
  result.best_restart = best_restart;
  result.centers.reserve(best.centers.size());
  for (auto& c : best.centers) result.centers.push_back({std::move(c), 0});
  for (int a : result.assignments) ++result.centers[static_cast<size_t>(a)].member_count;
  return result;
}

std::string selection_to_json(const PointSelection& sel) {
  nlohmann::ordered_json j;
  j["type"] = sel.type;
  j["method"] = sel.method;
  j["seed"] = sel.seed;
  j["encoder_id"] = sel.encoder_id;
  j["tau"] = sel.tau;
  j["points"] = sel.points;
  if (!sel.warnings.empty()) j["warnings"] = sel.warnings;
  return j.dump();
}

PointSelection selection_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  PointSelection sel;
  sel.type = j.at("type").get<std::string>();
  sel.method = j.at("method").get<std::string>();
  sel.seed = j.value("seed", uint64_t{0});
  sel.encoder_id = j.value("encoder_id", "");
  sel.tau = j.value("tau", 1);
  sel.points = j.at("points").get<std::vector<std::string>>();
  if (j.contains("warnings")) sel.warnings = j["warnings"].get<std::vector<std::string>>();
  return sel;
}

std::string decode_center(const std::vector<double>& center, const corpus::EntityPool& pool,
                          const std::vector<embed::EmbeddedEntity>& embedded,
                          const std::set<std::string>& taken) {
  if (embedded.size() != pool.entities.size()) {
    throw std::invalid_argument("decode_center: embeddings do not cover the pool");
  }
  const std::string* best = nullptr;
  double best_sim = 0.0;
  for (size_t i = 0; i < pool.entities.size(); ++i) {
    const std::string& surface = pool.entities[i];
    if (taken.count(surface)) continue;
    const double sim = embed::cosine(embedded[i].vector, center);
    if (!best || sim > best_sim || (sim == best_sim && surface < *best)) {
      best = &surface;
      best_sim = sim;
    }
  }
  if (!best) throw std::runtime_error(pool_exhausted_message(pool));
  return *best;
}

namespace {

/// Shared core of cluster-based selection: kmeans over the normalized pool
/// embeddings, then per center (largest cluster first) the per_center most
/// similar untaken members. Duplicate representations can collapse centers;
/// remaining slots are topped up by further decode rounds over the centers.
PointSelection cluster_select(const corpus::EntityPool& pool, embed::Encoder& encoder, int a,
                              int per_center, uint64_t seed, embed::EmbeddingCache* cache,
                              int kmeans_restarts, const std::string& method) {
  if (a < 1) throw std::invalid_argument("select: a must be >= 1");
  if (per_center < 1) throw std::invalid_argument("select: tau must be >= 1");

  PointSelection sel;
  sel.type = pool.type;
  sel.method = method;
  sel.seed = seed;
  sel.encoder_id = encoder.id();
  sel.tau = per_center;
  if (pool.entities.empty()) {
    sel.warnings.push_back("empty pool for type '" + pool.type + "'; no points selected");
    return sel;
  }

  const int a_eff = std::min<int>(a, static_cast<int>(pool.entities.size()));
  if (a_eff < a) {
    sel.warnings.push_back("pool for type '" + pool.type + "' has " +
                           std::to_string(pool.entities.size()) + " entities; requested " +
                           std::to_string(a));
  }

  auto embedded = embed::embed_batch(encoder, pool.entities, cache);
  for (auto& e : embedded) e.vector = embed::l2_normalize(e.vector);
  std::vector<std::vector<double>> vectors;
  vectors.reserve(embedded.size());
  for (const auto& e : embedded) vectors.push_back(e.vector);

  auto km = kmeans(vectors, a_eff, seed, 100, 1e-6, kmeans_restarts);

  // largest cluster first; ties keep center index order
  std::vector<size_t> order(km.centers.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t l, size_t r) {
    return km.centers[l].member_count > km.centers[r].member_count;
  });

  const size_t target = std::min<size_t>(static_cast<size_t>(per_center) *
                                             static_cast<size_t>(a_eff),
                                         pool.entities.size());
  std::set<std::string> taken;
  while (sel.points.size() < target) {
    const size_t before = sel.points.size();
    for (size_t c : order) {
      for (int t = 0; t < per_center && sel.points.size() < target; ++t) {
        sel.points.push_back(
            decode_center(km.centers[c].vector, pool, embedded, taken));
        taken.insert(sel.points.back());
      }
      if (sel.points.size() >= target) break;
    }
    if (sel.points.size() == before) break;  // defensive: no progress
  }
  return sel;
}

}  // namespace

PointSelection select_points(const corpus::EntityPool& pool, embed::Encoder& encoder, int a,
                             uint64_t seed, embed::EmbeddingCache* cache, int kmeans_restarts) {
  return cluster_select(pool, encoder, a, 1, seed, cache, kmeans_restarts, "cluster");
}

PointSelection select_points_random(const corpus::EntityPool& pool, int a, uint64_t seed) {
  if (a < 1) throw std::invalid_argument("select_points_random: a must be >= 1");
  PointSelection sel;
  sel.type = pool.type;
  sel.method = "random";
  sel.seed = seed;
  if (pool.entities.empty()) {
    sel.warnings.push_back("empty pool for type '" + pool.type + "'; no points selected");
    return sel;
  }
  const size_t take = std::min<size_t>(static_cast<size_t>(a), pool.entities.size());
  if (take < static_cast<size_t>(a)) {
    sel.warnings.push_back("pool for type '" + pool.type + "' has " +
                           std::to_string(pool.entities.size()) + " entities; requested " +
                           std::to_string(a));
  }
  Rng rng(seed);
  for (size_t idx : rng.sample_indices(pool.entities.size(), take)) {
    sel.points.push_back(pool.entities[idx]);
  }
  return sel;
}

std::vector<corpus::EntityPool> restrict_pool(const std::vector<corpus::Demonstration>& demos,
                                              const std::vector<corpus::EntityType>& schema) {
  std::vector<corpus::Sentence> pseudo;
  pseudo.reserve(demos.size());
  for (size_t i = 0; i < demos.size(); ++i) {
    corpus::Sentence s;
    s.id = "demo-" + std::to_string(i);
    s.text = demos[i].input;
    const auto pred = parse::extract_prediction(demos[i].output, schema);
    for (const auto& [type, surfaces] : pred.by_type) {
      for (const auto& surface : surfaces) s.gold.push_back({surface, type});
    }
    pseudo.push_back(std::move(s));
  }
  return corpus::unique_entities(pseudo, schema);
}

PointSelection select_points_tau(const corpus::EntityPool& pool, embed::Encoder& encoder, int a,
                                 int tau, uint64_t seed, embed::EmbeddingCache* cache,
                                 int kmeans_restarts) {
  auto sel = cluster_select(pool, encoder, a, tau, seed, cache, kmeans_restarts, "tau");
  return sel;
}

PointSelection extend_random(const PointSelection& base, const corpus::EntityPool& pool,
                             int extra, uint64_t seed) {
  if (extra < 0) throw std::invalid_argument("extend_random: extra must be >= 0");
  PointSelection sel = base;
  sel.method = "extend";
  sel.seed = seed;
  if (extra == 0) return sel;

  std::set<std::string> chosen(base.points.begin(), base.points.end());
  std::vector<std::string> candidates;
  for (const auto& e : pool.entities) {
    if (!chosen.count(e)) candidates.push_back(e);
  }
  const size_t take = std::min<size_t>(static_cast<size_t>(extra), candidates.size());
  if (take < static_cast<size_t>(extra)) {
    sel.warnings.push_back("pool for type '" + pool.type + "' can extend by only " +
                           std::to_string(candidates.size()) + " of " + std::to_string(extra));
  }
  Rng rng(seed);
  for (size_t idx : rng.sample_indices(candidates.size(), take)) {
    sel.points.push_back(candidates[idx]);
  }
  return sel;
}

}  // namespace picl::select
