#include <cmath>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "picl/corpus.hpp"
#include "picl/embed.hpp"
#include "picl/rng.hpp"
#include "picl/select.hpp"

using namespace picl;
using select::PointSelection;

namespace {

std::vector<std::vector<double>> random_points(Rng& rng, size_t n, size_t dim) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
  for (auto& p : pts) {
    for (auto& x : p) x = rng.next_double() * 4.0 - 2.0;
  }
  return pts;
}

// linear-scan argmax with the same tie rule, written independently
std::string decode_oracle(const std::vector<double>& center, const corpus::EntityPool& pool,
                          const std::vector<embed::EmbeddedEntity>& embedded,
                          const std::set<std::string>& taken) {
  std::string best;
  double best_sim = -2.0;
  bool found = false;
  for (size_t i = 0; i < pool.entities.size(); ++i) {
    if (taken.count(pool.entities[i])) continue;
    const double sim = embed::cosine(embedded[i].vector, center);
    if (!found || sim > best_sim || (sim == best_sim && pool.entities[i] < best)) {
      best = pool.entities[i];
      best_sim = sim;
      found = true;
    }
  }
  REQUIRE(found);
  return best;
}

corpus::EntityPool pool_of(std::vector<std::string> entities) {
  return corpus::EntityPool{"LOC", std::move(entities)};
}

std::vector<embed::EmbeddedEntity> embed_pairs(const corpus::EntityPool& pool,
                                               std::vector<std::vector<double>> vectors) {
  std::vector<embed::EmbeddedEntity> out;
  for (size_t i = 0; i < pool.entities.size(); ++i) {
    out.push_back({pool.entities[i], std::move(vectors[i])});
  }
  return out;
}

}  // namespace

TEST_CASE("kmeans with k=1 returns the coordinate mean") {
  std::vector<std::vector<double>> pts = {{0, 0}, {2, 0}, {0, 2}, {2, 2}};
  auto result = select::kmeans(pts, 1, 7);
  REQUIRE(result.centers.size() == 1);
  CHECK(result.centers[0].vector[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.centers[0].vector[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(result.centers[0].member_count == 4);
}

TEST_CASE("kmeans with k >= distinct vectors gives one center per distinct point") {
  std::vector<std::vector<double>> pts = {{1, 1}, {2, 2}, {1, 1}, {3, 3}};
  auto result = select::kmeans(pts, 5, 1);
  CHECK(result.centers.size() == 3);
  CHECK(result.sse == 0.0);
  CHECK(result.assignments[0] == result.assignments[2]);
  int members = 0;
  for (const auto& c : result.centers) members += c.member_count;
  CHECK(members == 4);
}

TEST_CASE("kmeans input validation") {
  CHECK_THROWS(select::kmeans({}, 2, 1));
  CHECK_THROWS(select::kmeans({{1, 2}}, 0, 1));
  CHECK_THROWS(select::kmeans({{1, 2}, {1, 2, 3}}, 1, 1));
}

TEST_CASE("kmeans on unit-square corners reaches the known optimum") {
  // best 2-partition pairs adjacent corners: SSE = 4 * 0.5^2 = 1.0
  std::vector<std::vector<double>> pts = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  auto result = select::kmeans(pts, 2, 3, 100, 1e-6, 20);
  CHECK(result.sse == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("kmeans with restarts matches the exhaustive-partition optimum") {
  Rng rng(123);
  int hits = 0;
  const int instances = 40;
  for (int i = 0; i < instances; ++i) {
    const size_t n = 5 + rng.below(4);  // 5..8 points
    const int k = 2 + static_cast<int>(rng.below(2));
    auto pts = random_points(rng, n, 2);
    auto result = select::kmeans(pts, k, rng.next_u64(), 100, 1e-9, 20);
    const double best = testutil::optimal_sse(pts, k);
    CHECK(result.sse >= best - 1e-9);
    if (result.sse <= best + 1e-9) ++hits;
  }
  CHECK(hits >= instances * 95 / 100);
}

TEST_CASE("Lloyd SSE trace is non-increasing") {
  Rng rng(321);
  for (int i = 0; i < 50; ++i) {
    auto pts = random_points(rng, 12 + rng.below(20), 3);
    auto result = select::kmeans(pts, 2 + static_cast<int>(rng.below(3)), rng.next_u64());
    for (const auto& trace : result.restart_traces) {
      for (size_t t = 1; t < trace.size(); ++t) {
        CHECK(trace[t] <= trace[t - 1] + 1e-9);
      }
    }
  }
}

TEST_CASE("kmeans is deterministic per seed and every cluster stays populated") {
  Rng rng(55);
  auto pts = random_points(rng, 30, 4);
  auto a = select::kmeans(pts, 5, 42);
  auto b = select::kmeans(pts, 5, 42);
  CHECK(a.assignments == b.assignments);
  CHECK(a.sse == b.sse);
  REQUIRE(a.centers.size() == b.centers.size());
  for (size_t c = 0; c < a.centers.size(); ++c) {
    CHECK(a.centers[c].vector == b.centers[c].vector);
    CHECK(a.centers[c].member_count >= 1);
  }
  auto c = select::kmeans(pts, 5, 43);
  CHECK(a.assignments != c.assignments);  // different stream, different run
}

TEST_CASE("decode_center basics") {
  auto pool = pool_of({"alpha", "beta", "gamma"});
  auto embedded = embed_pairs(pool, {{1, 0}, {0, 1}, {-1, 0}});

  // center equal to one member, others orthogonal or opposite
  CHECK(select::decode_center({1, 0}, pool, embedded, {}) == "alpha");
  CHECK(select::decode_center({0, 1}, pool, embedded, {}) == "beta");

  // singleton pool: that entity regardless of center
  auto singleton = pool_of({"only"});
  auto sembedded = embed_pairs(singleton, {{0.3, 0.7}});
  CHECK(select::decode_center({-5, -5}, singleton, sembedded, {}) == "only");

  // exhausted pool
  CHECK_THROWS(select::decode_center({1, 0}, singleton, sembedded, {"only"}));
}

TEST_CASE("decode_center breaks exact ties lexicographically") {
  auto pool = pool_of({"zeta", "acme", "mid"});
  auto embedded = embed_pairs(pool, {{2, 0}, {1, 0}, {0, 1}});  // zeta and acme colinear
  CHECK(select::decode_center({1, 0}, pool, embedded, {}) == "acme");
  CHECK(select::decode_center({1, 0}, pool, embedded, {"acme"}) == "zeta");
}

TEST_CASE("decode_center agrees with a linear-scan oracle on hand-built vectors") {
  auto pool = pool_of({"a", "b", "c", "d", "e"});
  auto embedded = embed_pairs(pool, {{1, 0}, {0.9, 0.1}, {0, 1}, {-1, 0.2}, {0.5, 0.5}});
  for (const auto& center : std::vector<std::vector<double>>{
           {1, 0}, {0, 1}, {-1, 0}, {0.7, 0.7}, {-0.2, -0.9}}) {
    std::set<std::string> taken;
    for (size_t step = 0; step < pool.entities.size(); ++step) {
      auto expected = decode_oracle(center, pool, embedded, taken);
      auto got = select::decode_center(center, pool, embedded, taken);
      CHECK(got == expected);
      taken.insert(got);
    }
  }
}

TEST_CASE("decode_center matches the oracle on randomized pools") {
  Rng rng(777);
  for (int i = 0; i < 300; ++i) {
    const size_t n = 1 + rng.below(12);
    std::vector<std::string> names;
    for (size_t j = 0; j < n; ++j) names.push_back("e" + std::to_string(rng.below(50)));
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    auto pool = pool_of(names);
    std::vector<std::vector<double>> vectors;
    for (size_t j = 0; j < pool.entities.size(); ++j) {
      auto v = std::vector<double>{rng.next_double() - 0.5, rng.next_double() - 0.5};
      if (std::fabs(v[0]) + std::fabs(v[1]) < 1e-9) v[0] = 0.5;
      vectors.push_back(v);
    }
    auto embedded = embed_pairs(pool, std::move(vectors));
    auto center = std::vector<double>{rng.next_double() - 0.5, rng.next_double() - 0.5};
    if (std::fabs(center[0]) + std::fabs(center[1]) < 1e-9) center[1] = 0.4;
    std::set<std::string> taken;
    const size_t take = rng.below(pool.entities.size());
    for (size_t t = 0; t < take; ++t) taken.insert(pool.entities[t]);
    CHECK(select::decode_center(center, pool, embedded, taken) ==
          decode_oracle(center, pool, embedded, taken));
  }
}

TEST_CASE("select_points covers a small pool entirely and stays deterministic") {
  auto enc = embed::make_test_encoder(64);
  auto pool = pool_of({"London", "China", "California"});
  auto sel = select::select_points(pool, *enc, 3, 9);
  CHECK(sel.points.size() == 3);
  CHECK(std::set<std::string>(sel.points.begin(), sel.points.end()) ==
        std::set<std::string>{"London", "China", "California"});
  CHECK(sel.method == "cluster");
  CHECK(sel.encoder_id == enc->id());

  auto again = select::select_points(pool, *enc, 3, 9);
  CHECK(sel.points == again.points);
}

TEST_CASE("select_points handles undersized pools with a warning") {
  auto enc = embed::make_test_encoder(64);
  auto pool = pool_of({"London", "Paris"});
  auto sel = select::select_points(pool, *enc, 5, 1);
  CHECK(sel.points.size() == 2);
  CHECK(!sel.warnings.empty());

  auto empty = select::select_points(corpus::EntityPool{"RNA", {}}, *enc, 5, 1);
  CHECK(empty.points.empty());
  CHECK(!empty.warnings.empty());
}

TEST_CASE("select_points yields distinct pool members ordered by cluster size") {
  auto enc = embed::make_test_encoder(64);
  // big cluster of city names sharing trigram mass, one outlier string
  auto pool = pool_of({"Toronto", "Torono", "Toront", "Torontu", "xyzzy"});
  auto sel = select::select_points(pool, *enc, 2, 4);
  REQUIRE(sel.points.size() == 2);
  std::set<std::string> uniq(sel.points.begin(), sel.points.end());
  CHECK(uniq.size() == 2);
  for (const auto& p : sel.points) {
    CHECK(std::find(pool.entities.begin(), pool.entities.end(), p) != pool.entities.end());
  }
  // the first decoded point must come from the dominant Toronto-like cluster
  CHECK(sel.points[0] != "xyzzy");
}

TEST_CASE("select_points_random edge cases, determinism, membership") {
  auto pool = pool_of({"a", "b", "c", "d"});
  auto whole = select::select_points_random(pool, 4, 5);
  CHECK(std::set<std::string>(whole.points.begin(), whole.points.end()) ==
        std::set<std::string>{"a", "b", "c", "d"});

  auto one = select::select_points_random(pool, 1, 5);
  CHECK(one.points.size() == 1);

  auto again = select::select_points_random(pool, 3, 77);
  CHECK(again.points == select::select_points_random(pool, 3, 77).points);
  CHECK(again.points != select::select_points_random(pool, 3, 78).points);

  auto over = select::select_points_random(pool, 9, 5);
  CHECK(over.points.size() == 4);
  CHECK(!over.warnings.empty());
}

TEST_CASE("restrict_pool builds pools solely from demonstration labels") {
  auto schema = testutil::synth_schema();
  corpus::Sentence s1{"x-0", "John Smith visited", {{"John Smith", "PER"}}};
  corpus::Sentence s2{"x-1", "Acme Corp in Paris", {{"Acme Corp", "ORG"}, {"Paris", "LOC"}}};
  std::vector<corpus::Sentence> train = {s1, s2};
  auto demos = corpus::sample_demonstrations(train, 2, 1, schema);
  auto pools = select::restrict_pool(demos, schema);
  CHECK(corpus::find_pool(pools, "PER")->entities == std::vector<std::string>{"John Smith"});
  CHECK(corpus::find_pool(pools, "LOC")->entities == std::vector<std::string>{"Paris"});

  // no-LOC demos leave an empty LOC pool
  auto demos1 = corpus::sample_demonstrations({s1}, 1, 1, schema);
  auto pools1 = select::restrict_pool(demos1, schema);
  CHECK(corpus::find_pool(pools1, "LOC")->entities.empty());

  // demos covering the whole split equal corpus::unique_entities
  auto dataset = testutil::make_synth_dataset();
  auto all = corpus::sample_demonstrations(dataset.train, dataset.train.size(), 2, schema);
  auto restricted = select::restrict_pool(all, schema);
  auto full = corpus::unique_entities(dataset.train, schema);
  for (const auto& p : full) {
    const auto* q = corpus::find_pool(restricted, p.type);
    REQUIRE(q != nullptr);
    CHECK(std::set<std::string>(p.entities.begin(), p.entities.end()) ==
          std::set<std::string>(q->entities.begin(), q->entities.end()));
  }
}

TEST_CASE("select_points_tau with tau=1 equals select_points exactly") {
  auto enc = embed::make_test_encoder(64);
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    std::vector<std::string> entities;
    const size_t n = 3 + rng.below(15);
    for (size_t j = 0; j < n; ++j) {
      entities.push_back("ent" + std::to_string(rng.below(1000)) + std::to_string(j));
    }
    auto pool = pool_of(entities);
    const int a = 1 + static_cast<int>(rng.below(5));
    const uint64_t seed = rng.next_u64();
    auto tau1 = select::select_points_tau(pool, *enc, a, 1, seed);
    auto plain = select::select_points(pool, *enc, a, seed);
    CHECK(tau1.points == plain.points);
  }
}

TEST_CASE("select_points_tau ranks whole pool when tau covers it") {
  auto enc = embed::make_test_encoder(64);
  auto pool = pool_of({"alpha", "beta", "gamma", "delta"});
  auto sel = select::select_points_tau(pool, *enc, 1, 4, 3);
  CHECK(sel.points.size() == 4);
  std::set<std::string> uniq(sel.points.begin(), sel.points.end());
  CHECK(uniq.size() == 4);
}

namespace {

// hands each surface a pre-assigned vector; lets tests pin cluster geometry
class FixedEncoder final : public embed::Encoder {
 public:
  explicit FixedEncoder(std::map<std::string, std::vector<double>> table)
      : table_(std::move(table)) {
    dim_ = table_.begin()->second.size();
  }
  const std::string& id() const override { return id_; }
  size_t dim() const override { return dim_; }
  std::vector<std::vector<double>> encode(const std::vector<std::string>& surfaces) override {
    std::vector<std::vector<double>> out;
    for (const auto& s : surfaces) out.push_back(table_.at(s));
    return out;
  }

 private:
  std::map<std::string, std::vector<double>> table_;
  std::string id_ = "fixed";
  size_t dim_;
};

std::vector<double> unit_at_degrees(double deg) {
  const double rad = deg * 3.14159265358979323846 / 180.0;
  return {std::cos(rad), std::sin(rad)};
}

}  // namespace

TEST_CASE("select_points_tau takes the tau most similar per center (oracle check)") {
  auto enc = embed::make_test_encoder(16);
  auto pool = pool_of({"aaa", "aab", "aac", "zzz", "zzy", "zzx"});
  auto sel = select::select_points_tau(pool, *enc, 2, 2, 5);
  CHECK(sel.points.size() == 4);
  std::set<std::string> uniq(sel.points.begin(), sel.points.end());
  CHECK(uniq.size() == 4);
  CHECK(sel.tau == 2);
  // count audit: min(tau * a, |pool|)
  auto all = select::select_points_tau(pool, *enc, 2, 5, 5);
  CHECK(all.points.size() == 6);
}

TEST_CASE("select_points_tau reproduces a hand-derived ranking on fixed geometry") {
  // four vectors near 0 degrees, two near 105: with k = 2 and restarts the
  // clusters are unambiguous, and the big cluster decodes first.
  //   centroid of {0, 8, -20, 30} deg sits at ~4.47 deg, so the angular
  //   distances rank p008 (3.53) before p000 (4.47);
  //   the {90, 120} centroid sits at exactly 105 deg, so q090 and q120 tie
  //   and the lexicographically smaller surface goes first.
  FixedEncoder enc({
      {"p000", unit_at_degrees(0)},
      {"p008", unit_at_degrees(8)},
      {"n020", unit_at_degrees(-20)},
      {"p030", unit_at_degrees(30)},
      {"q090", unit_at_degrees(90)},
      {"q120", unit_at_degrees(120)},
  });
  auto pool = pool_of({"p000", "p008", "n020", "p030", "q090", "q120"});
  auto sel = select::select_points_tau(pool, enc, 2, 2, 11, nullptr, 20);
  REQUIRE(sel.points.size() == 4);
  CHECK(sel.points[0] == "p008");
  CHECK(sel.points[1] == "p000");
  CHECK(sel.points[2] == "q090");
  CHECK(sel.points[3] == "q120");
}

TEST_CASE("extend_random preserves the base and adds distinct members") {
  auto enc = embed::make_test_encoder(64);
  auto pool = pool_of({"a", "b", "c", "d", "e", "f"});
  auto base = select::select_points(pool, *enc, 2, 4);

  auto unchanged = select::extend_random(base, pool, 0, 11);
  CHECK(unchanged.points == base.points);
  CHECK(unchanged.method == "extend");

  auto extended = select::extend_random(base, pool, 2, 11);
  REQUIRE(extended.points.size() == 4);
  CHECK(std::equal(base.points.begin(), base.points.end(), extended.points.begin()));
  std::set<std::string> uniq(extended.points.begin(), extended.points.end());
  CHECK(uniq.size() == 4);

  auto full = select::extend_random(base, pool, 4, 11);
  CHECK(std::set<std::string>(full.points.begin(), full.points.end()) ==
        std::set<std::string>(pool.entities.begin(), pool.entities.end()));

  CHECK(select::extend_random(base, pool, 2, 11).points == extended.points);
}

TEST_CASE("selection json round trip") {
  PointSelection sel;
  sel.type = "LOC";
  sel.method = "cluster";
  sel.seed = 42;
  sel.encoder_id = "trigram:64";
  sel.tau = 2;
  sel.points = {"London", "China"};
  auto back = select::selection_from_json(select::selection_to_json(sel));
  CHECK(back.type == sel.type);
  CHECK(back.method == sel.method);
  CHECK(back.seed == sel.seed);
  CHECK(back.encoder_id == sel.encoder_id);
  CHECK(back.tau == sel.tau);
  CHECK(back.points == sel.points);
}
