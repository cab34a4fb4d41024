// Shared test fixtures: synthetic datasets plus the independent oracles the
// suites check against (set-arithmetic scorer, exhaustive k-means partitioner,
// BIO serializer). Everything here is deliberately written from scratch so it
// cannot share a code path with the library it verifies.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "picl/corpus.hpp"
#include "picl/parse.hpp"
#include "picl/rng.hpp"

namespace testutil {

// ---------------------------------------------------------------------------
// synthetic data

struct SynthOptions {
  size_t train_sentences = 60;
  size_t test_sentences = 50;
  uint64_t seed = 7;
  size_t max_mentions_per_sentence = 3;
  bool allow_empty_sentences = true;
};

inline const std::vector<std::string>& synth_vocab(const std::string& type) {
  static const std::map<std::string, std::vector<std::string>> vocab = {
      {"PER",
       {"John Smith", "Mary", "Alice Cooper", "Bob", "Carol Danvers", "Dave", "Erin Moore",
        "Frank", "Grace Hopper", "Heidi"}},
      {"LOC",
       {"Paris", "New York", "London", "Berlin", "Tokyo", "Cairo", "Lima", "Oslo", "Madrid",
        "Quito"}},
      {"ORG",
       {"Acme Corp", "Reuters", "United Nations", "Initech", "Globex", "Umbrella", "Hooli",
        "Stark Industries", "Cyberdyne", "Wonka"}},
  };
  return vocab.at(type);
}

inline std::vector<picl::corpus::EntityType> synth_schema() {
  return picl::corpus::schema_from_names({"PER", "LOC", "ORG"});
}

/// Sentences with unique texts (a serial token guarantees it), gold mentions
/// drawn from per-type vocabularies and embedded verbatim in the text.
inline std::vector<picl::corpus::Sentence> make_synth_split(const std::string& id_prefix,
                                                            size_t count, picl::Rng& rng,
                                                            const SynthOptions& opt) {
  const auto schema = synth_schema();
  static const std::vector<std::string> fillers = {"the",  "quick", "report", "said",
                                                   "today", "about", "visited"};
  std::vector<picl::corpus::Sentence> split;
  for (size_t i = 0; i < count; ++i) {
    picl::corpus::Sentence s;
    s.id = id_prefix + "-" + std::to_string(i);
    size_t mentions = rng.below(opt.max_mentions_per_sentence + 1);
    if (!opt.allow_empty_sentences && mentions == 0) mentions = 1;
    std::string text = id_prefix + std::to_string(i);  // uniqueness token
    for (size_t m = 0; m < mentions; ++m) {
      const auto& type = schema[rng.below(schema.size())].name;
      const auto& words = synth_vocab(type);
      const std::string& surface = words[rng.below(words.size())];
      text += " " + fillers[rng.below(fillers.size())] + " " + surface;
      s.gold.push_back({surface, type});
    }
    text += " " + fillers[rng.below(fillers.size())];
    s.text = text;
    split.push_back(std::move(s));
  }
  return split;
}

inline picl::corpus::Dataset make_synth_dataset(const SynthOptions& opt = {}) {
  picl::Rng rng(opt.seed);
  auto train = make_synth_split("train", opt.train_sentences, rng, opt);
  auto test = make_synth_split("test", opt.test_sentences, rng, opt);
  return picl::corpus::make_dataset("synth", synth_schema(), std::move(train), std::move(test));
}

// ---------------------------------------------------------------------------
// scoring oracle: direct set arithmetic over (type, surface) pairs

using PairSet = std::set<std::pair<std::string, std::string>>;

struct OracleScore {
  long long tp = 0, fp = 0, fn = 0;
  double precision = 0, recall = 0, f1 = 0;
};

inline OracleScore oracle_score(const std::vector<PairSet>& preds,
                                const std::vector<PairSet>& golds) {
  OracleScore s;
  for (size_t i = 0; i < golds.size(); ++i) {
    for (const auto& p : preds[i]) {
      if (golds[i].count(p))
        ++s.tp;
      else
        ++s.fp;
    }
    for (const auto& g : golds[i]) {
      if (!preds[i].count(g)) ++s.fn;
    }
  }
  s.precision = (s.tp + s.fp) > 0 ? double(s.tp) / double(s.tp + s.fp)
                                  : (s.tp + s.fn == 0 ? 1.0 : 0.0);
  s.recall = (s.tp + s.fn) > 0 ? double(s.tp) / double(s.tp + s.fn)
                               : (s.tp + s.fp == 0 ? 1.0 : 0.0);
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall)
                                      : 0.0;
  return s;
}

inline PairSet gold_pairs(const std::vector<picl::corpus::GoldMention>& gold) {
  PairSet set;
  for (const auto& m : gold) set.emplace(m.type, picl::trim_copy(m.surface));
  return set;
}

inline PairSet prediction_pairs(const picl::parse::Prediction& pred) {
  PairSet set;
  for (const auto& [type, surfaces] : pred.by_type) {
    for (const auto& s : surfaces) set.emplace(type, s);
  }
  return set;
}

// ---------------------------------------------------------------------------
// k-means oracle: exhaustive assignment enumeration (k^n, fine for n <= 8)

inline double partition_sse(const std::vector<std::vector<double>>& points,
                            const std::vector<int>& assign, int k) {
  const size_t dim = points[0].size();
  double sse = 0.0;
  for (int c = 0; c < k; ++c) {
    std::vector<double> mean(dim, 0.0);
    size_t n = 0;
    for (size_t i = 0; i < points.size(); ++i) {
      if (assign[i] != c) continue;
      ++n;
      for (size_t d = 0; d < dim; ++d) mean[d] += points[i][d];
    }
    if (n == 0) continue;
    for (size_t d = 0; d < dim; ++d) mean[d] /= double(n);
    for (size_t i = 0; i < points.size(); ++i) {
      if (assign[i] != c) continue;
      for (size_t d = 0; d < dim; ++d) {
        const double diff = points[i][d] - mean[d];
        sse += diff * diff;
      }
    }
  }
  return sse;
}

/// Minimum SSE over every assignment of the points into at most k groups.
inline double optimal_sse(const std::vector<std::vector<double>>& points, int k) {
  const size_t n = points.size();
  std::vector<int> assign(n, 0);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    best = std::min(best, partition_sse(points, assign, k));
    size_t pos = 0;
    while (pos < n) {
      if (++assign[pos] < k) break;
      assign[pos] = 0;
      ++pos;
    }
    if (pos == n) break;
  }
  return best;
}

// ---------------------------------------------------------------------------
// BIO serializer (independent of parse_bio): tokenizes on single spaces and
// greedily tags the first untagged token run matching each gold surface

inline std::string to_bio(const picl::corpus::Sentence& sentence) {
  std::vector<std::string> tokens;
  {
    std::string tok;
    for (char c : sentence.text + " ") {
      if (c == ' ') {
        if (!tok.empty()) tokens.push_back(tok);
        tok.clear();
      } else {
        tok += c;
      }
    }
  }
  std::vector<std::string> tags(tokens.size(), "O");
  for (const auto& m : sentence.gold) {
    std::vector<std::string> target;
    std::string tok;
    for (char c : m.surface + " ") {
      if (c == ' ') {
        if (!tok.empty()) target.push_back(tok);
        tok.clear();
      } else {
        tok += c;
      }
    }
    for (size_t i = 0; i + target.size() <= tokens.size(); ++i) {
      bool match = true;
      for (size_t j = 0; j < target.size(); ++j) {
        if (tokens[i + j] != target[j] || tags[i + j] != "O") {
          match = false;
          break;
        }
      }
      if (match) {
        tags[i] = "B-" + m.type;
        for (size_t j = 1; j < target.size(); ++j) tags[i + j] = "I-" + m.type;
        break;
      }
    }
  }
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) out += tokens[i] + "\t" + tags[i] + "\n";
  return out;
}

// ---------------------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("picl-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testutil
