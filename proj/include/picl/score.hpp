#pragma once

#include <map>
#include <string>
#include <vector>

#include "picl/corpus.hpp"
#include "picl/parse.hpp"

namespace picl::score {

struct TypeCounts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
};

struct ScoreReport {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<std::string, TypeCounts> per_type;
  double parse_failure_rate = 0.0;
};

/// Entity-level micro P/R/F1 over unique (type, trimmed surface) pairs per
/// sentence. preds and golds must cover the same sentence ids. A failed parse
/// contributes an empty prediction and counts toward parse_failure_rate.
/// Empty-denominator convention: a side with no pairs scores 1.0 when the
/// other side is also empty (so tp+fp+fn = 0 gives F1 = 1), otherwise 0.0.
ScoreReport score_run(const std::map<std::string, parse::Prediction>& preds,
                      const std::map<std::string, std::vector<corpus::GoldMention>>& golds,
                      const std::vector<corpus::EntityType>& schema);

struct Averaged {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Arithmetic mean of the per-run metrics (not recomputed from pooled counts).
Averaged average_runs(const std::vector<ScoreReport>& reports);

std::string report_to_json(const ScoreReport& report);

}  // namespace picl::score
