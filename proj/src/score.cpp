#include "picl/score.hpp"

#include <set>
#include <stdexcept>

#include "json.hpp"
#include "picl/util.hpp"

namespace picl::score {

namespace {

using Pair = std::pair<std::string, std::string>;  // (type, surface)

double safe_ratio(long long num, long long den, bool other_side_empty) {
  if (den > 0) return static_cast<double>(num) / static_cast<double>(den);
  return other_side_empty ? 1.0 : 0.0;
}

}  // namespace

ScoreReport score_run(const std::map<std::string, parse::Prediction>& preds,
                      const std::map<std::string, std::vector<corpus::GoldMention>>& golds,
                      const std::vector<corpus::EntityType>& schema) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("score_run: prediction/gold id sets differ in size");
  }

  ScoreReport report;
  for (const auto& t : schema) report.per_type.emplace(t.name, TypeCounts{});
  size_t failed = 0;

  for (const auto& [id, gold_mentions] : golds) {
    auto pit = preds.find(id);
    if (pit == preds.end()) {
      throw std::invalid_argument("score_run: missing prediction for sentence '" + id + "'");
    }
    const parse::Prediction& pred = pit->second;
    if (pred.status == parse::ParseStatus::failed) ++failed;

    std::set<Pair> gold_set;
    for (const auto& m : gold_mentions) {
      std::string surface = trim_copy(m.surface);
      if (!surface.empty() && corpus::schema_has(schema, m.type)) {
        gold_set.emplace(m.type, std::move(surface));
      }
    }
    std::set<Pair> pred_set;
    for (const auto& [type, surfaces] : pred.by_type) {
      for (const auto& s : surfaces) pred_set.emplace(type, s);
    }

    for (const auto& p : pred_set) {
      auto& tc = report.per_type.at(p.first);
      if (gold_set.count(p)) {
        ++report.tp;
        ++tc.tp;
      } else {
        ++report.fp;
        ++tc.fp;
      }
    }
    for (const auto& g : gold_set) {
      if (!pred_set.count(g)) {
        ++report.fn;
        ++report.per_type.at(g.first).fn;
      }
    }
  }

  report.precision = safe_ratio(report.tp, report.tp + report.fp, report.tp + report.fn == 0);
  report.recall = safe_ratio(report.tp, report.tp + report.fn, report.tp + report.fp == 0);
  report.f1 = (report.precision + report.recall > 0.0)
                  ? 2.0 * report.precision * report.recall / (report.precision + report.recall)
                  : 0.0;
  report.parse_failure_rate =
      golds.empty() ? 0.0 : static_cast<double>(failed) / static_cast<double>(golds.size());
  return report;
}

Averaged average_runs(const std::vector<ScoreReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("average_runs: no reports");
  Averaged avg;
  for (const auto& r : reports) {
    avg.precision += r.precision;
    avg.recall += r.recall;
    avg.f1 += r.f1;
  }
  const auto n = static_cast<double>(reports.size());
  avg.precision /= n;
  avg.recall /= n;
  avg.f1 /= n;
  return avg;
}

std::string report_to_json(const ScoreReport& report) {
  nlohmann::ordered_json j;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["precision"] = format_double(report.precision);
  j["recall"] = format_double(report.recall);
  j["f1"] = format_double(report.f1);
  j["parse_failure_rate"] = format_double(report.parse_failure_rate);
  auto per_type = nlohmann::ordered_json::object();
  for (const auto& [type, tc] : report.per_type) {
    per_type[type] = {{"tp", tc.tp}, {"fp", tc.fp}, {"fn", tc.fn}};
  }
  j["per_type"] = std::move(per_type);
  return j.dump();
}

}  // namespace picl::score
