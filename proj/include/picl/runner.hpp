#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "picl/corpus.hpp"
#include "picl/embed.hpp"
#include "picl/llm.hpp"
#include "picl/score.hpp"
#include "picl/select.hpp"

namespace picl::runner {

enum class Method {
  vanilla,
  icl,
  picl_random,
  picl_cluster,
  picl_restricted,
  picl_tau,
  picl_extend,
};

const char* to_string(Method m);
Method method_from_string(const std::string& name);
bool method_uses_points(Method m);
bool method_uses_encoder(Method m);

struct EncoderSpec {
  std::string kind = "test";  // test | remote
  size_t dim = 64;
  std::string url;
  std::string model;
  std::string api_key_env;
};

struct ClientSpec {
  std::string kind = "gold";  // http | gold | corruptor
  std::string model = "offline-oracle";
  std::string url;
  std::string api_key_env;
  std::string corruptor_rule = "drop_odd_len";
};

struct ExperimentConfig {
  std::string dataset = "dataset";
  std::string train_path;
  std::string test_path;
  std::vector<corpus::EntityType> schema;
  Method method = Method::vanilla;
  int shots = 0;   // b: in-context demonstrations
  int points = 0;  // a: point entities per type
  int tau = 1;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  size_t test_subset = 0;  // 0 = full test split
  uint64_t subset_seed = 17;
  EncoderSpec encoder;
  ClientSpec client;
  int kmeans_restarts = 1;
  int max_output_tokens = 512;
  int parallel = 4;
  std::string cache_dir;  // empty = in-memory caches only
  std::string out_dir;    // empty = no artifacts persisted
};

/// Method-specific field validation; throws std::invalid_argument.
void validate(const ExperimentConfig& config);

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& json_text);

struct SeedOutcome {
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  score::ScoreReport report;
  std::vector<select::PointSelection> selections;
  std::vector<corpus::Demonstration> demos;
};

struct RunResult {
  ExperimentConfig config;
  std::vector<SeedOutcome> seeds;
  score::Averaged mean;     // over successful seeds
  std::string run_dir;      // empty when not persisted
  std::string results_csv;  // header + one row per successful seed
};

/// Executes one experiment: per seed, sample demonstrations, build pools,
/// select points, render prompts for every test sentence, complete, parse and
/// score; then average across seeds. A failing seed records its cause and the
/// remaining seeds proceed. When `dataset` is null the splits are loaded from
/// the configured paths. Overrides let tests inject doubles directly.
RunResult run_experiment(const ExperimentConfig& config,
                         const corpus::Dataset* dataset = nullptr,
                         llm::ChatClient* client_override = nullptr,
                         embed::Encoder* encoder_override = nullptr);

struct SweepGrid {
  ExperimentConfig base;
  std::vector<Method> methods;
  std::vector<int> a_values = {5, 10};
  std::vector<int> b_values = {3, 5, 10, 20};
  std::vector<int> tau_values = {1};
};

SweepGrid grid_from_json(const std::string& json_text);

/// Cartesian expansion over the dimensions each method actually uses.
std::vector<ExperimentConfig> expand_grid(const SweepGrid& grid);

struct SweepResult {
  std::vector<RunResult> runs;
  std::string results_csv;
  std::string summary_md;
  std::string sweep_dir;  // empty when not persisted
};

SweepResult sweep(const SweepGrid& grid, const corpus::Dataset* dataset = nullptr,
                  llm::ChatClient* client_override = nullptr,
                  embed::Encoder* encoder_override = nullptr);

std::string results_csv_header();

/// Plain-text summary table, one row per (dataset, method, a, b, tau) with
/// seed-averaged metrics; input is results.csv content.
std::string summary_from_csv(const std::string& csv_text);

}  // namespace picl::runner
