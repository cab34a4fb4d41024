#include "picl/runner.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "picl/parse.hpp"
#include "picl/prompt.hpp"
#include "picl/rng.hpp"
#include "picl/util.hpp"

namespace picl::runner {

namespace {

void parallel_for(size_t n, int workers, const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  const size_t worker_count = std::min<size_t>(std::max(workers, 1), n);
  if (worker_count <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(worker_count);
  for (size_t w = 0; w < worker_count; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string getenv_or_empty(const std::string& name) {
  if (name.empty()) return "";
  const char* value = std::getenv(name.c_str());
  return value ? value : "";
}

corpus::Dataset load_dataset(const ExperimentConfig& config) {
  auto read_split = [&](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open split: " + path);
    return corpus::read_jsonl(in, &config.schema);
  };
  return corpus::make_dataset(config.dataset, config.schema, read_split(config.train_path),
                              read_split(config.test_path));
}

std::vector<corpus::Sentence> subset_test(const std::vector<corpus::Sentence>& test,
                                          size_t subset, uint64_t subset_seed) {
  if (subset == 0 || subset >= test.size()) return test;
  Rng rng(mix_seed(subset_seed, "test-subset"));
  auto indices = rng.sample_indices(test.size(), subset);
  std::sort(indices.begin(), indices.end());
  std::vector<corpus::Sentence> out;
  out.reserve(subset);
  for (size_t i : indices) out.push_back(test[i]);
  return out;
}

std::unique_ptr<embed::Encoder> build_encoder(const EncoderSpec& spec) {
  if (spec.kind == "test") return embed::make_test_encoder(spec.dim);
  if (spec.kind == "remote") {
    embed::RemoteEncoderConfig cfg;
    cfg.url = spec.url.empty() ? getenv_or_empty("PICL_EMBED_URL") : spec.url;
    cfg.model = spec.model;
    cfg.api_key = getenv_or_empty(spec.api_key_env.empty() ? "PICL_EMBED_API_KEY"
                                                           : spec.api_key_env);
    cfg.dim = spec.dim;
    return embed::make_remote_encoder(std::move(cfg));
  }
  throw std::invalid_argument("unknown encoder kind '" + spec.kind + "'");
}

std::unique_ptr<llm::ChatClient> build_client(const ClientSpec& spec,
                                              const corpus::Dataset& effective,
                                              const std::string& cache_dir) {
  if (spec.kind == "gold") return llm::gold_oracle(effective);
  if (spec.kind == "corruptor") {
    return llm::corruptor_oracle(effective, llm::drop_rule_by_name(spec.corruptor_rule));
  }
  if (spec.kind == "http") {
    llm::HttpClientConfig cfg;
    cfg.url = spec.url.empty() ? getenv_or_empty("PICL_CHAT_URL") : spec.url;
    cfg.api_key = getenv_or_empty(spec.api_key_env.empty() ? "PICL_API_KEY" : spec.api_key_env);
    auto inner = std::make_unique<llm::HttpChatClient>(std::move(cfg));
    auto cache = cache_dir.empty()
                     ? std::make_shared<llm::ResponseCache>()
                     : std::make_shared<llm::ResponseCache>(
                           std::filesystem::path(cache_dir) / "completions");
    return std::make_unique<llm::CachedClient>(std::move(inner), std::move(cache));
  }
  throw std::invalid_argument("unknown client kind '" + spec.kind + "'");
}

std::string csv_row(const ExperimentConfig& config, uint64_t seed,
                    const score::ScoreReport& report) {
  std::string row;
  row += config.dataset;
  row += ',';
  row += to_string(config.method);
  row += ',' + std::to_string(config.points);
  row += ',' + std::to_string(config.shots);
  row += ',' + std::to_string(config.tau);
  row += ',' + std::to_string(seed);
  row += ',' + format_double(report.precision);
  row += ',' + format_double(report.recall);
  row += ',' + format_double(report.f1);
  row += ',' + format_double(report.parse_failure_rate);
  row += '\n';
  return row;
}

struct SentenceArtifacts {
  std::string prompt_line;
  std::string output_line;
  std::string diagnostic_line;  // empty when the parse was clean
};

void persist_seed(const std::filesystem::path& seed_dir, const SeedOutcome& outcome,
                  const std::vector<SentenceArtifacts>& artifacts) {
  nlohmann::ordered_json demos = nlohmann::ordered_json::array();
  for (const auto& d : outcome.demos) {
    demos.push_back({{"input", d.input}, {"output", d.output}});
  }
  write_text_file_atomic(seed_dir / "demos.json", demos.dump(2));

  for (const auto& sel : outcome.selections) {
    write_text_file_atomic(seed_dir / "selections" / (sel.type + ".json"),
                           select::selection_to_json(sel));
  }

  std::string prompts, outputs, diagnostics;
  for (const auto& a : artifacts) {
    prompts += a.prompt_line;
    outputs += a.output_line;
    diagnostics += a.diagnostic_line;
  }
  write_text_file_atomic(seed_dir / "prompts.jsonl", prompts);
  write_text_file_atomic(seed_dir / "outputs.jsonl", outputs);
  write_text_file_atomic(seed_dir / "diagnostics.jsonl", diagnostics);
  write_text_file_atomic(seed_dir / "score.json", score::report_to_json(outcome.report));
}

struct SummaryRow {
  std::string dataset;
  std::string method;
  int a = 0;
  int b = 0;
  int tau = 0;
  int seeds = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double parse_fail = 0;
};

std::string render_summary(const std::vector<SummaryRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"dataset", "method", "a", "b", "tau", "seeds", "P", "R", "F1", "parse_fail"});
  for (const auto& r : rows) {
    cells.push_back({r.dataset, r.method, std::to_string(r.a), std::to_string(r.b),
                     std::to_string(r.tau), std::to_string(r.seeds), format_double(r.precision, 4),
                     format_double(r.recall, 4), format_double(r.f1, 4),
                     format_double(r.parse_fail, 4)});
  }
  std::vector<size_t> widths(cells[0].size(), 0);
  for (const auto& row : cells) {
    for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  for (size_t r = 0; r < cells.size(); ++r) {
    out += '|';
    for (size_t c = 0; c < cells[r].size(); ++c) {
      out += ' ';
      out += cells[r][c];
      out.append(widths[c] - cells[r][c].size(), ' ');
      out += " |";
    }
    out += '\n';
    if (r == 0) {
      out += '|';
      for (size_t c = 0; c < widths.size(); ++c) {
        out.append(widths[c] + 2, '-');
        out += '|';
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::vanilla:
      return "vanilla";
    case Method::icl:
      return "icl";
    case Method::picl_random:
      return "picl_random";
    case Method::picl_cluster:
      return "picl_cluster";
    case Method::picl_restricted:
      return "picl_restricted";
    case Method::picl_tau:
      return "picl_tau";
    case Method::picl_extend:
      return "picl_extend";
  }
  return "unknown";
}

Method method_from_string(const std::string& name) {
  for (Method m : {Method::vanilla, Method::icl, Method::picl_random, Method::picl_cluster,
                   Method::picl_restricted, Method::picl_tau, Method::picl_extend}) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown method '" + name + "'");
}

bool method_uses_points(Method m) { return m != Method::vanilla && m != Method::icl; }

bool method_uses_encoder(Method m) {
  return m == Method::picl_cluster || m == Method::picl_restricted || m == Method::picl_tau ||
         m == Method::picl_extend;
}

void validate(const ExperimentConfig& config) {
  if (config.schema.empty()) throw std::invalid_argument("config: schema is empty");
  if (config.seeds.empty()) throw std::invalid_argument("config: seeds are empty");
  if (config.shots < 0 || config.points < 0 || config.tau < 1) {
    throw std::invalid_argument("config: shots/points must be >= 0 and tau >= 1");
  }
  switch (config.method) {
    case Method::vanilla:
      if (config.shots > 0) throw std::invalid_argument("vanilla forbids demonstrations (b > 0)");
      if (config.points > 0) throw std::invalid_argument("vanilla takes no point entities");
      break;
    case Method::icl:
      if (config.shots < 1) throw std::invalid_argument("icl requires b >= 1");
      if (config.points > 0) throw std::invalid_argument("icl takes no point entities");
      break;
    case Method::picl_restricted:
      if (config.shots < 1) {
        throw std::invalid_argument("picl_restricted requires b >= 1 (points come from demos)");
      }
      [[fallthrough]];
    case Method::picl_random:
    case Method::picl_cluster:
    case Method::picl_tau:
    case Method::picl_extend:
      if (config.points < 1) throw std::invalid_argument("P-ICL methods require a >= 1");
      break;
  }
  if (config.method != Method::picl_tau && config.method != Method::picl_extend &&
      config.tau != 1) {
    throw std::invalid_argument("tau != 1 is only meaningful for picl_tau / picl_extend");
  }
}

std::string config_to_json(const ExperimentConfig& config) {
  nlohmann::ordered_json j;
  j["dataset"] = config.dataset;
  j["train"] = config.train_path;
  j["test"] = config.test_path;
  auto schema = nlohmann::ordered_json::array();
  for (const auto& t : config.schema) {
    schema.push_back({{"name", t.name}, {"description", t.description}});
  }
  j["schema"] = std::move(schema);
  j["method"] = to_string(config.method);
  j["shots"] = config.shots;
  j["points"] = config.points;
  j["tau"] = config.tau;
  j["seeds"] = config.seeds;
  j["test_subset"] = config.test_subset;
  j["subset_seed"] = config.subset_seed;
  j["encoder"] = {{"kind", config.encoder.kind},
                  {"dim", config.encoder.dim},
                  {"url", config.encoder.url},
                  {"model", config.encoder.model},
                  {"api_key_env", config.encoder.api_key_env}};
  j["client"] = {{"kind", config.client.kind},
                 {"model", config.client.model},
                 {"url", config.client.url},
                 {"api_key_env", config.client.api_key_env},
                 {"corruptor_rule", config.client.corruptor_rule}};
  j["kmeans_restarts"] = config.kmeans_restarts;
  j["max_output_tokens"] = config.max_output_tokens;
  j["parallel"] = config.parallel;
  j["cache_dir"] = config.cache_dir;
  j["out_dir"] = config.out_dir;
  return j.dump(2);
}

namespace {

ExperimentConfig config_from_json_obj(const nlohmann::json& j) {
  ExperimentConfig config;
  config.dataset = j.value("dataset", config.dataset);
  config.train_path = j.value("train", "");
  config.test_path = j.value("test", "");
  if (j.contains("schema")) {
    config.schema.clear();
    for (const auto& t : j["schema"]) {
      if (t.is_string()) {
        config.schema.push_back({t.get<std::string>(), ""});
      } else {
        config.schema.push_back({t.value("name", ""), t.value("description", "")});
      }
    }
  }
  if (j.contains("method")) config.method = method_from_string(j["method"].get<std::string>());
  config.shots = j.value("shots", config.shots);
  config.points = j.value("points", config.points);
  config.tau = j.value("tau", config.tau);
  if (j.contains("seeds")) config.seeds = j["seeds"].get<std::vector<uint64_t>>();
  config.test_subset = j.value("test_subset", config.test_subset);
  config.subset_seed = j.value("subset_seed", config.subset_seed);
  if (j.contains("encoder")) {
    const auto& e = j["encoder"];
    config.encoder.kind = e.value("kind", config.encoder.kind);
    config.encoder.dim = e.value("dim", config.encoder.dim);
    config.encoder.url = e.value("url", "");
    config.encoder.model = e.value("model", "");
    config.encoder.api_key_env = e.value("api_key_env", "");
  }
  if (j.contains("client")) {
    const auto& c = j["client"];
    config.client.kind = c.value("kind", config.client.kind);
    config.client.model = c.value("model", config.client.model);
    config.client.url = c.value("url", "");
    config.client.api_key_env = c.value("api_key_env", "");
    config.client.corruptor_rule = c.value("corruptor_rule", config.client.corruptor_rule);
  }
  config.kmeans_restarts = j.value("kmeans_restarts", config.kmeans_restarts);
  config.max_output_tokens = j.value("max_output_tokens", config.max_output_tokens);
  config.parallel = j.value("parallel", config.parallel);
  config.cache_dir = j.value("cache_dir", "");
  config.out_dir = j.value("out_dir", "");
  return config;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  return config_from_json_obj(j);
}

std::string results_csv_header() {
  return "dataset,method,a,b,tau,seed,P,R,F1,parse_fail_rate\n";
}

namespace {

/// Canonical form for content addressing and the persisted config.json:
/// storage locations are not part of an experiment's identity.
std::string identity_json(const ExperimentConfig& config) {
  ExperimentConfig identity = config;
  identity.out_dir.clear();
  identity.cache_dir.clear();
  return config_to_json(identity);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, const corpus::Dataset* dataset,
                         llm::ChatClient* client_override, embed::Encoder* encoder_override) {
  validate(config);

  corpus::Dataset loaded;
  if (!dataset) {
    loaded = load_dataset(config);
    dataset = &loaded;
  }

  corpus::Dataset effective = *dataset;
  effective.test = subset_test(dataset->test, config.test_subset, config.subset_seed);

  std::unique_ptr<embed::Encoder> owned_encoder;
  embed::Encoder* encoder = encoder_override;
  if (!encoder && method_uses_encoder(config.method)) {
    owned_encoder = build_encoder(config.encoder);
    encoder = owned_encoder.get();
  }

  std::unique_ptr<llm::ChatClient> owned_client;
  llm::ChatClient* client = client_override;
  if (!client) {
    owned_client = build_client(config.client, effective, config.cache_dir);
    client = owned_client.get();
  }

  embed::EmbeddingCache embedding_cache =
      config.cache_dir.empty()
          ? embed::EmbeddingCache()
          : embed::EmbeddingCache(std::filesystem::path(config.cache_dir) / "embeddings");

  RunResult result;
  result.config = config;
  result.results_csv = results_csv_header();

  std::filesystem::path run_dir;
  if (!config.out_dir.empty()) {
    const std::string tag = to_hex(fnv1a64(identity_json(config))).substr(0, 8);
    run_dir = std::filesystem::path(config.out_dir) /
              (config.dataset + "_" + to_string(config.method) + "_a" +
               std::to_string(config.points) + "_b" + std::to_string(config.shots) + "_t" +
               std::to_string(config.tau) + "_" + tag);
    std::filesystem::create_directories(run_dir);
    result.run_dir = run_dir.string();
    write_text_file_atomic(run_dir / "config.json", identity_json(config));
  }

  prompt::PromptConfig prompt_config;
  prompt_config.schema = config.schema;
  std::vector<score::ScoreReport> ok_reports;

  for (uint64_t seed : config.seeds) {
    SeedOutcome outcome;
    outcome.seed = seed;
    try {
      const uint64_t demo_seed = mix_seed(seed, "demos");
      const uint64_t select_seed = mix_seed(seed, "select");
      const uint64_t extend_seed = mix_seed(seed, "extend");

      if (config.shots > 0) {
        outcome.demos = corpus::sample_demonstrations(
            effective.train, static_cast<size_t>(config.shots), demo_seed, config.schema);
      }

      prompt::PointMap points;
      if (method_uses_points(config.method)) {
        const auto pools = config.method == Method::picl_restricted
                               ? select::restrict_pool(outcome.demos, config.schema)
                               : corpus::unique_entities(effective.train, config.schema);
        for (const auto& pool : pools) {
          select::PointSelection sel;
          switch (config.method) {
            case Method::picl_random:
              sel = select::select_points_random(pool, config.points, select_seed);
              break;
            case Method::picl_cluster:
              sel = select::select_points(pool, *encoder, config.points, select_seed,
                                          &embedding_cache, config.kmeans_restarts);
              break;
            case Method::picl_restricted:
              sel = select::select_points(pool, *encoder, config.points, select_seed,
                                          &embedding_cache, config.kmeans_restarts);
              sel.method = "restricted";
              break;
            case Method::picl_tau:
              sel = select::select_points_tau(pool, *encoder, config.points, config.tau,
                                              select_seed, &embedding_cache,
                                              config.kmeans_restarts);
              break;
            case Method::picl_extend: {
              auto base = select::select_points(pool, *encoder, config.points, select_seed,
                                                &embedding_cache, config.kmeans_restarts);
              sel = select::extend_random(base, pool, (config.tau - 1) * config.points,
                                          extend_seed);
              break;
            }
            default:
              break;
          }
          points[pool.type] = sel.points;
          outcome.selections.push_back(std::move(sel));
        }
      }

      const auto& test = effective.test;
      std::vector<parse::Prediction> predictions(test.size());
      std::vector<SentenceArtifacts> artifacts(test.size());

      parallel_for(test.size(), config.parallel, [&](size_t i) {
        const corpus::Sentence& sentence = test[i];
        prompt::PromptBundle bundle;
        switch (config.method) {
          case Method::vanilla:
            bundle = prompt::build_vanilla(prompt_config, sentence.text, sentence.id);
            break;
          case Method::icl:
            bundle = prompt::build_icl(prompt_config, outcome.demos, sentence.text, sentence.id);
            break;
          default:
            bundle = prompt::build_picl(prompt_config, points, outcome.demos, sentence.text,
                                        sentence.id);
            break;
        }
        llm::CompletionRequest request;
        request.model = config.client.model;
        request.prompt = bundle.text;
        request.max_output_tokens = config.max_output_tokens;
        const llm::CompletionResult completion = llm::complete(*client, request);
        predictions[i] = parse::extract_prediction(completion.text, config.schema);

        nlohmann::ordered_json prompt_line;
        prompt_line["sentence_id"] = sentence.id;
        prompt_line["text"] = bundle.text;
        artifacts[i].prompt_line = prompt_line.dump() + "\n";
        nlohmann::ordered_json output_line;
        output_line["sentence_id"] = sentence.id;
        output_line["text"] = completion.text;
        artifacts[i].output_line = output_line.dump() + "\n";
        if (predictions[i].status != parse::ParseStatus::clean) {
          nlohmann::ordered_json diag;
          diag["sentence_id"] = sentence.id;
          diag["parse_status"] = parse::to_string(predictions[i].status);
          std::string note;
          for (const auto& n : predictions[i].notes) {
            if (!note.empty()) note += "; ";
            note += n;
          }
          diag["note"] = note;
          diag["raw_excerpt"] = completion.text.substr(0, 200);
          artifacts[i].diagnostic_line = diag.dump() + "\n";
        }
      });

      std::map<std::string, parse::Prediction> preds;
      std::map<std::string, std::vector<corpus::GoldMention>> golds;
      for (size_t i = 0; i < test.size(); ++i) {
        preds.emplace(test[i].id, std::move(predictions[i]));
        golds.emplace(test[i].id, test[i].gold);
      }
      outcome.report = score::score_run(preds, golds, config.schema);
      outcome.ok = true;
      ok_reports.push_back(outcome.report);
      result.results_csv += csv_row(config, seed, outcome.report);

      if (!run_dir.empty()) {
        persist_seed(run_dir / ("seed-" + std::to_string(seed)), outcome, artifacts);
      }
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
    }
    result.seeds.push_back(std::move(outcome));
  }

  if (!ok_reports.empty()) result.mean = score::average_runs(ok_reports);

  if (!run_dir.empty()) {
    write_text_file_atomic(run_dir / "results.csv", result.results_csv);
    write_text_file_atomic(run_dir / "summary.md", summary_from_csv(result.results_csv));
    std::string errors;
    for (const auto& s : result.seeds) {
      if (!s.ok) {
        nlohmann::ordered_json e;
        e["seed"] = s.seed;
        e["error"] = s.error;
        errors += e.dump() + "\n";
      }
    }
    if (!errors.empty()) write_text_file_atomic(run_dir / "errors.jsonl", errors);
  }
  return result;
}

SweepGrid grid_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  SweepGrid grid;
  if (j.contains("base")) grid.base = config_from_json_obj(j["base"]);
  if (j.contains("methods")) {
    for (const auto& m : j["methods"]) {
      grid.methods.push_back(method_from_string(m.get<std::string>()));
    }
  }
  if (j.contains("a_values")) grid.a_values = j["a_values"].get<std::vector<int>>();
  if (j.contains("b_values")) grid.b_values = j["b_values"].get<std::vector<int>>();
  if (j.contains("tau_values")) grid.tau_values = j["tau_values"].get<std::vector<int>>();
  return grid;
}

std::vector<ExperimentConfig> expand_grid(const SweepGrid& grid) {
  std::vector<ExperimentConfig> configs;
  auto push = [&](Method m, int a, int b, int tau) {
    ExperimentConfig c = grid.base;
    c.method = m;
    c.points = a;
    c.shots = b;
    c.tau = tau;
    validate(c);
    configs.push_back(std::move(c));
  };
  for (Method m : grid.methods) {
    switch (m) {
      case Method::vanilla:
        push(m, 0, 0, 1);
        break;
      case Method::icl:
        for (int b : grid.b_values) push(m, 0, b, 1);
        break;
      case Method::picl_random:
      case Method::picl_cluster:
      case Method::picl_restricted:
        for (int a : grid.a_values) {
          for (int b : grid.b_values) push(m, a, b, 1);
        }
        break;
      case Method::picl_tau:
      case Method::picl_extend:
        for (int a : grid.a_values) {
          for (int b : grid.b_values) {
            for (int tau : grid.tau_values) push(m, a, b, tau);
          }
        }
        break;
    }
  }
  return configs;
}

SweepResult sweep(const SweepGrid& grid, const corpus::Dataset* dataset,
                  llm::ChatClient* client_override, embed::Encoder* encoder_override) {
  auto configs = expand_grid(grid);
  if (configs.empty()) throw std::invalid_argument("sweep: no methods configured");

  SweepResult result;
  std::filesystem::path sweep_dir;
  if (!grid.base.out_dir.empty()) {
    std::string all;
    for (const auto& c : configs) all += identity_json(c);
    sweep_dir = std::filesystem::path(grid.base.out_dir) /
                ("sweep-" + to_hex(fnv1a64(all)).substr(0, 8));
    std::filesystem::create_directories(sweep_dir);
    result.sweep_dir = sweep_dir.string();
  }

  result.results_csv = results_csv_header();
  for (auto& config : configs) {
    if (!sweep_dir.empty()) config.out_dir = sweep_dir.string();
    RunResult run = run_experiment(config, dataset, client_override, encoder_override);
    // strip the per-run header, keep the rows
    result.results_csv += run.results_csv.substr(results_csv_header().size());
    result.runs.push_back(std::move(run));
  }
  result.summary_md = summary_from_csv(result.results_csv);

  if (!sweep_dir.empty()) {
    write_text_file_atomic(sweep_dir / "results.csv", result.results_csv);
    write_text_file_atomic(sweep_dir / "summary.md", result.summary_md);
  }
  return result;
}

std::string summary_from_csv(const std::string& csv_text) {
  struct Acc {
    int count = 0;
    double p = 0, r = 0, f1 = 0, pf = 0;
  };
  std::vector<std::pair<std::vector<std::string>, Acc>> groups;  // key -> acc, insertion order

  const auto lines = split_lines(csv_text);
  for (size_t i = 1; i < lines.size(); ++i) {
    if (is_blank(lines[i])) continue;
    std::vector<std::string> fields;
    std::stringstream ss(lines[i]);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10) {
      throw std::runtime_error("results.csv row has " + std::to_string(fields.size()) +
                               " fields: " + lines[i]);
    }
    std::vector<std::string> key{fields[0], fields[1], fields[2], fields[3], fields[4]};
    Acc* acc = nullptr;
    for (auto& [k, a] : groups) {
      if (k == key) {
        acc = &a;
        break;
      }
    }
    if (!acc) {
      groups.emplace_back(std::move(key), Acc{});
      acc = &groups.back().second;
    }
    auto parse_double = [&](const std::string& field) {
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw std::runtime_error("results.csv has a non-numeric metric field: " + field);
      }
      return value;
    };
    ++acc->count;
    acc->p += parse_double(fields[6]);
    acc->r += parse_double(fields[7]);
    acc->f1 += parse_double(fields[8]);
    acc->pf += parse_double(fields[9]);
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, acc] : groups) {
    SummaryRow row;
    row.dataset = key[0];
    row.method = key[1];
    row.a = std::stoi(key[2]);
    row.b = std::stoi(key[3]);
    row.tau = std::stoi(key[4]);
    row.seeds = acc.count;
    row.precision = acc.p / acc.count;
    row.recall = acc.r / acc.count;
    row.f1 = acc.f1 / acc.count;
    row.parse_fail = acc.pf / acc.count;
    rows.push_back(std::move(row));
  }
  return render_summary(rows);
}

}  // namespace picl::runner
