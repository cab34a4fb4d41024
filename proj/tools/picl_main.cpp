// picl: point-entity in-context-learning harness for LLM-based NER.
//
// Subcommands: ingest (BIO -> JSONL), stats, pools, select, run, sweep,
// report. Experiment configs are JSON documents; see README.md.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "picl/corpus.hpp"
#include "picl/embed.hpp"
#include "picl/runner.hpp"
#include "picl/select.hpp"
#include "picl/util.hpp"

namespace {

using namespace picl;

std::vector<corpus::EntityType> parse_types_flag(const std::string& csv) {
  std::vector<std::string> names;
  std::stringstream ss(csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    name = trim_copy(name);
    if (!name.empty()) names.push_back(name);
  }
  return corpus::schema_from_names(names);
}

std::vector<corpus::EntityType> infer_types_from_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  auto split = corpus::read_jsonl(in);
  std::vector<corpus::EntityType> schema;
  for (const auto& s : split) {
    for (const auto& m : s.gold) {
      if (!corpus::schema_has(schema, m.type)) schema.push_back({m.type, ""});
    }
  }
  return schema;
}

std::vector<corpus::Sentence> load_split(const std::string& path,
                                         const std::vector<corpus::EntityType>& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return corpus::read_jsonl(in, &schema);
}

int cmd_ingest(const std::string& in_path, const std::string& out_path, const std::string& types,
               const std::string& id_prefix) {
  std::vector<corpus::EntityType> schema;
  if (!types.empty()) {
    schema = parse_types_flag(types);
  } else {
    std::ifstream probe(in_path);
    if (!probe) throw std::runtime_error("cannot open " + in_path);
    schema = corpus::infer_bio_schema(probe);
    std::cerr << "inferred " << schema.size() << " entity types from tags\n";
  }
  std::ifstream in(in_path);
  if (!in) throw std::runtime_error("cannot open " + in_path);
  auto parsed = corpus::parse_bio(in, schema, id_prefix);
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << "\n";
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  corpus::write_jsonl(out, parsed.sentences);
  std::cout << parsed.sentences.size() << " sentences -> " << out_path << " ("
            << parsed.warnings.size() << " warnings)\n";
  return 0;
}

int cmd_stats(const std::string& train_path, const std::string& test_path,
              const std::string& types) {
  auto schema = types.empty() ? infer_types_from_jsonl(train_path) : parse_types_flag(types);
  corpus::Dataset dataset;
  dataset.schema = schema;
  dataset.train = load_split(train_path, schema);
  dataset.test = load_split(test_path, schema);
  const auto st = corpus::stats(dataset);
  std::cout << "split  sentences  unique_entities\n";
  std::cout << "train  " << st.train.sentences << "  " << st.train.unique_entities << "\n";
  std::cout << "test   " << st.test.sentences << "  " << st.test.unique_entities << "\n";
  return 0;
}

int cmd_pools(const std::string& split_path, const std::string& types, const std::string& out) {
  auto schema = types.empty() ? infer_types_from_jsonl(split_path) : parse_types_flag(types);
  auto split = load_split(split_path, schema);
  auto pools = corpus::unique_entities(split, schema);
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& pool : pools) {
    std::cout << pool.type << ": " << pool.entities.size() << " unique entities\n";
    j[pool.type] = pool.entities;
  }
  if (!out.empty()) {
    write_text_file_atomic(out, j.dump(2));
    std::cout << "pools -> " << out << "\n";
  }
  return 0;
}

int cmd_select(const std::string& split_path, const std::string& types, const std::string& method,
               int a, int tau, uint64_t seed, const std::string& encoder_kind, size_t dim,
               const std::string& url, const std::string& model, const std::string& api_key_env,
               const std::string& cache_dir, int restarts, const std::string& out_dir) {
  auto schema = types.empty() ? infer_types_from_jsonl(split_path) : parse_types_flag(types);
  auto split = load_split(split_path, schema);
  auto pools = corpus::unique_entities(split, schema);

  std::unique_ptr<embed::Encoder> encoder;
  if (method != "random") {
    runner::EncoderSpec spec;
    spec.kind = encoder_kind;
    spec.dim = dim;
    spec.url = url;
    spec.model = model;
    spec.api_key_env = api_key_env;
    if (spec.kind == "test") {
      encoder = embed::make_test_encoder(spec.dim);
    } else {
      embed::RemoteEncoderConfig cfg;
      cfg.url = spec.url;
      cfg.model = spec.model;
      cfg.dim = spec.dim;
      if (!spec.api_key_env.empty()) {
        if (const char* key = std::getenv(spec.api_key_env.c_str())) cfg.api_key = key;
      }
      encoder = embed::make_remote_encoder(std::move(cfg));
    }
  }
  embed::EmbeddingCache cache = cache_dir.empty()
                                    ? embed::EmbeddingCache()
                                    : embed::EmbeddingCache(std::filesystem::path(cache_dir));

  std::filesystem::create_directories(out_dir);
  for (const auto& pool : pools) {
    select::PointSelection sel;
    if (method == "random") {
      sel = select::select_points_random(pool, a, seed);
    } else if (method == "cluster") {
      sel = select::select_points(pool, *encoder, a, seed, &cache, restarts);
    } else if (method == "tau") {
      sel = select::select_points_tau(pool, *encoder, a, tau, seed, &cache, restarts);
    } else {
      throw std::runtime_error("unknown selection method '" + method + "'");
    }
    for (const auto& w : sel.warnings) std::cerr << "warning: " << w << "\n";
    const auto path = std::filesystem::path(out_dir) / (pool.type + ".json");
    write_text_file_atomic(path, select::selection_to_json(sel));
    std::cout << pool.type << ": " << sel.points.size() << " points -> " << path.string() << "\n";
  }
  return 0;
}

int cmd_run(const std::string& config_path) {
  auto config = runner::config_from_json(read_text_file(config_path));
  auto result = runner::run_experiment(config);
  for (const auto& s : result.seeds) {
    if (!s.ok) std::cerr << "seed " << s.seed << " failed: " << s.error << "\n";
  }
  std::cout << runner::summary_from_csv(result.results_csv);
  std::cout << "mean F1 " << format_double(result.mean.f1, 4);
  if (!result.run_dir.empty()) std::cout << "  (artifacts: " << result.run_dir << ")";
  std::cout << "\n";
  const bool all_ok = std::all_of(result.seeds.begin(), result.seeds.end(),
                                  [](const auto& s) { return s.ok; });
  return all_ok ? 0 : 1;
}

int cmd_sweep(const std::string& config_path) {
  auto grid = runner::grid_from_json(read_text_file(config_path));
  auto result = runner::sweep(grid);
  std::cout << result.summary_md;
  if (!result.sweep_dir.empty()) std::cout << "artifacts: " << result.sweep_dir << "\n";
  for (const auto& run : result.runs) {
    for (const auto& s : run.seeds) {
      if (!s.ok) {
        std::cerr << runner::to_string(run.config.method) << " seed " << s.seed
                  << " failed: " << s.error << "\n";
      }
    }
  }
  return 0;
}

int cmd_report(const std::string& csv_path, const std::string& out_path) {
  const std::string summary = runner::summary_from_csv(read_text_file(csv_path));
  if (out_path.empty()) {
    std::cout << summary;
  } else {
    write_text_file_atomic(out_path, summary);
    std::cout << "summary -> " << out_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-entity ICL harness for LLM-based named entity recognition"};
  app.require_subcommand(1);

  std::string in_path, out_path, types, id_prefix = "s";
  auto* ingest = app.add_subcommand("ingest", "convert a BIO file to JSONL");
  ingest->add_option("--in", in_path, "BIO input file")->required();
  ingest->add_option("--out", out_path, "JSONL output file")->required();
  ingest->add_option("--types", types, "comma-separated entity types (default: infer)");
  ingest->add_option("--id-prefix", id_prefix, "sentence id prefix");

  std::string train_path, test_path;
  auto* stats = app.add_subcommand("stats", "sentence / unique-entity counts per split");
  stats->add_option("--train", train_path, "train JSONL")->required();
  stats->add_option("--test", test_path, "test JSONL")->required();
  stats->add_option("--types", types, "comma-separated entity types (default: infer)");

  std::string split_path, pools_out;
  auto* pools = app.add_subcommand("pools", "per-type unique entity pools of a split");
  pools->add_option("--split", split_path, "JSONL split")->required();
  pools->add_option("--types", types, "comma-separated entity types (default: infer)");
  pools->add_option("--out", pools_out, "write pools JSON here");

  std::string method = "cluster", encoder_kind = "test", url, model, api_key_env, cache_dir;
  std::string sel_out_dir = "selections";
  int a = 5, tau = 1, restarts = 1;
  uint64_t seed = 1;
  size_t dim = 64;
  auto* sel = app.add_subcommand("select", "pick point entities per type from a train split");
  sel->add_option("--split", split_path, "train JSONL")->required();
  sel->add_option("--types", types, "comma-separated entity types (default: infer)");
  sel->add_option("--method", method, "cluster | random | tau");
  sel->add_option("--a", a, "point entities per type");
  sel->add_option("--tau", tau, "entities per cluster center (method=tau)");
  sel->add_option("--seed", seed, "selection seed");
  sel->add_option("--encoder", encoder_kind, "test | remote");
  sel->add_option("--dim", dim, "test encoder dimension / expected remote width");
  sel->add_option("--url", url, "remote embeddings endpoint");
  sel->add_option("--model", model, "remote embeddings model");
  sel->add_option("--api-key-env", api_key_env, "env var holding the bearer token");
  sel->add_option("--cache-dir", cache_dir, "embedding cache directory");
  sel->add_option("--restarts", restarts, "k-means restarts");
  sel->add_option("--out-dir", sel_out_dir, "output directory (one JSON per type)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "run one experiment from a config file");
  run->add_option("--config", config_path, "experiment config JSON")->required();

  auto* sweep = app.add_subcommand("sweep", "expand a grid config and run every cell");
  sweep->add_option("--config", config_path, "grid config JSON")->required();

  std::string csv_path, report_out;
  auto* report = app.add_subcommand("report", "aggregate a results.csv into a summary table");
  report->add_option("--csv", csv_path, "results.csv path")->required();
  report->add_option("--out", report_out, "write summary here (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(in_path, out_path, types, id_prefix);
    if (stats->parsed()) return cmd_stats(train_path, test_path, types);
    if (pools->parsed()) return cmd_pools(split_path, types, pools_out);
    if (sel->parsed()) {
      return cmd_select(split_path, types, method, a, tau, seed, encoder_kind, dim, url, model,
                        api_key_env, cache_dir, restarts, sel_out_dir);
    }
    if (run->parsed()) return cmd_run(config_path);
    if (sweep->parsed()) return cmd_sweep(config_path);
    if (report->parsed()) return cmd_report(csv_path, report_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
