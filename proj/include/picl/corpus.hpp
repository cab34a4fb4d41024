#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace picl::corpus {

struct EntityType {
  std::string name;
  std::string description;
};

struct GoldMention {
  std::string surface;
  std::string type;
};

struct Sentence {
  std::string id;
  std::string text;
  std::vector<GoldMention> gold;
};

struct Dataset {
  std::string name;
  std::vector<EntityType> schema;
  std::vector<Sentence> train;
  std::vector<Sentence> test;
};

/// Unique training surfaces of one type, in first-occurrence order.
/// Comparison is case-sensitive after leading/trailing whitespace trim.
struct EntityPool {
  std::string type;
  std::vector<std::string> entities;
};

/// An (input sentence, canonical JSON output) pair placed in a prompt.
struct Demonstration {
  std::string input;
  std::string output;
};

struct SplitStats {
  size_t sentences = 0;
  size_t unique_entities = 0;  // summed over types
};

struct DatasetStats {
  SplitStats train;
  SplitStats test;
};

struct BioParseResult {
  std::vector<Sentence> sentences;
  std::vector<std::string> warnings;
};

std::vector<EntityType> schema_from_names(const std::vector<std::string>& names);
bool schema_has(const std::vector<EntityType>& schema, const std::string& name);

/// BIO importer. Lines are whitespace-separated columns; the token is the
/// first column and the tag the last, so both two-column files and the
/// four-column CoNLL layout ingest. Tags are O / B-X / I-X with X in the
/// schema. Blank lines delimit sentences; -DOCSTART- marker sentences are
/// skipped. An I-X with no open X run is repaired to B-X and recorded as a
/// warning.
BioParseResult parse_bio(std::istream& in, const std::vector<EntityType>& schema,
                         const std::string& id_prefix = "s");

/// Scans a BIO stream for the set of entity types it uses (first-occurrence
/// order). Convenience for the CLI; parse_bio itself requires a schema.
std::vector<EntityType> infer_bio_schema(std::istream& in);

/// Per type (schema order), the deduplicated gold surfaces of the split in
/// first-occurrence order.
std::vector<EntityPool> unique_entities(const std::vector<Sentence>& split,
                                        const std::vector<EntityType>& schema);

const EntityPool* find_pool(const std::vector<EntityPool>& pools, const std::string& type);

DatasetStats stats(const Dataset& dataset);

/// Uniform sample of k sentences without replacement, deterministic per seed.
/// Outputs are rendered with prompt::serialize_output over the given schema.
std::vector<Demonstration> sample_demonstrations(const std::vector<Sentence>& train, size_t k,
                                                 uint64_t seed,
                                                 const std::vector<EntityType>& schema);

/// JSONL interchange: one {"id", "text", "gold": [{"surface", "type"}]} object
/// per line. Surfaces are trimmed on read; an empty surface or (when a schema
/// is supplied) an unknown type is an error.
std::vector<Sentence> read_jsonl(std::istream& in, const std::vector<EntityType>* schema = nullptr);
void write_jsonl(std::ostream& out, const std::vector<Sentence>& split);

/// Validates schema uniqueness, per-split id uniqueness, train/test id
/// disjointness, and gold-type membership. Throws std::invalid_argument.
Dataset make_dataset(std::string name, std::vector<EntityType> schema,
                     std::vector<Sentence> train, std::vector<Sentence> test);

}  // namespace picl::corpus
