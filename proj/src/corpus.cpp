#include "picl/corpus.hpp"

#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "picl/prompt.hpp"
#include "picl/rng.hpp"
#include "picl/util.hpp"

namespace picl::corpus {

namespace {

constexpr const char* kDocStart = "-DOCSTART-";

struct TagRef {
  char prefix = 'O';  // 'O', 'B' or 'I'
  std::string type;
};

TagRef parse_tag(const std::string& tag, const std::vector<EntityType>& schema, size_t line_no) {
  if (tag == "O") return {};
  if (tag.size() < 3 || (tag[0] != 'B' && tag[0] != 'I') || tag[1] != '-') {
    throw std::runtime_error("line " + std::to_string(line_no) + ": malformed tag '" + tag + "'");
  }
  TagRef ref{tag[0], tag.substr(2)};
  if (!schema_has(schema, ref.type)) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": unknown entity type '" +
                             ref.type + "'");
  }
  return ref;
}

std::string join_tokens(const std::vector<std::string>& tokens, size_t from, size_t to) {
  std::string out;
  for (size_t i = from; i < to; ++i) {
    if (i > from) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace

std::vector<EntityType> schema_from_names(const std::vector<std::string>& names) {
  std::vector<EntityType> schema;
  schema.reserve(names.size());
  for (const auto& n : names) schema.push_back({n, ""});
  return schema;
}

bool schema_has(const std::vector<EntityType>& schema, const std::string& name) {
  for (const auto& t : schema) {
    if (t.name == name) return true;
  }
  return false;
}

BioParseResult parse_bio(std::istream& in, const std::vector<EntityType>& schema,
                         const std::string& id_prefix) {
  BioParseResult result;
  std::vector<std::string> tokens;
  std::vector<TagRef> tags;
  size_t line_no = 0;
  size_t sentence_index = 0;
  bool doc_marker = false;

  auto flush = [&]() {
    if (!tokens.empty() && !doc_marker) {
      Sentence s;
      s.id = id_prefix + "-" + std::to_string(sentence_index++);
      s.text = join_tokens(tokens, 0, tokens.size());
      size_t i = 0;
      while (i < tokens.size()) {
        if (tags[i].prefix == 'O') {
          ++i;
          continue;
        }
        const std::string& type = tags[i].type;
        size_t j = i + 1;
        while (j < tokens.size() && tags[j].prefix == 'I' && tags[j].type == type) ++j;
        s.gold.push_back({join_tokens(tokens, i, j), type});
        i = j;
      }
      result.sentences.push_back(std::move(s));
    }
    tokens.clear();
    tags.clear();
    doc_marker = false;
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      flush();
      continue;
    }
    const auto fields = split_ws(line);
    if (fields.size() < 2) {
      if (fields.size() == 1 && fields[0] == kDocStart) {
        doc_marker = true;
        continue;
      }
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": expected 'token<sep>tag', got '" + line + "'");
    }
    if (fields.front() == kDocStart) {
      doc_marker = true;
      continue;
    }
    TagRef ref = parse_tag(fields.back(), schema, line_no);
    if (ref.prefix == 'I') {
      const bool has_opener =
          !tags.empty() && tags.back().prefix != 'O' && tags.back().type == ref.type;
      if (!has_opener) {
        result.warnings.push_back("line " + std::to_string(line_no) + ": I-" + ref.type +
                                  " without opener, treated as B-" + ref.type);
        ref.prefix = 'B';
      }
    }
    tokens.push_back(fields.front());
    tags.push_back(std::move(ref));
  }
  flush();
  return result;
}

std::vector<EntityType> infer_bio_schema(std::istream& in) {
  std::vector<EntityType> schema;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    const auto fields = split_ws(line);
    if (fields.size() < 2) continue;
    const std::string& tag = fields.back();
    if (tag.size() >= 3 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') {
      std::string type = tag.substr(2);
      if (seen.insert(type).second) schema.push_back({type, ""});
    }
  }
  return schema;
}

std::vector<EntityPool> unique_entities(const std::vector<Sentence>& split,
                                        const std::vector<EntityType>& schema) {
  std::vector<EntityPool> pools;
  pools.reserve(schema.size());
  std::unordered_map<std::string, size_t> index;
  for (const auto& t : schema) {
    index[t.name] = pools.size();
    pools.push_back({t.name, {}});
  }
  std::vector<std::unordered_set<std::string>> seen(schema.size());
  for (const auto& s : split) {
    for (const auto& m : s.gold) {
      auto it = index.find(m.type);
      if (it == index.end()) continue;
      std::string surface = trim_copy(m.surface);
      if (surface.empty()) continue;
      if (seen[it->second].insert(surface).second) {
        pools[it->second].entities.push_back(std::move(surface));
      }
    }
  }
  return pools;
}

const EntityPool* find_pool(const std::vector<EntityPool>& pools, const std::string& type) {
  for (const auto& p : pools) {
    if (p.type == type) return &p;
  }
  return nullptr;
}

DatasetStats stats(const Dataset& dataset) {
  auto split_stats = [&](const std::vector<Sentence>& split) {
    SplitStats s;
    s.sentences = split.size();
    for (const auto& pool : unique_entities(split, dataset.schema)) {
      s.unique_entities += pool.entities.size();
    }
    return s;
  };
  return {split_stats(dataset.train), split_stats(dataset.test)};
}

std::vector<Demonstration> sample_demonstrations(const std::vector<Sentence>& train, size_t k,
                                                 uint64_t seed,
                                                 const std::vector<EntityType>& schema) {
  if (k > train.size()) {
    throw std::invalid_argument("sample_demonstrations: k=" + std::to_string(k) +
                                " exceeds train size " + std::to_string(train.size()));
  }
  Rng rng(seed);
  std::vector<Demonstration> demos;
  demos.reserve(k);
  for (size_t idx : rng.sample_indices(train.size(), k)) {
    const Sentence& s = train[idx];
    demos.push_back({s.text, prompt::serialize_output(s.gold, schema)});
  }
  return demos;
}

std::vector<Sentence> read_jsonl(std::istream& in, const std::vector<EntityType>* schema) {
  std::vector<Sentence> split;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw std::runtime_error("jsonl line " + std::to_string(line_no) + ": not a JSON object");
    }
    Sentence s;
    s.id = j.value("id", "");
    s.text = j.value("text", "");
    if (s.id.empty()) {
      throw std::runtime_error("jsonl line " + std::to_string(line_no) + ": missing id");
    }
    if (j.contains("gold")) {
      for (const auto& g : j.at("gold")) {
        GoldMention m;
        m.surface = trim_copy(g.value("surface", ""));
        m.type = g.value("type", "");
        if (m.surface.empty()) {
          throw std::runtime_error("sentence " + s.id + ": empty gold surface");
        }
        if (schema && !schema_has(*schema, m.type)) {
          throw std::runtime_error("sentence " + s.id + ": unknown entity type '" + m.type + "'");
        }
        s.gold.push_back(std::move(m));
      }
    }
    split.push_back(std::move(s));
  }
  return split;
}

void write_jsonl(std::ostream& out, const std::vector<Sentence>& split) {
  for (const auto& s : split) {
    nlohmann::ordered_json j;
    j["id"] = s.id;
    j["text"] = s.text;
    auto gold = nlohmann::ordered_json::array();
    for (const auto& m : s.gold) {
      gold.push_back({{"surface", m.surface}, {"type", m.type}});
    }
    j["gold"] = std::move(gold);
    out << j.dump() << '\n';
  }
}

Dataset make_dataset(std::string name, std::vector<EntityType> schema,
                     std::vector<Sentence> train, std::vector<Sentence> test) {
  std::unordered_set<std::string> type_names;
  for (const auto& t : schema) {
    if (t.name.empty() || t.name.find('\n') != std::string::npos) {
      throw std::invalid_argument("entity type name must be non-empty and single-line");
    }
    if (!type_names.insert(t.name).second) {
      throw std::invalid_argument("duplicate entity type '" + t.name + "'");
    }
  }
  auto check_split = [&](const std::vector<Sentence>& split, const char* which,
                         std::unordered_set<std::string>& ids) {
    for (const auto& s : split) {
      if (!ids.insert(s.id).second) {
        throw std::invalid_argument(std::string(which) + ": duplicate sentence id '" + s.id + "'");
      }
      if (s.text.find('\n') != std::string::npos) {
        throw std::invalid_argument("sentence " + s.id +
                                    ": text must be single-line for prompt rendering");
      }
      for (const auto& m : s.gold) {
        if (!type_names.count(m.type)) {
          throw std::invalid_argument("sentence " + s.id + ": gold type '" + m.type +
                                      "' not in schema");
        }
        if (trim_copy(m.surface).empty()) {
          throw std::invalid_argument("sentence " + s.id + ": empty gold surface");
        }
      }
    }
  };
  std::unordered_set<std::string> train_ids, test_ids;
  check_split(train, "train", train_ids);
  check_split(test, "test", test_ids);
  for (const auto& id : test_ids) {
    if (train_ids.count(id)) {
      throw std::invalid_argument("sentence id '" + id + "' appears in both train and test");
    }
  }
  return Dataset{std::move(name), std::move(schema), std::move(train), std::move(test)};
}

}  // namespace picl::corpus
