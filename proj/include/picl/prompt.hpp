#pragma once

#include <map>
#include <string>
#include <vector>

#include "picl/corpus.hpp"

namespace picl::prompt {

/// Template knobs. Defaults reproduce the standard prompt blocks byte for
/// byte; rendering is a pure function of the config and inputs.
struct PromptConfig {
  std::vector<corpus::EntityType> schema;
  std::string header_line =
      "Please list all named entities of the following entity types in the input sentence:";
  std::string format_line =
      "You should output your results in the format {\"type\": [entity]} as a json.";
};

using PointMap = std::map<std::string, std::vector<std::string>>;

struct PromptBundle {
  std::string text;
  std::vector<corpus::Demonstration> demos_used;
  std::vector<std::pair<std::string, std::vector<std::string>>> points_used;  // schema order
  std::string input_sentence_id;
  std::vector<std::string> warnings;
};

/// Canonical prediction string: one key per schema type in schema order,
/// values deduplicated surfaces in first-occurrence order, empty lists for
/// absent types, compact rendering.
std::string serialize_output(const std::vector<corpus::GoldMention>& gold,
                             const std::vector<corpus::EntityType>& schema);

PromptBundle build_vanilla(const PromptConfig& config, const std::string& input_text,
                           const std::string& input_id = "");

/// Few-shot variant; demos must be non-empty (use build_vanilla otherwise).
PromptBundle build_icl(const PromptConfig& config, const std::vector<corpus::Demonstration>& demos,
                       const std::string& input_text, const std::string& input_id = "");

/// Point-entity variant: each type line carries "e.g." examples. A type with
/// no points degenerates to the bare list line and records a warning; all
/// lists empty renders byte-identically to build_icl.
PromptBundle build_picl(const PromptConfig& config, const PointMap& points,
                        const std::vector<corpus::Demonstration>& demos,
                        const std::string& input_text, const std::string& input_id = "");

}  // namespace picl::prompt
