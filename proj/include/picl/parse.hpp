#pragma once

#include <string>
#include <vector>

#include "picl/corpus.hpp"

namespace picl::parse {

enum class ParseStatus { clean, repaired, failed };

const char* to_string(ParseStatus s);

struct Prediction {
  /// One entry per schema type, in schema order; surfaces trimmed, non-empty,
  /// deduplicated. Types absent from the output map to empty lists.
  std::vector<std::pair<std::string, std::vector<std::string>>> by_type;
  ParseStatus status = ParseStatus::failed;
  std::vector<std::string> notes;

  const std::vector<std::string>* find(const std::string& type) const;
};

/// Best-effort extraction of a typed prediction from raw model output.
/// Strips code fences, locates the last balanced {...} region that parses as
/// JSON, and keeps only schema keys whose values are arrays of strings.
/// Status: clean when the whole output is exactly the object, repaired when
/// decoration was stripped, failed when no parsable object exists (then all
/// lists are empty). Never throws, whatever the input.
Prediction extract_prediction(const std::string& text,
                              const std::vector<corpus::EntityType>& schema);

}  // namespace picl::parse
