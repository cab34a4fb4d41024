#include "picl/parse.hpp"

#include <unordered_set>

#include "json.hpp"
#include "picl/util.hpp"

namespace picl::parse {

namespace {

std::string strip_fence_lines(const std::string& text, bool& stripped) {
  stripped = false;
  if (text.find("```") == std::string::npos) return text;
  std::string out;
  out.reserve(text.size());
  for (const auto& line : split_lines(text)) {
    const std::string t = trim_copy(line);
    if (t.rfind("```", 0) == 0) {
      stripped = true;
      continue;
    }
    out += line;
    out += '\n';
  }
  return out;
}

/// Top-level {...} spans of the text, left to right. When string_aware is
/// set, braces inside double-quoted JSON strings are ignored; the naive pass
/// exists as a fallback for outputs whose surrounding prose unbalances the
/// quote state.
std::vector<std::string> balanced_regions(const std::string& text, bool string_aware) {
  std::vector<std::string> regions;
  int depth = 0;
  size_t start = 0;
  bool in_string = false;
  bool escaped = false;
  for (size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (string_aware && in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (string_aware && c == '"' && depth > 0) {
      in_string = true;
      continue;
    }
    if (c == '{') {
      if (depth == 0) start = i;
      ++depth;
    } else if (c == '}') {
      if (depth > 0) {
        --depth;
        if (depth == 0) regions.push_back(text.substr(start, i - start + 1));
      }
    }
  }
  return regions;
}

nlohmann::json last_parsable_object(const std::string& text, std::string* region_out) {
  for (bool string_aware : {true, false}) {
    auto regions = balanced_regions(text, string_aware);
    for (auto it = regions.rbegin(); it != regions.rend(); ++it) {
      nlohmann::json j = nlohmann::json::parse(*it, nullptr, false);
      if (!j.is_discarded() && j.is_object()) {
        *region_out = *it;
        return j;
      }
    }
  }
  return nlohmann::json();  // null: nothing found
}

}  // namespace

const char* to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::clean:
      return "clean";
    case ParseStatus::repaired:
      return "repaired";
    case ParseStatus::failed:
      return "failed";
  }
  return "unknown";
}

const std::vector<std::string>* Prediction::find(const std::string& type) const {
  for (const auto& [name, surfaces] : by_type) {
    if (name == type) return &surfaces;
  }
  return nullptr;
}

Prediction extract_prediction(const std::string& text,
                              const std::vector<corpus::EntityType>& schema) {
  Prediction pred;
  for (const auto& t : schema) pred.by_type.emplace_back(t.name, std::vector<std::string>{});

  try {
    bool fences_stripped = false;
    const std::string body = strip_fence_lines(text, fences_stripped);
    std::string region;
    nlohmann::json obj = last_parsable_object(body, &region);
    if (obj.is_null()) {
      pred.status = ParseStatus::failed;
      pred.notes.push_back("no parsable JSON object in output");
      return pred;
    }

    pred.status = (!fences_stripped && trim_copy(text) == region) ? ParseStatus::clean
                                                                  : ParseStatus::repaired;

    for (auto& [type_name, surfaces] : pred.by_type) {
      auto it = obj.find(type_name);
      if (it == obj.end()) continue;
      if (!it->is_array()) {
        pred.notes.push_back("value for key '" + type_name + "' is not an array; dropped");
        continue;
      }
      std::unordered_set<std::string> seen;
      for (const auto& item : *it) {
        if (!item.is_string()) {
          pred.notes.push_back("non-string item under key '" + type_name + "' dropped");
          continue;
        }
        std::string surface = trim_copy(item.get<std::string>());
        if (surface.empty()) continue;
        if (seen.insert(surface).second) surfaces.push_back(std::move(surface));
      }
    }
    for (const auto& [key, value] : obj.items()) {
      (void)value;
      if (!corpus::schema_has(schema, key)) {
        pred.notes.push_back("unknown key '" + key + "' dropped");
      }
    }
  } catch (...) {
    // extraction is contractually total: anything unexpected is a failed parse
    pred.status = ParseStatus::failed;
    for (auto& [name, surfaces] : pred.by_type) surfaces.clear();
    pred.notes.push_back("internal extraction error");
  }
  return pred;
}

}  // namespace picl::parse
