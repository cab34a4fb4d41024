#include "picl/prompt.hpp"

#include <stdexcept>
#include <unordered_set>

#include "json.hpp"
#include "picl/util.hpp"

namespace picl::prompt {

namespace {

void render_type_lines(std::string& out, const PromptConfig& config, const PointMap* points,
                       std::vector<std::string>* warnings) {
  for (const auto& t : config.schema) {
    out += "- " + t.name;
    if (points) {
      auto it = points->find(t.name);
      if (it != points->end() && !it->second.empty()) {
        out += ": e.g. ";
        for (size_t i = 0; i < it->second.size(); ++i) {
          if (i > 0) out += ", ";
          out += it->second[i];
        }
      } else if (warnings) {
        warnings->push_back("type " + t.name + " has no point entities");
      }
    }
    out += '\n';
  }
}

void render_examples(std::string& out, const std::vector<corpus::Demonstration>& demos) {
  if (demos.empty()) return;
  out += "Here are some examples:\n";
  for (const auto& d : demos) {
    out += "Input: " + d.input + '\n';
    out += "Output: " + d.output + '\n';
  }
}

void render_tail(std::string& out, const PromptConfig& config, const std::string& input_text) {
  out += config.format_line + '\n';
  out += "Input: " + input_text;
}

void require_schema(const PromptConfig& config) {
  if (config.schema.empty()) {
    throw std::invalid_argument("prompt rendering requires a non-empty schema");
  }
}

}  // namespace

std::string serialize_output(const std::vector<corpus::GoldMention>& gold,
                             const std::vector<corpus::EntityType>& schema) {
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (const auto& t : schema) {
    auto arr = nlohmann::ordered_json::array();
    std::unordered_set<std::string> seen;
    for (const auto& m : gold) {
      if (m.type != t.name) continue;
      std::string surface = trim_copy(m.surface);
      if (surface.empty()) continue;
      if (seen.insert(surface).second) arr.push_back(std::move(surface));
    }
    obj[t.name] = std::move(arr);
  }
  return obj.dump();
}

PromptBundle build_vanilla(const PromptConfig& config, const std::string& input_text,
                           const std::string& input_id) {
  require_schema(config);
  PromptBundle bundle;
  bundle.input_sentence_id = input_id;
  bundle.text = config.header_line + '\n';
  render_type_lines(bundle.text, config, nullptr, nullptr);
  render_tail(bundle.text, config, input_text);
  return bundle;
}

PromptBundle build_icl(const PromptConfig& config, const std::vector<corpus::Demonstration>& demos,
                       const std::string& input_text, const std::string& input_id) {
  require_schema(config);
  if (demos.empty()) {
    throw std::invalid_argument("build_icl requires at least one demonstration");
  }
  PromptBundle bundle;
  bundle.input_sentence_id = input_id;
  bundle.demos_used = demos;
  bundle.text = config.header_line + '\n';
  render_type_lines(bundle.text, config, nullptr, nullptr);
  render_examples(bundle.text, demos);
  render_tail(bundle.text, config, input_text);
  return bundle;
}

PromptBundle build_picl(const PromptConfig& config, const PointMap& points,
                        const std::vector<corpus::Demonstration>& demos,
                        const std::string& input_text, const std::string& input_id) {
  require_schema(config);
  PromptBundle bundle;
  bundle.input_sentence_id = input_id;
  bundle.demos_used = demos;
  for (const auto& t : config.schema) {
    auto it = points.find(t.name);
    bundle.points_used.emplace_back(t.name, it == points.end() ? std::vector<std::string>{}
                                                               : it->second);
  }
  bundle.text = config.header_line + '\n';
  render_type_lines(bundle.text, config, &points, &bundle.warnings);
  render_examples(bundle.text, demos);
  render_tail(bundle.text, config, input_text);
  return bundle;
}

}  // namespace picl::prompt
