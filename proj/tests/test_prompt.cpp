#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "picl/parse.hpp"
#include "picl/prompt.hpp"
#include "picl/util.hpp"

using namespace picl;
using corpus::Demonstration;
using corpus::GoldMention;

namespace {

prompt::PromptConfig conll_config() {
  prompt::PromptConfig config;
  config.schema = corpus::schema_from_names({"PER", "ORG", "LOC", "MISC"});
  return config;
}

const std::string kQuery =
    "Japan began the defence of their Asian Cup title with a lucky 2-1 win against Syria in a "
    "Group C championship match on Friday .";

std::vector<Demonstration> golden_demos() {
  return {
      {"EU rejects German call to boycott British lamb .",
       R"({"PER":[],"ORG":["EU"],"LOC":[],"MISC":["German","British"]})"},
      {"Peter Blackburn", R"({"PER":["Peter Blackburn"],"ORG":[],"LOC":[],"MISC":[]})"},
  };
}

prompt::PointMap golden_points() {
  return {
      {"PER", {"Clinton", "Dole", "Arafat", "Yeltsin", "Dutroux"}},
      {"ORG", {"Reuters", "U.N.", "OSCE", "NATO", "Ajax"}},
      {"LOC", {"London", "China", "California", "U.S.", "Germany"}},
      {"MISC", {"Russian", "German", "French", "British", "Iraqi"}},
  };
}

std::string golden(const std::string& name) {
  return read_text_file(std::filesystem::path(PICL_GOLDEN_DIR) / name);
}

}  // namespace

TEST_CASE("serialize_output canonical form") {
  auto schema = corpus::schema_from_names({"PER", "LOC"});
  CHECK(prompt::serialize_output({{"John", "PER"}}, schema) == R"({"PER":["John"],"LOC":[]})");
  CHECK(prompt::serialize_output({}, schema) == R"({"PER":[],"LOC":[]})");
  // duplicates collapse, first occurrence wins
  CHECK(prompt::serialize_output({{"Paris", "LOC"}, {"Paris", "LOC"}, {"Lyon", "LOC"}}, schema) ==
        R"({"PER":[],"LOC":["Paris","Lyon"]})");
  // key order follows the schema, not insertion or alphabet
  auto reversed = corpus::schema_from_names({"LOC", "PER"});
  CHECK(prompt::serialize_output({{"John", "PER"}}, reversed) == R"({"LOC":[],"PER":["John"]})");
}

TEST_CASE("build_vanilla matches the golden rendering byte for byte") {
  auto bundle = prompt::build_vanilla(conll_config(), kQuery);
  CHECK(bundle.text == golden("vanilla_conll2003.txt"));
  // byte-stability under repetition
  CHECK(prompt::build_vanilla(conll_config(), kQuery).text == bundle.text);
}

TEST_CASE("build_vanilla rejects an empty schema") {
  prompt::PromptConfig config;
  CHECK_THROWS(prompt::build_vanilla(config, "x"));
}

TEST_CASE("build_icl matches the golden rendering and keeps demo order") {
  auto bundle = prompt::build_icl(conll_config(), golden_demos(), kQuery);
  CHECK(bundle.text == golden("icl_conll2003.txt"));
  CHECK(bundle.demos_used.size() == 2);

  auto one = prompt::build_icl(conll_config(), {golden_demos()[0]}, kQuery);
  const auto pos_in = one.text.find("Input: EU rejects");
  const auto pos_out = one.text.find("Output: ");
  CHECK(pos_in != std::string::npos);
  CHECK(pos_out != std::string::npos);
  CHECK(pos_in < pos_out);

  CHECK_THROWS(prompt::build_icl(conll_config(), {}, kQuery));
}

TEST_CASE("build_picl matches the golden rendering") {
  auto bundle = prompt::build_picl(conll_config(), golden_points(), golden_demos(), kQuery);
  CHECK(bundle.text == golden("picl_conll2003.txt"));
  CHECK(bundle.warnings.empty());
  // every point appears verbatim
  for (const auto& [type, points] : golden_points()) {
    for (const auto& p : points) CHECK(bundle.text.find(p) != std::string::npos);
  }
}

TEST_CASE("build_picl with all-empty point lists degenerates to build_icl byte-exactly") {
  prompt::PointMap empty = {{"PER", {}}, {"ORG", {}}, {"LOC", {}}, {"MISC", {}}};
  auto picl = prompt::build_picl(conll_config(), empty, golden_demos(), kQuery);
  auto icl = prompt::build_icl(conll_config(), golden_demos(), kQuery);
  CHECK(picl.text == icl.text);
  CHECK(picl.warnings.size() == 4);  // one per pointless type
}

TEST_CASE("build_picl renders a bare type line when that type has no points") {
  prompt::PointMap partial = {{"PER", {"Clinton"}}};
  auto bundle = prompt::build_picl(conll_config(), partial, golden_demos(), kQuery);
  CHECK(bundle.text.find("- PER: e.g. Clinton\n") != std::string::npos);
  CHECK(bundle.text.find("- ORG\n") != std::string::npos);
  CHECK(bundle.warnings.size() == 3);
}

TEST_CASE("points containing commas are rendered verbatim") {
  prompt::PointMap points = {{"ORG", {"Smith, Jones & Co", "Acme"}}};
  auto bundle = prompt::build_picl(conll_config(), points, golden_demos(), kQuery);
  CHECK(bundle.text.find("- ORG: e.g. Smith, Jones & Co, Acme\n") != std::string::npos);
}

TEST_CASE("prompts carry exactly one Input line per demo plus the query line") {
  auto count_inputs = [](const std::string& text) {
    size_t count = 0;
    size_t from = 0;
    for (;;) {
      const size_t pos = text.find("Input: ", from);
      if (pos == std::string::npos) break;
      if (pos == 0 || text[pos - 1] == '\n') ++count;
      from = pos + 1;
    }
    return count;
  };
  CHECK(count_inputs(prompt::build_vanilla(conll_config(), kQuery).text) == 1);
  CHECK(count_inputs(prompt::build_icl(conll_config(), golden_demos(), kQuery).text) == 3);
  CHECK(count_inputs(
            prompt::build_picl(conll_config(), golden_points(), golden_demos(), kQuery).text) ==
        3);
}

TEST_CASE("serialize_output then extract_prediction is the identity") {
  auto dataset = testutil::make_synth_dataset();
  for (const auto& s : dataset.test) {
    const auto text = prompt::serialize_output(s.gold, dataset.schema);
    auto pred = parse::extract_prediction(text, dataset.schema);
    CHECK(pred.status == parse::ParseStatus::clean);
    CHECK(testutil::prediction_pairs(pred) == testutil::gold_pairs(s.gold));
  }
}
