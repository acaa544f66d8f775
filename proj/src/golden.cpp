#include "cyscale/golden.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cyscale/execution.hpp"

namespace cyscale {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<GoldenCase> load_golden_corpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read golden corpus " + path.string());
  const auto doc = json::parse(in);
  std::vector<GoldenCase> cases;
  for (const auto& item : doc.at("cases")) {
    GoldenCase c;
    c.dataset = item.at("dataset").get<std::string>();
    c.query = item.at("query").get<std::string>();
    const auto name = item.at("expected").get<std::string>();
    const auto cls = message_class_from_string(name);
    if (!cls) throw std::runtime_error("golden corpus: unknown class '" + name + "'");
    c.expected = *cls;
    c.shape = item.value("shape", std::string());
    cases.push_back(std::move(c));
  }
  return cases;
}

std::map<std::string, std::shared_ptr<const GraphSchema>> load_schema_dir(const fs::path& dir) {
  std::map<std::string, std::shared_ptr<const GraphSchema>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    auto schema = std::make_shared<const GraphSchema>(GraphSchema::load(entry.path()));
    const auto id = schema->dataset_id();
    if (!out.emplace(id, std::move(schema)).second) {
      throw SchemaError("dataset '" + id + "' is declared twice in " + dir.string());
    }
  }
  return out;
}

std::vector<GoldenMismatch> check_golden(const std::vector<GoldenCase>& cases,
                                         const std::map<std::string, std::shared_ptr<const GraphSchema>>& schemas) {
  std::vector<GoldenMismatch> mismatches;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const auto it = schemas.find(c.dataset);
    if (it == schemas.end()) throw std::runtime_error("golden case " + std::to_string(i) + ": unknown dataset '" + c.dataset + "'");
    const auto outcome = execute(c.query, EmbeddedTarget{it->second});
    if (outcome.message().cls != c.expected) {
      mismatches.push_back(GoldenMismatch{i, c, outcome.message().cls, outcome.message().detail});
    }
  }
  return mismatches;
}

}  // namespace cyscale
