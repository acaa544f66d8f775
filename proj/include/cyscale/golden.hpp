#pragma once

// Golden-labelled validator corpus: queries paired with the message class
// the embedded executor must report for them.

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cyscale/metrics.hpp"
#include "cyscale/schema.hpp"

namespace cyscale {

struct GoldenCase {
  std::string dataset;
  std::string query;
  MessageClass expected = MessageClass::Success;
  std::string shape;
};

struct GoldenMismatch {
  std::size_t index = 0;
  GoldenCase golden;
  MessageClass actual = MessageClass::Success;
  std::string detail;
};

std::vector<GoldenCase> load_golden_corpus(const std::filesystem::path& path);

/// Loads every *.json schema in `dir`, keyed by dataset id.
std::map<std::string, std::shared_ptr<const GraphSchema>> load_schema_dir(const std::filesystem::path& dir);

std::vector<GoldenMismatch> check_golden(const std::vector<GoldenCase>& cases,
                                         const std::map<std::string, std::shared_ptr<const GraphSchema>>& schemas);

}  // namespace cyscale
