#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cyscale {

enum class ValueKind { String, Integer, Float, Boolean, Date };

std::string_view to_string(ValueKind kind);
std::optional<ValueKind> value_kind_from_string(std::string_view name);

using PropertyMap = std::map<std::string, ValueKind>;

struct RelationshipType {
  /// Allowed (source label, target label) pairs, in declaration order.
  std::vector<std::pair<std::string, std::string>> pairs;
  PropertyMap properties;

  bool allows(std::string_view source, std::string_view target) const;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Property-graph schema: labels with property maps, relationship types
/// with endpoint constraints. Names are case-sensitive.
class GraphSchema {
 public:
  GraphSchema() = default;
  GraphSchema(std::string dataset_id, std::map<std::string, PropertyMap> labels,
              std::map<std::string, RelationshipType> relationships);

  static GraphSchema from_json(std::string_view text);
  static GraphSchema load(const std::filesystem::path& path);
  std::string to_json() const;

  const std::string& dataset_id() const { return dataset_id_; }
  const std::map<std::string, PropertyMap>& labels() const { return labels_; }
  const std::map<std::string, RelationshipType>& relationships() const { return relationships_; }

  bool has_label(std::string_view name) const;
  bool has_relationship(std::string_view name) const;
  const PropertyMap* label_properties(std::string_view name) const;
  const RelationshipType* relationship(std::string_view name) const;
  /// True when any label or relationship type declares `key`.
  bool declares_property(std::string_view key) const;

  friend bool operator==(const GraphSchema&, const GraphSchema&) = default;

 private:
  void check() const;

  std::string dataset_id_;
  std::map<std::string, PropertyMap> labels_;
  std::map<std::string, RelationshipType> relationships_;
};

}  // namespace cyscale
