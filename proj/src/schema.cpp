#include "cyscale/schema.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cyscale {

using nlohmann::json;

std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::String: return "string";
    case ValueKind::Integer: return "integer";
    case ValueKind::Float: return "float";
    case ValueKind::Boolean: return "boolean";
    case ValueKind::Date: return "date";
  }
  return "string";
}

std::optional<ValueKind> value_kind_from_string(std::string_view name) {
  if (name == "string") return ValueKind::String;
  if (name == "integer") return ValueKind::Integer;
  if (name == "float") return ValueKind::Float;
  if (name == "boolean") return ValueKind::Boolean;
  if (name == "date") return ValueKind::Date;
  return std::nullopt;
}

bool RelationshipType::allows(std::string_view source, std::string_view target) const {
  for (const auto& [src, dst] : pairs) {
    if (src == source && dst == target) return true;
  }
  return false;
}

GraphSchema::GraphSchema(std::string dataset_id, std::map<std::string, PropertyMap> labels,
                         std::map<std::string, RelationshipType> relationships)
    : dataset_id_(std::move(dataset_id)),
      labels_(std::move(labels)),
      relationships_(std::move(relationships)) {
  check();
}

void GraphSchema::check() const {
  if (dataset_id_.empty()) throw SchemaError("schema: dataset_id must be non-empty");
  for (const auto& [name, rel] : relationships_) {
    for (const auto& [src, dst] : rel.pairs) {
      if (!labels_.count(src) || !labels_.count(dst)) {
        throw SchemaError("schema: relationship " + name + " references undeclared label in (" +
                          src + ", " + dst + ")");
      }
    }
  }
}

namespace {

PropertyMap parse_properties(const json& node, const std::string& owner) {
  PropertyMap out;
  if (node.is_null()) return out;
  if (!node.is_object()) throw SchemaError("schema: properties of " + owner + " must be an object");
  for (const auto& [key, value] : node.items()) {
    if (!value.is_string()) {
      throw SchemaError("schema: property " + owner + "." + key + " must name a value kind");
    }
    auto kind = value_kind_from_string(value.get<std::string>());
    if (!kind) {
      throw SchemaError("schema: property " + owner + "." + key + " has unknown kind '" +
                        value.get<std::string>() + "'");
    }
    out.emplace(key, *kind);
  }
  return out;
}

json properties_to_json(const PropertyMap& props) {
  json out = json::object();
  for (const auto& [key, kind] : props) out[key] = std::string(to_string(kind));
  return out;
}

}  // namespace

GraphSchema GraphSchema::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("schema: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("schema: top level must be an object");
  if (!doc.contains("dataset_id") || !doc["dataset_id"].is_string()) {
    throw SchemaError("schema: missing string field 'dataset_id'");
  }
  std::map<std::string, PropertyMap> labels;
  if (doc.contains("labels")) {
    if (!doc["labels"].is_object()) throw SchemaError("schema: 'labels' must be an object");
    for (const auto& [name, props] : doc["labels"].items()) {
      labels.emplace(name, parse_properties(props, name));
    }
  }
  std::map<std::string, RelationshipType> relationships;
  if (doc.contains("relationships")) {
    if (!doc["relationships"].is_object()) {
      throw SchemaError("schema: 'relationships' must be an object");
    }
    for (const auto& [name, body] : doc["relationships"].items()) {
      if (!body.is_object()) throw SchemaError("schema: relationship " + name + " must be an object");
      RelationshipType rel;
      if (body.contains("pairs")) {
        for (const auto& pair : body["pairs"]) {
          if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string()) {
            throw SchemaError("schema: relationship " + name +
                              " pairs must be [source, target] label names");
          }
          rel.pairs.emplace_back(pair[0].get<std::string>(), pair[1].get<std::string>());
        }
      }
      if (body.contains("properties")) rel.properties = parse_properties(body["properties"], name);
      relationships.emplace(name, std::move(rel));
    }
  }
  return GraphSchema(doc["dataset_id"].get<std::string>(), std::move(labels),
                     std::move(relationships));
}

GraphSchema GraphSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("schema: cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

std::string GraphSchema::to_json() const {
  json doc;
  doc["dataset_id"] = dataset_id_;
  doc["labels"] = json::object();
  for (const auto& [name, props] : labels_) doc["labels"][name] = properties_to_json(props);
  doc["relationships"] = json::object();
  for (const auto& [name, rel] : relationships_) {
    json pairs = json::array();
    for (const auto& [src, dst] : rel.pairs) pairs.push_back({src, dst});
    doc["relationships"][name] = {{"pairs", pairs}, {"properties", properties_to_json(rel.properties)}};
  }
  return doc.dump(2);
}

bool GraphSchema::has_label(std::string_view name) const {
  return labels_.find(std::string(name)) != labels_.end();
}

bool GraphSchema::has_relationship(std::string_view name) const {
  return relationships_.find(std::string(name)) != relationships_.end();
}

const PropertyMap* GraphSchema::label_properties(std::string_view name) const {
  auto it = labels_.find(std::string(name));
  return it == labels_.end() ? nullptr : &it->second;
}

const RelationshipType* GraphSchema::relationship(std::string_view name) const {
  auto it = relationships_.find(std::string(name));
  return it == relationships_.end() ? nullptr : &it->second;
}

bool GraphSchema::declares_property(std::string_view key) const {
  const std::string k(key);
  for (const auto& [_, props] : labels_) {
    if (props.count(k)) return true;
  }
  for (const auto& [_, rel] : relationships_) {
    if (rel.properties.count(k)) return true;
  }
  return false;
}

}  // namespace cyscale
