#include <algorithm>
#include <map>
#include <set>

#include "cyscale/parser.hpp"
#include "cyscale/validator.hpp"

namespace cyscale {

std::string format_diagnostic(const Diagnostic& d) {
  return std::string(to_string(d.error_class)) + " at " + std::to_string(d.span.begin) + ".." +
         std::to_string(d.span.end) + ": " + d.detail;
}

namespace {

struct Binding {
  enum class Kind { Node, Relationship, Path, Value } kind = Kind::Value;
  std::set<std::string> labels;  // node labels or relationship types seen for the variable
};

using Scope = std::map<std::string, Binding>;

std::string_view kind_name(Binding::Kind kind) {
  switch (kind) {
    case Binding::Kind::Node: return "Node";
    case Binding::Kind::Relationship: return "Relationship";
    case Binding::Kind::Path: return "Path";
    case Binding::Kind::Value: return "Value";
  }
  return "Value";
}

std::string label_list(const std::set<std::string>& labels) {
  std::string out;
  for (const auto& l : labels) out += ":" + l;
  return out.empty() ? "()" : "(" + out + ")";
}

class Analyzer {
 public:
  explicit Analyzer(const GraphSchema* schema) : schema_(schema) {}

  std::vector<Diagnostic> run(const QueryAst& ast) {
    for (const auto& clause : ast.clauses) {
      std::visit([this](const auto& c) { this->clause(c); }, clause);
    }
    std::stable_sort(out_.begin(), out_.end(), [](const Diagnostic& a, const Diagnostic& b) {
      return a.span.begin < b.span.begin;
    });
    return std::move(out_);
  }

 private:
  enum ExprContext : unsigned {
    kAllowAggregates = 1u << 0,
    kInsideAggregate = 1u << 1,
  };

  void report(MessageClass cls, SourceRange span, std::string detail) {
    out_.push_back(Diagnostic{cls, span, std::move(detail)});
  }
  void syntax(SourceRange span, std::string detail) {
    report(MessageClass::SyntaxError, span, std::move(detail));
  }

  // -- binding -------------------------------------------------------------

  void bind(const std::string& name, Binding::Kind kind, SourceRange span,
            const std::vector<std::string>& labels) {
    auto [it, inserted] = scope_.try_emplace(name);
    if (inserted) {
      it->second.kind = kind;
    } else if (it->second.kind != kind) {
      syntax(span, "Type mismatch: variable `" + name + "` already defined as " +
                       std::string(kind_name(it->second.kind)) + ", used here as " +
                       std::string(kind_name(kind)));
      return;
    } else if (kind == Binding::Kind::Path) {
      syntax(span, "Variable `" + name + "` already declared");
      return;
    }
    // Labels restricted by an undeclared name add nothing to check against.
    for (const auto& l : labels) {
      if (!schema_ || (kind == Binding::Kind::Node ? schema_->has_label(l)
                                                   : schema_->has_relationship(l))) {
        it->second.labels.insert(l);
      }
    }
  }

  std::set<std::string> known_labels(const NodePattern& node) const {
    std::set<std::string> out;
    if (!schema_) return out;
    for (const auto& l : node.labels) {
      if (schema_->has_label(l)) out.insert(l);
    }
    if (!node.variable.empty()) {
      if (auto it = scope_.find(node.variable); it != scope_.end()) {
        out.insert(it->second.labels.begin(), it->second.labels.end());
      }
    }
    return out;
  }

  // -- clauses -------------------------------------------------------------

  void clause(const MatchClause& m) {
    for (const auto& part : m.patterns) {
      if (!part.path_variable.empty()) {
        bind(part.path_variable, Binding::Kind::Path, part.tag.range, {});
      }
      bind_node(part.start);
      for (const auto& step : part.steps) {
        bind_rel(step.relationship);
        bind_node(step.node);
      }
    }
    for (const auto& part : m.patterns) {
      check_node(part.start);
      const NodePattern* prev = &part.start;
      for (const auto& step : part.steps) {
        check_rel(step.relationship, *prev, step.node);
        check_node(step.node);
        prev = &step.node;
      }
    }
    if (m.where) expr(*m.where, 0, scope_);
  }

  void clause(const WithClause& w) {
    Scope next = projection(w.projection, "WITH", true);
    scope_ = std::move(next);
    if (w.where) expr(*w.where, 0, scope_);
  }

  void clause(const ReturnClause& r) { projection(r.projection, "RETURN", false); }

  Scope projection(const Projection& p, std::string_view clause_name, bool require_alias) {
    Scope next;
    for (const auto& item : p.items) {
      expr(item.expr, kAllowAggregates, scope_);
      const bool is_variable = item.expr.kind == ExprKind::Variable;
      if (require_alias && item.alias.empty() && !is_variable) {
        syntax(item.tag.range, "Expression in " + std::string(clause_name) +
                                   " must be aliased (use AS)");
        continue;
      }
      const auto name = column_name(item);
      if (next.count(name)) {
        syntax(item.tag.range, "Multiple result columns with the same name `" + name + "`");
        continue;
      }
      Binding b;
      if (is_variable) {
        if (auto it = scope_.find(item.expr.name); it != scope_.end()) b = it->second;
      }
      next.emplace(name, std::move(b));
    }
    // Sort keys may use both the incoming variables and the projected names.
    Scope sort_scope = scope_;
    for (const auto& [name, binding] : next) sort_scope[name] = binding;
    for (const auto& s : p.order_by) expr(s.expr, kAllowAggregates, sort_scope);
    return next;
  }

  // -- patterns ------------------------------------------------------------

  void bind_node(const NodePattern& node) {
    if (!node.variable.empty()) {
      bind(node.variable, Binding::Kind::Node, node.tag.range, node.labels);
    }
  }

  void bind_rel(const RelPattern& rel) {
    if (!rel.variable.empty()) {
      bind(rel.variable, Binding::Kind::Relationship, rel.tag.range, rel.types);
    }
  }

  void check_node(const NodePattern& node) {
    if (schema_) {
      for (std::size_t i = 0; i < node.labels.size(); ++i) {
        if (!schema_->has_label(node.labels[i])) {
          report(MessageClass::UnknownLabel, node.label_tags[i].range,
                 "Unknown node label '" + node.labels[i] + "' (dataset " +
                     schema_->dataset_id() + ")");
        }
      }
    }
    if (node.properties) {
      map_values(*node.properties);
      if (schema_) {
        check_map_keys(*node.properties, known_labels(node), /*relationship=*/false);
      }
    }
  }

  void check_rel(const RelPattern& rel, const NodePattern& left, const NodePattern& right) {
    if (rel.properties) map_values(*rel.properties);
    if (!schema_) return;
    std::set<std::string> types;
    bool all_known = true;
    for (std::size_t i = 0; i < rel.types.size(); ++i) {
      if (schema_->has_relationship(rel.types[i])) {
        types.insert(rel.types[i]);
      } else {
        all_known = false;
        report(MessageClass::UnknownRelationshipType, rel.type_tags[i].range,
               "Unknown relationship type '" + rel.types[i] + "' (dataset " +
                   schema_->dataset_id() + ")");
      }
    }
    if (rel.properties) check_map_keys(*rel.properties, types, /*relationship=*/true);
    if (types.empty() || !all_known) return;

    const auto left_labels = known_labels(left);
    const auto right_labels = known_labels(right);
    const auto& src = rel.direction == Direction::Left ? right_labels : left_labels;
    const auto& dst = rel.direction == Direction::Left ? left_labels : right_labels;
    const bool variable_length = rel.hops.has_value();

    auto fits = [&](const std::set<std::string>& from, const std::set<std::string>& to) {
      if (variable_length) {
        // Each end only has to touch the type(s) on its own side.
        bool from_ok = from.empty();
        bool to_ok = to.empty();
        for (const auto& t : types) {
          for (const auto& [s, d] : schema_->relationship(t)->pairs) {
            from_ok = from_ok || from.count(s) > 0;
            to_ok = to_ok || to.count(d) > 0;
          }
        }
        return from_ok && to_ok;
      }
      for (const auto& t : types) {
        for (const auto& [s, d] : schema_->relationship(t)->pairs) {
          if ((from.empty() || from.count(s)) && (to.empty() || to.count(d))) return true;
        }
      }
      return false;
    };

    if (fits(src, dst)) return;
    if (rel.direction == Direction::Undirected && fits(dst, src)) return;

    std::string types_text;
    for (const auto& t : types) types_text += (types_text.empty() ? "" : "|") + t;
    std::string allowed;
    for (const auto& t : types) {
      for (const auto& [s, d] : schema_->relationship(t)->pairs) {
        if (!allowed.empty()) allowed += ", ";
        allowed += "(:" + s + ")-[:" + t + "]->(:" + d + ")";
      }
    }
    const bool reversed = rel.direction != Direction::Undirected && fits(dst, src);
    if (reversed) {
      report(MessageClass::DirectionViolation, rel.tag.range,
             "Relationship :" + types_text + " is used in the reverse direction from " +
                 label_list(src) + " to " + label_list(dst) + "; schema declares " + allowed);
    } else {
      report(MessageClass::DirectionViolation, rel.tag.range,
             "Relationship :" + types_text + " cannot connect " + label_list(src) + " to " +
                 label_list(dst) + "; schema declares " + allowed);
    }
  }

  void check_map_keys(const Expr& map, const std::set<std::string>& owners, bool relationship) {
    for (std::size_t i = 0; i < map.keys.size(); ++i) {
      check_property(map.keys[i], map.key_tags[i].range, owners, relationship);
    }
  }

  void map_values(const Expr& map) {
    for (const auto& v : map.operands) expr(v, 0, scope_);
  }

  void check_property(const std::string& key, SourceRange span, const std::set<std::string>& owners,
                      bool relationship) {
    if (owners.empty()) {
      if (!schema_->declares_property(key)) {
        report(MessageClass::UnknownProperty, span,
               "Unknown property key '" + key + "' (not declared anywhere in dataset " +
                   schema_->dataset_id() + ")");
      }
      return;
    }
    for (const auto& owner : owners) {
      const PropertyMap* props = relationship ? &schema_->relationship(owner)->properties
                                              : schema_->label_properties(owner);
      if (props && props->count(key)) return;
    }
    std::string owner_text;
    for (const auto& o : owners) owner_text += (owner_text.empty() ? "" : ", ") + o;
    report(MessageClass::UnknownProperty, span,
           "Unknown property '" + key + "' for " + (relationship ? "relationship type " : "label ") +
               owner_text);
  }

  // -- expressions ---------------------------------------------------------

  void expr(const Expr& e, unsigned ctx, const Scope& scope) {
    switch (e.kind) {
      case ExprKind::Literal:
        return;
      case ExprKind::Variable:
        if (!scope.count(e.name)) syntax(e.tag.range, "Variable `" + e.name + "` not defined");
        return;
      case ExprKind::Property: {
        const Expr& object = e.operands.at(0);
        expr(object, ctx, scope);
        if (!schema_ || object.kind != ExprKind::Variable) return;
        auto it = scope.find(object.name);
        if (it == scope.end()) return;
        const auto& b = it->second;
        if (b.kind == Binding::Kind::Node) {
          check_property(e.name, e.name_tag.range, b.labels, false);
        } else if (b.kind == Binding::Kind::Relationship) {
          check_property(e.name, e.name_tag.range, b.labels, true);
        }
        return;
      }
      case ExprKind::Function:
      case ExprKind::CountStar: {
        unsigned inner = ctx;
        if (is_aggregate_function(e.name)) {
          if (!(ctx & kAllowAggregates) || (ctx & kInsideAggregate)) {
            syntax(e.tag.range, "Invalid use of aggregating function " + e.name +
                                    "(...) in this context");
          }
          inner = kInsideAggregate;
        }
        for (const auto& a : e.operands) expr(a, inner, scope);
        return;
      }
      case ExprKind::Map:
      case ExprKind::List:
      case ExprKind::Unary:
      case ExprKind::Binary:
      case ExprKind::IsNull:
      case ExprKind::IsNotNull:
        for (const auto& a : e.operands) expr(a, ctx, scope);
        return;
    }
  }

  const GraphSchema* schema_;
  Scope scope_;
  std::vector<Diagnostic> out_;
};

}  // namespace

namespace detail {

std::vector<Diagnostic> analyze(const QueryAst& ast, const GraphSchema* schema) {
  return Analyzer(schema).run(ast);
}

}  // namespace detail

std::vector<Diagnostic> validate(const QueryAst& ast, const GraphSchema& schema) {
  return detail::analyze(ast, &schema);
}

std::vector<Diagnostic> check_query(std::string_view source, const GraphSchema& schema) {
  try {
    return validate(parse(tokenize(source)), schema);
  } catch (const QueryError& e) {
    return {e.diagnostic()};
  }
}

}  // namespace cyscale
