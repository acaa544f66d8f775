#pragma once

// Syntax tree for the supported read-only Cypher subset:
//
//   query   := clause+
//   clause  := [OPTIONAL] MATCH pattern (',' pattern)* [WHERE expr]
//            | WITH [DISTINCT] items [ORDER BY sort] [SKIP int] [LIMIT int] [WHERE expr]
//            | RETURN [DISTINCT] items [ORDER BY sort] [SKIP int] [LIMIT int]
//   pattern := [var '='] node (rel node)*
//   node    := '(' [var] (':' label)* [map] ')'
//   rel     := '-' [detail] '-' ['>'] | '<' '-' [detail] '-'
//   detail  := '[' [var] [':' type ('|' type)*] ['*' [int] ['..' [int]]] [map] ']'

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cyscale/diagnostic.hpp"
#include "cyscale/metrics.hpp"

namespace cyscale {

/// Source position attached to syntax nodes. Every tag compares equal to
/// every other, so defaulted equality on syntax nodes is structural.
struct SourceTag {
  SourceRange range;

  friend bool operator==(const SourceTag&, const SourceTag&) { return true; }
};

enum class ExprKind {
  Literal,
  Variable,
  Property,
  Unary,
  Binary,
  Function,
  CountStar,
  List,
  Map,
  IsNull,
  IsNotNull,
};

enum class BinaryOp {
  Or, Xor, And,
  Eq, Neq, Lt, Le, Gt, Ge, RegexMatch, In, StartsWith, EndsWith, Contains,
  Add, Sub, Mul, Div, Mod, Pow,
};

enum class UnaryOp { Not, Negate, Plus };

struct Expr {
  ExprKind kind = ExprKind::Literal;
  ScalarValue literal;
  /// Variable name, property key, or canonical function name.
  std::string name;
  BinaryOp binary_op = BinaryOp::And;
  UnaryOp unary_op = UnaryOp::Not;
  bool distinct = false;
  /// Property: {object}; Unary/IsNull: {operand}; Binary: {lhs, rhs};
  /// Function/List: arguments; Map: values parallel to `keys`.
  std::vector<Expr> operands;
  std::vector<std::string> keys;
  std::vector<SourceTag> key_tags;
  SourceTag tag;
  /// Position of the property key or function name.
  SourceTag name_tag;

  friend bool operator==(const Expr&, const Expr&) = default;
};

bool is_aggregate_function(const std::string& canonical_name);

enum class Direction { Left, Right, Undirected };

struct HopRange {
  std::optional<std::int64_t> min;
  std::optional<std::int64_t> max;
  /// `*2` fixes both ends at 2; `*2..` leaves max open.
  bool has_dots = false;

  friend bool operator==(const HopRange&, const HopRange&) = default;
};

struct NodePattern {
  std::string variable;
  std::vector<std::string> labels;
  std::vector<SourceTag> label_tags;
  std::optional<Expr> properties;
  SourceTag tag;

  friend bool operator==(const NodePattern&, const NodePattern&) = default;
};

struct RelPattern {
  std::string variable;
  std::vector<std::string> types;
  std::vector<SourceTag> type_tags;
  Direction direction = Direction::Right;
  std::optional<HopRange> hops;
  std::optional<Expr> properties;
  SourceTag tag;

  friend bool operator==(const RelPattern&, const RelPattern&) = default;
};

struct PathStep {
  RelPattern relationship;
  NodePattern node;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct PatternPart {
  std::string path_variable;
  NodePattern start;
  std::vector<PathStep> steps;
  SourceTag tag;

  friend bool operator==(const PatternPart&, const PatternPart&) = default;
};

struct ProjectionItem {
  Expr expr;
  std::string alias;
  SourceTag tag;

  friend bool operator==(const ProjectionItem&, const ProjectionItem&) = default;
};

struct SortItem {
  Expr expr;
  bool descending = false;

  friend bool operator==(const SortItem&, const SortItem&) = default;
};

struct Projection {
  bool distinct = false;
  std::vector<ProjectionItem> items;
  std::vector<SortItem> order_by;
  std::optional<std::int64_t> skip;
  std::optional<std::int64_t> limit;

  friend bool operator==(const Projection&, const Projection&) = default;
};

struct MatchClause {
  bool optional = false;
  std::vector<PatternPart> patterns;
  std::optional<Expr> where;
  SourceTag tag;

  friend bool operator==(const MatchClause&, const MatchClause&) = default;
};

struct WithClause {
  Projection projection;
  std::optional<Expr> where;
  SourceTag tag;

  friend bool operator==(const WithClause&, const WithClause&) = default;
};

struct ReturnClause {
  Projection projection;
  SourceTag tag;

  friend bool operator==(const ReturnClause&, const ReturnClause&) = default;
};

using Clause = std::variant<MatchClause, WithClause, ReturnClause>;

struct QueryAst {
  std::vector<Clause> clauses;

  friend bool operator==(const QueryAst&, const QueryAst&) = default;
};

/// Deterministic rendering: upper-case keywords, single spaces, every
/// operator expression fully parenthesized, single-quoted strings.
std::string canonical_text(const QueryAst& ast);
std::string canonical_text(const Expr& expr);

/// Column name a projection item exposes (alias, or the expression text).
std::string column_name(const ProjectionItem& item);

}  // namespace cyscale
