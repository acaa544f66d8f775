#include "cyscale/ast.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

#include "cyscale/lexer.hpp"

namespace cyscale {

namespace {

std::string upper(const std::string& s) {
  std::string out = s;
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool is_plain_name(const std::string& name) {
  if (name.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
  for (unsigned char c : name) {
    if (!(std::isalnum(c) || c == '_')) return false;
  }
  const auto up = upper(name);
  return !is_keyword(up) && up != "TRUE" && up != "FALSE";
}

std::string name_text(const std::string& name) {
  return is_plain_name(name) ? name : "`" + name + "`";
}

std::string quote_string(const std::string& value) {
  std::string out = "'";
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default: out.push_back(c);
    }
  }
  out += "'";
  return out;
}

std::string float_text(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  std::string out(buf.data(), ec == std::errc{} ? ptr : buf.data());
  if (out.find_first_of(".eE") == std::string::npos) out += ".0";
  return out;
}

struct LiteralPrinter {
  std::string operator()(std::monostate) const { return "NULL"; }
  std::string operator()(bool b) const { return b ? "true" : "false"; }
  std::string operator()(std::int64_t v) const { return std::to_string(v); }
  std::string operator()(double v) const { return float_text(v); }
  std::string operator()(const std::string& s) const { return quote_string(s); }
};

std::string_view op_text(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or: return "OR";
    case BinaryOp::Xor: return "XOR";
    case BinaryOp::And: return "AND";
    case BinaryOp::Eq: return "=";
    case BinaryOp::Neq: return "<>";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::RegexMatch: return "=~";
    case BinaryOp::In: return "IN";
    case BinaryOp::StartsWith: return "STARTS WITH";
    case BinaryOp::EndsWith: return "ENDS WITH";
    case BinaryOp::Contains: return "CONTAINS";
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Pow: return "^";
  }
  return "?";
}

void print_expr(const Expr& e, std::string& out);

void print_map(const Expr& e, std::string& out) {
  out += "{";
  for (std::size_t i = 0; i < e.keys.size(); ++i) {
    if (i) out += ", ";
    out += name_text(e.keys[i]);
    out += ": ";
    print_expr(e.operands[i], out);
  }
  out += "}";
}

void print_expr(const Expr& e, std::string& out) {
  switch (e.kind) {
    case ExprKind::Literal:
      out += std::visit(LiteralPrinter{}, e.literal);
      return;
    case ExprKind::Variable:
      out += name_text(e.name);
      return;
    case ExprKind::Property:
      print_expr(e.operands.at(0), out);
      out += ".";
      out += name_text(e.name);
      return;
    case ExprKind::Unary:
      out += "(";
      out += e.unary_op == UnaryOp::Not ? "NOT " : e.unary_op == UnaryOp::Negate ? "-" : "+";
      print_expr(e.operands.at(0), out);
      out += ")";
      return;
    case ExprKind::Binary:
      out += "(";
      print_expr(e.operands.at(0), out);
      out += " ";
      out += op_text(e.binary_op);
      out += " ";
      print_expr(e.operands.at(1), out);
      out += ")";
      return;
    case ExprKind::Function:
      out += e.name;
      out += "(";
      if (e.distinct) out += "DISTINCT ";
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i) out += ", ";
        print_expr(e.operands[i], out);
      }
      out += ")";
      return;
    case ExprKind::CountStar:
      out += "count(*)";
      return;
    case ExprKind::List:
      out += "[";
      for (std::size_t i = 0; i < e.operands.size(); ++i) {
        if (i) out += ", ";
        print_expr(e.operands[i], out);
      }
      out += "]";
      return;
    case ExprKind::Map:
      print_map(e, out);
      return;
    case ExprKind::IsNull:
    case ExprKind::IsNotNull:
      out += "(";
      print_expr(e.operands.at(0), out);
      out += e.kind == ExprKind::IsNull ? " IS NULL)" : " IS NOT NULL)";
      return;
  }
}

void print_node(const NodePattern& node, std::string& out) {
  out += "(";
  out += node.variable.empty() ? "" : name_text(node.variable);
  for (const auto& label : node.labels) out += ":" + name_text(label);
  if (node.properties) {
    if (!node.variable.empty() || !node.labels.empty()) out += " ";
    print_map(*node.properties, out);
  }
  out += ")";
}

void print_rel(const RelPattern& rel, std::string& out) {
  const bool detail = !rel.variable.empty() || !rel.types.empty() || rel.hops || rel.properties;
  out += rel.direction == Direction::Left ? "<-" : "-";
  if (detail) {
    out += "[";
    out += rel.variable.empty() ? "" : name_text(rel.variable);
    for (std::size_t i = 0; i < rel.types.size(); ++i) {
      out += i ? "|" : ":";
      out += name_text(rel.types[i]);
    }
    if (rel.hops) {
      out += "*";
      if (rel.hops->has_dots) {
        if (rel.hops->min) out += std::to_string(*rel.hops->min);
        out += "..";
        if (rel.hops->max) out += std::to_string(*rel.hops->max);
      } else if (rel.hops->min) {
        out += std::to_string(*rel.hops->min);
      }
    }
    if (rel.properties) {
      if (!rel.variable.empty() || !rel.types.empty() || rel.hops) out += " ";
      print_map(*rel.properties, out);
    }
    out += "]";
  }
  out += rel.direction == Direction::Right ? "->" : "-";
}

void print_pattern(const PatternPart& part, std::string& out) {
  if (!part.path_variable.empty()) out += name_text(part.path_variable) + " = ";
  print_node(part.start, out);
  for (const auto& step : part.steps) {
    print_rel(step.relationship, out);
    print_node(step.node, out);
  }
}

void print_projection(const Projection& p, std::string& out) {
  if (p.distinct) out += "DISTINCT ";
  for (std::size_t i = 0; i < p.items.size(); ++i) {
    if (i) out += ", ";
    print_expr(p.items[i].expr, out);
    if (!p.items[i].alias.empty()) out += " AS " + name_text(p.items[i].alias);
  }
  if (!p.order_by.empty()) {
    out += " ORDER BY ";
    for (std::size_t i = 0; i < p.order_by.size(); ++i) {
      if (i) out += ", ";
      print_expr(p.order_by[i].expr, out);
      if (p.order_by[i].descending) out += " DESC";
    }
  }
  if (p.skip) out += " SKIP " + std::to_string(*p.skip);
  if (p.limit) out += " LIMIT " + std::to_string(*p.limit);
}

struct ClausePrinter {
  std::string& out;

  void operator()(const MatchClause& m) const {
    out += m.optional ? "OPTIONAL MATCH " : "MATCH ";
    for (std::size_t i = 0; i < m.patterns.size(); ++i) {
      if (i) out += ", ";
      print_pattern(m.patterns[i], out);
    }
    if (m.where) {
      out += " WHERE ";
      print_expr(*m.where, out);
    }
  }
  void operator()(const WithClause& w) const {
    out += "WITH ";
    print_projection(w.projection, out);
    if (w.where) {
      out += " WHERE ";
      print_expr(*w.where, out);
    }
  }
  void operator()(const ReturnClause& r) const {
    out += "RETURN ";
    print_projection(r.projection, out);
  }
};

}  // namespace

bool is_aggregate_function(const std::string& canonical_name) {
  static constexpr std::array<std::string_view, 6> kAggregates{"count", "sum", "avg",
                                                               "min",   "max", "collect"};
  for (auto name : kAggregates) {
    if (name == canonical_name) return true;
  }
  return false;
}

std::string canonical_text(const Expr& expr) {
  std::string out;
  print_expr(expr, out);
  return out;
}

std::string canonical_text(const QueryAst& ast) {
  std::string out;
  for (std::size_t i = 0; i < ast.clauses.size(); ++i) {
    if (i) out += " ";
    std::visit(ClausePrinter{out}, ast.clauses[i]);
  }
  return out;
}

std::string column_name(const ProjectionItem& item) {
  if (!item.alias.empty()) return item.alias;
  if (item.expr.kind == ExprKind::Variable) return item.expr.name;
  return canonical_text(item.expr);
}

}  // namespace cyscale
