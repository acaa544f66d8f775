#include "cyscale/parser.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "cyscale/validator.hpp"

namespace cyscale {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Supported functions, keyed by lower-case spelling.
constexpr std::array<std::string_view, 46> kFunctions{
    "count",     "sum",        "avg",      "min",       "max",        "collect",
    "id",        "elementId",  "type",     "labels",    "keys",       "properties",
    "length",    "size",       "nodes",    "relationships", "coalesce", "toLower",
    "toUpper",   "toString",   "toInteger", "toFloat",  "toBoolean",  "trim",
    "ltrim",     "rtrim",      "substring", "replace",  "split",      "left",
    "right",     "abs",        "round",    "floor",     "ceil",       "sqrt",
    "date",      "datetime",   "duration", "head",      "last",       "startNode",
    "endNode",   "range",      "reverse",  "tail",
};

std::optional<std::string> canonical_function(std::string_view name) {
  const auto key = lower(name);
  for (auto fn : kFunctions) {
    if (lower(fn) == key) return std::string(fn);
  }
  return std::nullopt;
}

bool is_write_keyword(const Token& t) {
  return t.is_keyword("CREATE") || t.is_keyword("MERGE") || t.is_keyword("DELETE") ||
         t.is_keyword("DETACH") || t.is_keyword("SET") || t.is_keyword("REMOVE") ||
         t.is_keyword("FOREACH");
}

std::string describe(const Token& t) {
  if (t.kind == TokenKind::End) return "end of input";
  if (t.kind == TokenKind::String) return "string literal";
  return "'" + t.text + "'";
}

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {
    if (toks_.empty() || toks_.back().kind != TokenKind::End) {
      throw ContractViolation("parse: token stream must end with an End token");
    }
  }

  QueryAst query() {
    QueryAst ast;
    if (at(TokenKind::End)) fail_syntax(cur(), "empty query");
    while (!at(TokenKind::End) && !at(TokenKind::Semicolon)) {
      if (!ast.clauses.empty() && std::holds_alternative<ReturnClause>(ast.clauses.back())) {
        fail_syntax(cur(), "RETURN can only be used at the end of the query; found " +
                               describe(cur()) + " after it");
      }
      ast.clauses.push_back(clause());
    }
    if (at(TokenKind::Semicolon)) {
      advance();
      if (!at(TokenKind::End)) fail_syntax(cur(), "multiple statements are not supported");
    }
    if (!std::holds_alternative<ReturnClause>(ast.clauses.back())) {
      fail_syntax(cur(), "query cannot conclude with " +
                             std::string(std::holds_alternative<MatchClause>(ast.clauses.back())
                                             ? "MATCH"
                                             : "WITH") +
                             " (must be a RETURN clause)");
    }
    return ast;
  }

 private:
  // -- token helpers -------------------------------------------------------

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t ahead = 1) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  bool at(TokenKind kind) const { return cur().kind == kind; }
  bool at_keyword(std::string_view kw) const { return cur().is_keyword(kw); }
  const Token& advance() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  std::size_t prev_end() const { return pos_ == 0 ? 0 : toks_[pos_ - 1].span.end; }

  [[noreturn]] void fail(MessageClass cls, const Token& at, std::string detail) const {
    throw QueryError(Diagnostic{cls, at.span, std::move(detail)});
  }
  [[noreturn]] void fail_syntax(const Token& at, std::string detail) const {
    fail(MessageClass::SyntaxError, at, std::move(detail));
  }
  [[noreturn]] void fail_path(const Token& at, std::string detail) const {
    fail(MessageClass::MalformedPath, at, std::move(detail));
  }

  const Token& expect(TokenKind kind, std::string_view what) {
    if (!at(kind)) {
      fail_syntax(cur(), "expected " + std::string(what) + " but found " + describe(cur()));
    }
    return advance();
  }
  void expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) {
      fail_syntax(cur(), "expected " + std::string(kw) + " but found " + describe(cur()));
    }
    advance();
  }

  bool at_name() const { return at(TokenKind::Identifier) || at(TokenKind::Keyword); }

  // Labels, relationship types, property keys and map keys may reuse
  // keyword spellings.
  const Token& schema_name(std::string_view what) {
    if (!at_name()) {
      fail_syntax(cur(), "expected " + std::string(what) + " but found " + describe(cur()));
    }
    return advance();
  }

  std::string variable_name() {
    if (!at(TokenKind::Identifier)) {
      fail_syntax(cur(), "expected variable name but found " + describe(cur()));
    }
    return advance().text;
  }

  // -- clauses -------------------------------------------------------------

  Clause clause() {
    const Token& t = cur();
    if (t.is_keyword("OPTIONAL")) {
      advance();
      if (!at_keyword("MATCH")) fail_syntax(cur(), "expected MATCH after OPTIONAL");
      return match_clause(true, t.span.begin);
    }
    if (t.is_keyword("MATCH")) return match_clause(false, t.span.begin);
    if (t.is_keyword("WITH")) return with_clause();
    if (t.is_keyword("RETURN")) return return_clause();
    if (is_write_keyword(t)) {
      fail_syntax(t, "write clause " + lower(t.text) + " is not supported by the read-only subset");
    }
    if (t.kind == TokenKind::Keyword) {
      fail_syntax(t, "unsupported or misplaced keyword '" + t.text + "'");
    }
    fail_syntax(t, "expected a clause (MATCH, OPTIONAL MATCH, WITH, RETURN) but found " +
                       describe(t));
  }

  MatchClause match_clause(bool optional, std::size_t begin) {
    advance();  // MATCH
    MatchClause m;
    m.optional = optional;
    m.patterns.push_back(pattern_part());
    while (at(TokenKind::Comma)) {
      advance();
      m.patterns.push_back(pattern_part());
    }
    if (at_keyword("WHERE")) {
      advance();
      m.where = expression();
    }
    m.tag.range = {begin, prev_end()};
    return m;
  }

  WithClause with_clause() {
    const auto begin = advance().span.begin;
    WithClause w;
    w.projection = projection();
    if (at_keyword("WHERE")) {
      advance();
      w.where = expression();
    }
    w.tag.range = {begin, prev_end()};
    return w;
  }

  ReturnClause return_clause() {
    const auto begin = advance().span.begin;
    ReturnClause r;
    r.projection = projection();
    r.tag.range = {begin, prev_end()};
    return r;
  }

  Projection projection() {
    Projection p;
    if (at_keyword("DISTINCT")) {
      advance();
      p.distinct = true;
    }
    if (at(TokenKind::Star)) fail_syntax(cur(), "projection of all variables ('*') is not supported");
    p.items.push_back(projection_item());
    while (at(TokenKind::Comma)) {
      advance();
      p.items.push_back(projection_item());
    }
    if (at_keyword("ORDER")) {
      advance();
      expect_keyword("BY");
      p.order_by.push_back(sort_item());
      while (at(TokenKind::Comma)) {
        advance();
        p.order_by.push_back(sort_item());
      }
    }
    if (at_keyword("SKIP")) {
      advance();
      p.skip = count_literal("SKIP");
    }
    if (at_keyword("LIMIT")) {
      advance();
      p.limit = count_literal("LIMIT");
    }
    return p;
  }

  std::int64_t count_literal(std::string_view clause) {
    if (!at(TokenKind::Integer)) {
      fail_syntax(cur(), std::string(clause) + " expects a non-negative integer literal but found " +
                             describe(cur()));
    }
    const auto& t = advance();
    return std::strtoll(t.text.c_str(), nullptr, 10);
  }

  ProjectionItem projection_item() {
    ProjectionItem item;
    const auto begin = cur().span.begin;
    item.expr = expression();
    if (at_keyword("AS")) {
      advance();
      item.alias = variable_name();
    }
    item.tag.range = {begin, prev_end()};
    return item;
  }

  SortItem sort_item() {
    SortItem s;
    s.expr = expression();
    if (at_keyword("DESC") || at_keyword("DESCENDING")) {
      advance();
      s.descending = true;
    } else if (at_keyword("ASC") || at_keyword("ASCENDING")) {
      advance();
    }
    return s;
  }

  // -- patterns ------------------------------------------------------------

  PatternPart pattern_part() {
    PatternPart part;
    const auto begin = cur().span.begin;
    if (at(TokenKind::Identifier) && peek().kind == TokenKind::Eq) {
      part.path_variable = advance().text;
      advance();
    }
    part.start = node_pattern();
    while (at(TokenKind::Dash) || at(TokenKind::ArrowLeft) || at(TokenKind::ArrowRight) ||
           at(TokenKind::Lt) || at(TokenKind::Gt) || at(TokenKind::Neq)) {
      PathStep step;
      step.relationship = rel_pattern();
      if (!at(TokenKind::LParen)) {
        fail_path(cur(), "relationship pattern must be followed by a node pattern, found " +
                             describe(cur()));
      }
      step.node = node_pattern();
      part.steps.push_back(std::move(step));
    }
    part.tag.range = {begin, prev_end()};
    return part;
  }

  NodePattern node_pattern() {
    NodePattern node;
    const auto begin = expect(TokenKind::LParen, "'(' to start a node pattern").span.begin;
    if (at(TokenKind::Identifier)) node.variable = advance().text;
    while (at(TokenKind::Colon)) {
      advance();
      const auto& label = schema_name("node label");
      node.labels.push_back(label.text);
      node.label_tags.push_back(SourceTag{label.span});
    }
    if (at(TokenKind::LBrace)) node.properties = map_literal();
    if (!at(TokenKind::RParen)) {
      fail_syntax(cur(), "expected ')' to close node pattern but found " + describe(cur()));
    }
    advance();
    node.tag.range = {begin, prev_end()};
    return node;
  }

  RelPattern rel_pattern() {
    RelPattern rel;
    const Token& first = cur();
    const auto begin = first.span.begin;
    bool left = false;
    if (first.kind == TokenKind::ArrowLeft) {
      left = true;
    } else if (first.kind != TokenKind::Dash) {
      fail_path(first, "invalid relationship arrow " + describe(first));
    }
    advance();

    bool right = false;
    if (at(TokenKind::LBracket)) {
      advance();
      rel_detail(rel);
      if (!at(TokenKind::RBracket)) {
        fail_path(cur(), "expected ']' to close relationship pattern but found " + describe(cur()));
      }
      advance();
      if (at(TokenKind::Dash)) {
        advance();
      } else if (at(TokenKind::ArrowRight)) {
        advance();
        right = true;
      } else {
        fail_path(cur(), "expected '-' or '->' after relationship pattern but found " +
                             describe(cur()));
      }
    } else if (at(TokenKind::Dash)) {
      advance();
      // "<--" and "--"; the lexer has already merged "->" in "-->".
    } else if (at(TokenKind::ArrowRight)) {
      advance();
      right = true;
    } else {
      fail_path(cur(), "incomplete relationship arrow before " + describe(cur()));
    }
    if (left && right) {
      fail_path(first, "relationship pattern cannot point in both directions");
    }
    rel.direction = left ? Direction::Left : right ? Direction::Right : Direction::Undirected;
    rel.tag.range = {begin, prev_end()};
    return rel;
  }

  void rel_detail(RelPattern& rel) {
    if (at(TokenKind::Identifier)) rel.variable = advance().text;
    if (at(TokenKind::Colon)) {
      advance();
      while (true) {
        if (!at_name()) fail_path(cur(), "expected relationship type but found " + describe(cur()));
        const auto& type = advance();
        rel.types.push_back(type.text);
        rel.type_tags.push_back(SourceTag{type.span});
        if (!at(TokenKind::Pipe)) break;
        advance();
        if (at(TokenKind::Colon)) advance();
      }
    }
    if (at(TokenKind::Star)) {
      const Token& star = advance();
      HopRange hops;
      if (at(TokenKind::Integer)) hops.min = std::strtoll(advance().text.c_str(), nullptr, 10);
      if (at(TokenKind::DotDot)) {
        advance();
        hops.has_dots = true;
        if (at(TokenKind::Integer)) hops.max = std::strtoll(advance().text.c_str(), nullptr, 10);
      } else if (hops.min) {
        hops.max = hops.min;
      }
      if (hops.min && hops.max && *hops.min > *hops.max) {
        fail_path(star, "variable-length range has minimum above maximum");
      }
      rel.hops = hops;
    }
    if (at(TokenKind::LBrace)) rel.properties = map_literal();
  }

  // -- expressions ---------------------------------------------------------

  Expr make_binary(BinaryOp op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = ExprKind::Binary;
    e.binary_op = op;
    e.tag.range = {lhs.tag.range.begin, rhs.tag.range.end};
    e.operands.push_back(std::move(lhs));
    e.operands.push_back(std::move(rhs));
    return e;
  }

  Expr make_unary(UnaryOp op, Expr operand, std::size_t begin) {
    Expr e;
    e.kind = ExprKind::Unary;
    e.unary_op = op;
    e.tag.range = {begin, operand.tag.range.end};
    e.operands.push_back(std::move(operand));
    return e;
  }

  Expr expression() { return or_expr(); }

  Expr or_expr() {
    Expr lhs = xor_expr();
    while (at_keyword("OR")) {
      advance();
      lhs = make_binary(BinaryOp::Or, std::move(lhs), xor_expr());
    }
    return lhs;
  }

  Expr xor_expr() {
    Expr lhs = and_expr();
    while (at_keyword("XOR")) {
      advance();
      lhs = make_binary(BinaryOp::Xor, std::move(lhs), and_expr());
    }
    return lhs;
  }

  Expr and_expr() {
    Expr lhs = not_expr();
    while (at_keyword("AND")) {
      advance();
      lhs = make_binary(BinaryOp::And, std::move(lhs), not_expr());
    }
    return lhs;
  }

  Expr not_expr() {
    if (at_keyword("NOT")) {
      const auto begin = advance().span.begin;
      return make_unary(UnaryOp::Not, not_expr(), begin);
    }
    return comparison();
  }

  Expr comparison() {
    Expr lhs = additive();
    while (true) {
      std::optional<BinaryOp> op;
      switch (cur().kind) {
        case TokenKind::Eq: op = BinaryOp::Eq; break;
        case TokenKind::Neq: op = BinaryOp::Neq; break;
        case TokenKind::Lt: op = BinaryOp::Lt; break;
        case TokenKind::Le: op = BinaryOp::Le; break;
        case TokenKind::Gt: op = BinaryOp::Gt; break;
        case TokenKind::Ge: op = BinaryOp::Ge; break;
        case TokenKind::RegexMatch: op = BinaryOp::RegexMatch; break;
        default: break;
      }
      if (op) {
        advance();
        lhs = make_binary(*op, std::move(lhs), additive());
        continue;
      }
      if (at(TokenKind::ArrowLeft)) {
        // "x<-1" lexes as "<-"; read it as "<" followed by a negation.
        const auto minus = cur().span.begin + 1;
        advance();
        lhs = make_binary(BinaryOp::Lt, std::move(lhs), make_unary(UnaryOp::Negate, multiplicative(), minus));
        continue;
      }
      if (at_keyword("IN")) {
        advance();
        lhs = make_binary(BinaryOp::In, std::move(lhs), additive());
        continue;
      }
      if (at_keyword("STARTS") || at_keyword("ENDS")) {
        const bool starts = at_keyword("STARTS");
        advance();
        expect_keyword("WITH");
        lhs = make_binary(starts ? BinaryOp::StartsWith : BinaryOp::EndsWith, std::move(lhs),
                          additive());
        continue;
      }
      if (at_keyword("CONTAINS")) {
        advance();
        lhs = make_binary(BinaryOp::Contains, std::move(lhs), additive());
        continue;
      }
      if (at_keyword("IS")) {
        advance();
        bool negated = false;
        if (at_keyword("NOT")) {
          advance();
          negated = true;
        }
        expect_keyword("NULL");
        Expr e;
        e.kind = negated ? ExprKind::IsNotNull : ExprKind::IsNull;
        e.tag.range = {lhs.tag.range.begin, prev_end()};
        e.operands.push_back(std::move(lhs));
        lhs = std::move(e);
        continue;
      }
      return lhs;
    }
  }

  Expr additive() {
    Expr lhs = multiplicative();
    while (at(TokenKind::Plus) || at(TokenKind::Dash)) {
      const auto op = advance().kind == TokenKind::Plus ? BinaryOp::Add : BinaryOp::Sub;
      lhs = make_binary(op, std::move(lhs), multiplicative());
    }
    return lhs;
  }

  Expr multiplicative() {
    Expr lhs = power();
    while (at(TokenKind::Star) || at(TokenKind::Slash) || at(TokenKind::Percent)) {
      const auto kind = advance().kind;
      const auto op = kind == TokenKind::Star    ? BinaryOp::Mul
                      : kind == TokenKind::Slash ? BinaryOp::Div
                                                 : BinaryOp::Mod;
      lhs = make_binary(op, std::move(lhs), power());
    }
    return lhs;
  }

  Expr power() {
    Expr lhs = unary();
    while (at(TokenKind::Caret)) {
      advance();
      lhs = make_binary(BinaryOp::Pow, std::move(lhs), unary());
    }
    return lhs;
  }

  Expr unary() {
    if (at(TokenKind::Dash) || at(TokenKind::Plus)) {
      const auto& t = advance();
      return make_unary(t.kind == TokenKind::Dash ? UnaryOp::Negate : UnaryOp::Plus, unary(),
                        t.span.begin);
    }
    return postfix();
  }

  Expr postfix() {
    Expr e = atom();
    while (at(TokenKind::Dot)) {
      advance();
      const auto& key = schema_name("property key after '.'");
      Expr p;
      p.kind = ExprKind::Property;
      p.name = key.text;
      p.name_tag.range = key.span;
      p.tag.range = {e.tag.range.begin, key.span.end};
      p.operands.push_back(std::move(e));
      e = std::move(p);
    }
    return e;
  }

  Expr literal_expr(ScalarValue value, const Token& t) {
    Expr e;
    e.kind = ExprKind::Literal;
    e.literal = std::move(value);
    e.tag.range = t.span;
    return e;
  }

  Expr atom() {
    const Token& t = cur();
    switch (t.kind) {
      case TokenKind::Integer:
        advance();
        return literal_expr(static_cast<std::int64_t>(std::strtoll(t.text.c_str(), nullptr, 10)), t);
      case TokenKind::Float: {
        advance();
        double value = 0.0;
        std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        return literal_expr(value, t);
      }
      case TokenKind::String:
        advance();
        return literal_expr(t.text, t);
      case TokenKind::Boolean:
        advance();
        return literal_expr(t.text == "true", t);
      case TokenKind::LParen: {
        const auto begin = advance().span.begin;
        Expr inner = expression();
        expect(TokenKind::RParen, "')'");
        inner.tag.range = {begin, prev_end()};
        return inner;
      }
      case TokenKind::LBracket: return list_literal();
      case TokenKind::LBrace: return map_literal();
      case TokenKind::Identifier:
        if (peek().kind == TokenKind::LParen) return function_call();
        {
          advance();
          Expr e;
          e.kind = ExprKind::Variable;
          e.name = t.text;
          e.tag.range = t.span;
          return e;
        }
      case TokenKind::Keyword:
        if (t.is_keyword("NULL")) {
          advance();
          return literal_expr(std::monostate{}, t);
        }
        if (t.is_keyword("CASE") || t.is_keyword("EXISTS")) {
          fail_syntax(t, lower(t.text) + " expressions are not supported");
        }
        fail_syntax(t, "unexpected keyword '" + t.text + "' in expression");
      default:
        break;
    }
    fail_syntax(t, "unexpected " + describe(t) + " in expression");
  }

  Expr function_call() {
    const Token& name = advance();
    auto canonical = canonical_function(name.text);
    if (!canonical) fail_syntax(name, "Unknown function '" + name.text + "'");
    advance();  // (
    Expr e;
    e.kind = ExprKind::Function;
    e.name = *canonical;
    e.name_tag.range = name.span;
    if (*canonical == "count" && at(TokenKind::Star)) {
      advance();
      expect(TokenKind::RParen, "')' after count(*");
      e.kind = ExprKind::CountStar;
      e.tag.range = {name.span.begin, prev_end()};
      return e;
    }
    if (at_keyword("DISTINCT")) {
      advance();
      e.distinct = true;
    }
    if (!at(TokenKind::RParen)) {
      e.operands.push_back(expression());
      while (at(TokenKind::Comma)) {
        advance();
        e.operands.push_back(expression());
      }
    }
    expect(TokenKind::RParen, "')' to close function call");
    e.tag.range = {name.span.begin, prev_end()};
    return e;
  }

  Expr list_literal() {
    const auto begin = advance().span.begin;
    Expr e;
    e.kind = ExprKind::List;
    if (!at(TokenKind::RBracket)) {
      e.operands.push_back(expression());
      while (at(TokenKind::Comma)) {
        advance();
        e.operands.push_back(expression());
      }
    }
    expect(TokenKind::RBracket, "']' to close list");
    e.tag.range = {begin, prev_end()};
    return e;
  }

  Expr map_literal() {
    const auto begin = expect(TokenKind::LBrace, "'{'").span.begin;
    Expr e;
    e.kind = ExprKind::Map;
    if (!at(TokenKind::RBrace)) {
      while (true) {
        const auto& key = schema_name("map key");
        expect(TokenKind::Colon, "':' after map key");
        e.keys.push_back(key.text);
        e.key_tags.push_back(SourceTag{key.span});
        e.operands.push_back(expression());
        if (!at(TokenKind::Comma)) break;
        advance();
      }
    }
    expect(TokenKind::RBrace, "'}' to close map");
    e.tag.range = {begin, prev_end()};
    return e;
  }

  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
};

}  // namespace

QueryAst parse(const std::vector<Token>& tokens) {
  QueryAst ast = Parser(tokens).query();
  auto scope_errors = detail::analyze(ast, nullptr);
  if (!scope_errors.empty()) throw QueryError(scope_errors.front());
  return ast;
}

QueryAst parse_query(std::string_view source) { return parse(tokenize(source)); }

}  // namespace cyscale
