#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "cyscale/diagnostic.hpp"

namespace cyscale {

enum class TokenKind {
  Keyword,
  Identifier,
  Integer,
  Float,
  String,
  Boolean,
  LParen,
  RParen,
  LBracket,
  RBracket,
  LBrace,
  RBrace,
  Colon,
  Comma,
  Dot,
  DotDot,
  Pipe,
  Star,
  Plus,
  Dash,
  Slash,
  Percent,
  Caret,
  Eq,
  Neq,
  Lt,
  Le,
  Gt,
  Ge,
  RegexMatch,
  ArrowLeft,   // <-
  ArrowRight,  // ->
  Semicolon,
  End,
};

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::End;
  /// Source spelling, except: string literals hold the unescaped value,
  /// back-quoted identifiers hold the bare name, booleans are lower-case.
  std::string text;
  SourceRange span;

  /// Case-insensitive keyword test; `upper` must be upper-case.
  bool is_keyword(std::string_view upper) const;
  friend bool operator==(const Token&, const Token&) = default;
};

/// Splits a query into tokens, terminated by an End token. Keywords are
/// case-insensitive. Throws QueryError (SyntaxError class) on an
/// unterminated string/comment or an illegal character.
std::vector<Token> tokenize(std::string_view source);

bool is_keyword(std::string_view upper_word);

}  // namespace cyscale
