#include "cyscale/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>

namespace cyscale {

namespace {

constexpr std::array<std::string_view, 44> kKeywords{
    "MATCH",  "OPTIONAL", "WHERE",   "WITH",     "RETURN", "DISTINCT", "ORDER",   "BY",
    "ASC",    "ASCENDING", "DESC",   "DESCENDING", "SKIP", "LIMIT",    "AND",     "OR",
    "XOR",    "NOT",      "AS",      "IS",       "NULL",   "IN",       "STARTS",  "ENDS",
    "CONTAINS", "CREATE", "MERGE",   "DELETE",   "DETACH", "SET",      "REMOVE",  "CALL",
    "UNWIND", "UNION",    "YIELD",   "FOREACH",  "LOAD",   "CASE",     "WHEN",    "THEN",
    "ELSE",   "END",      "EXISTS",  "ON",
};

bool is_ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    while (true) {
      skip_trivia();
      if (pos_ >= src_.size()) break;
      tokens.push_back(next());
    }
    tokens.push_back(Token{TokenKind::End, "", {src_.size(), src_.size()}});
    return tokens;
  }

 private:
  [[noreturn]] void fail(std::size_t begin, std::size_t end, std::string detail) const {
    throw QueryError(Diagnostic{MessageClass::SyntaxError, {begin, std::min(end, src_.size())},
                                std::move(detail)});
  }

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void skip_trivia() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '/' && peek(1) == '*') {
        const auto close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) fail(pos_, src_.size(), "unterminated block comment");
        pos_ = close + 2;
      } else {
        break;
      }
    }
  }

  Token make(TokenKind kind, std::size_t begin, std::string text) {
    return Token{kind, std::move(text), {begin, pos_}};
  }

  Token punct(TokenKind kind, std::size_t length) {
    const auto begin = pos_;
    pos_ += length;
    return make(kind, begin, std::string(src_.substr(begin, length)));
  }

  Token next() {
    const auto begin = pos_;
    const char c = src_[pos_];
    const auto uc = static_cast<unsigned char>(c);

    if (is_ident_start(uc)) return word();
    if (std::isdigit(uc)) return number();
    if (c == '\'' || c == '"') return string_literal();
    if (c == '`') return quoted_identifier();

    switch (c) {
      case '(': return punct(TokenKind::LParen, 1);
      case ')': return punct(TokenKind::RParen, 1);
      case '[': return punct(TokenKind::LBracket, 1);
      case ']': return punct(TokenKind::RBracket, 1);
      case '{': return punct(TokenKind::LBrace, 1);
      case '}': return punct(TokenKind::RBrace, 1);
      case ':': return punct(TokenKind::Colon, 1);
      case ',': return punct(TokenKind::Comma, 1);
      case '|': return punct(TokenKind::Pipe, 1);
      case '*': return punct(TokenKind::Star, 1);
      case '+': return punct(TokenKind::Plus, 1);
      case '/': return punct(TokenKind::Slash, 1);
      case '%': return punct(TokenKind::Percent, 1);
      case '^': return punct(TokenKind::Caret, 1);
      case ';': return punct(TokenKind::Semicolon, 1);
      case '.':
        if (peek(1) == '.') return punct(TokenKind::DotDot, 2);
        if (std::isdigit(static_cast<unsigned char>(peek(1)))) return number();
        return punct(TokenKind::Dot, 1);
      case '-':
        if (peek(1) == '>') return punct(TokenKind::ArrowRight, 2);
        return punct(TokenKind::Dash, 1);
      case '<':
        if (peek(1) == '-') return punct(TokenKind::ArrowLeft, 2);
        if (peek(1) == '=') return punct(TokenKind::Le, 2);
        if (peek(1) == '>') return punct(TokenKind::Neq, 2);
        return punct(TokenKind::Lt, 1);
      case '>':
        if (peek(1) == '=') return punct(TokenKind::Ge, 2);
        return punct(TokenKind::Gt, 1);
      case '=':
        if (peek(1) == '~') return punct(TokenKind::RegexMatch, 2);
        return punct(TokenKind::Eq, 1);
      default:
        break;
    }
    if (c == '$') fail(begin, begin + 1, "query parameters are not supported");
    fail(begin, begin + 1, "illegal character '" + std::string(1, c) + "'");
  }

  Token word() {
    const auto begin = pos_;
    while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    const auto raw = src_.substr(begin, pos_ - begin);
    const auto up = upper(raw);
    if (up == "TRUE" || up == "FALSE") {
      return make(TokenKind::Boolean, begin, up == "TRUE" ? "true" : "false");
    }
    if (is_keyword(up)) return make(TokenKind::Keyword, begin, std::string(raw));
    return make(TokenKind::Identifier, begin, std::string(raw));
  }

  Token number() {
    const auto begin = pos_;
    bool is_float = false;
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      is_float = true;
      ++pos_;
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t ahead = 1;
      if (peek(1) == '+' || peek(1) == '-') ahead = 2;
      if (std::isdigit(static_cast<unsigned char>(peek(ahead)))) {
        is_float = true;
        pos_ += ahead;
        while (std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
      }
    }
    if (is_ident_char(static_cast<unsigned char>(peek()))) {
      while (pos_ < src_.size() && is_ident_char(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      fail(begin, pos_, "invalid number '" + std::string(src_.substr(begin, pos_ - begin)) + "'");
    }
    auto text = std::string(src_.substr(begin, pos_ - begin));
    if (!is_float) {
      std::int64_t value = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc{}) fail(begin, pos_, "integer literal out of range: " + text);
      (void)ptr;
      return make(TokenKind::Integer, begin, text);
    }
    return make(TokenKind::Float, begin, text);
  }

  Token string_literal() {
    const auto begin = pos_;
    const char quote = src_[pos_++];
    std::string value;
    while (true) {
      if (pos_ >= src_.size()) fail(begin, src_.size(), "unterminated string literal");
      const char c = src_[pos_++];
      if (c == quote) break;
      if (c != '\\') {
        value.push_back(c);
        continue;
      }
      if (pos_ >= src_.size()) fail(begin, src_.size(), "unterminated string literal");
      const char esc = src_[pos_++];
      switch (esc) {
        case '\\': value.push_back('\\'); break;
        case '\'': value.push_back('\''); break;
        case '"': value.push_back('"'); break;
        case 'n': value.push_back('\n'); break;
        case 't': value.push_back('\t'); break;
        case 'r': value.push_back('\r'); break;
        case 'b': value.push_back('\b'); break;
        case 'f': value.push_back('\f'); break;
        default:
          fail(pos_ - 2, pos_, std::string("invalid escape sequence '\\") + esc + "'");
      }
    }
    return make(TokenKind::String, begin, std::move(value));
  }

  Token quoted_identifier() {
    const auto begin = pos_++;
    const auto close = src_.find('`', pos_);
    if (close == std::string_view::npos) fail(begin, src_.size(), "unterminated quoted identifier");
    auto name = std::string(src_.substr(pos_, close - pos_));
    pos_ = close + 1;
    if (name.empty()) fail(begin, pos_, "empty quoted identifier");
    return make(TokenKind::Identifier, begin, std::move(name));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

bool is_keyword(std::string_view upper_word) {
  return std::find(kKeywords.begin(), kKeywords.end(), upper_word) != kKeywords.end();
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Keyword: return "keyword";
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Integer: return "integer";
    case TokenKind::Float: return "float";
    case TokenKind::String: return "string";
    case TokenKind::Boolean: return "boolean";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::LBracket: return "'['";
    case TokenKind::RBracket: return "']'";
    case TokenKind::LBrace: return "'{'";
    case TokenKind::RBrace: return "'}'";
    case TokenKind::Colon: return "':'";
    case TokenKind::Comma: return "','";
    case TokenKind::Dot: return "'.'";
    case TokenKind::DotDot: return "'..'";
    case TokenKind::Pipe: return "'|'";
    case TokenKind::Star: return "'*'";
    case TokenKind::Plus: return "'+'";
    case TokenKind::Dash: return "'-'";
    case TokenKind::Slash: return "'/'";
    case TokenKind::Percent: return "'%'";
    case TokenKind::Caret: return "'^'";
    case TokenKind::Eq: return "'='";
    case TokenKind::Neq: return "'<>'";
    case TokenKind::Lt: return "'<'";
    case TokenKind::Le: return "'<='";
    case TokenKind::Gt: return "'>'";
    case TokenKind::Ge: return "'>='";
    case TokenKind::RegexMatch: return "'=~'";
    case TokenKind::ArrowLeft: return "'<-'";
    case TokenKind::ArrowRight: return "'->'";
    case TokenKind::Semicolon: return "';'";
    case TokenKind::End: return "end of input";
  }
  return "token";
}

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

bool Token::is_keyword(std::string_view upper_word) const {
  return kind == TokenKind::Keyword && upper(text) == upper_word;
}

}  // namespace cyscale
