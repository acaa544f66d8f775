#pragma once

#include <string_view>
#include <vector>

#include "cyscale/ast.hpp"
#include "cyscale/lexer.hpp"

namespace cyscale {

/// Builds the syntax tree for a token stream produced by `tokenize`, then
/// checks variable scoping. Throws QueryError carrying the first violation:
/// MalformedPath for broken relationship/arrow syntax, SyntaxError for
/// everything else (including unbound variables and unsupported clauses).
QueryAst parse(const std::vector<Token>& tokens);

/// tokenize + parse.
QueryAst parse_query(std::string_view source);

}  // namespace cyscale
