#pragma once

#include <string_view>
#include <vector>

#include "cyscale/ast.hpp"
#include "cyscale/diagnostic.hpp"
#include "cyscale/schema.hpp"

namespace cyscale {

/// Schema diagnostics for a parsed query, sorted by source position. Empty
/// when every label, relationship type, endpoint pairing, direction and
/// property access is declared by `schema`.
std::vector<Diagnostic> validate(const QueryAst& ast, const GraphSchema& schema);

/// Lex, parse and validate `source`. A lexical or syntax failure yields a
/// single diagnostic; otherwise the result of `validate`.
std::vector<Diagnostic> check_query(std::string_view source, const GraphSchema& schema);

namespace detail {

/// Scope walk shared by the parser (schema == nullptr: variable scoping
/// only) and the validator (schema checks as well).
std::vector<Diagnostic> analyze(const QueryAst& ast, const GraphSchema* schema);

}  // namespace detail

}  // namespace cyscale
