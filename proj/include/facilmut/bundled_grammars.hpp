#pragma once

#include <string_view>
#include <vector>

#include "facilmut/grammar.hpp"

namespace facilmut {

/// Names of grammars compiled into the library from grammars/*.bnf.
inline constexpr std::string_view kOriginalGrammar = "autolr_original";
inline constexpr std::string_view kFacilitatedGrammar = "autolr_facilitated";

std::vector<std::string_view> bundled_grammar_names();

/// Source text of a bundled grammar. Throws std::out_of_range for unknown names.
std::string_view bundled_grammar_source(std::string_view name);

/// Parsed bundled grammar, built once and shared.
const Grammar& bundled_grammar(std::string_view name);

}  // namespace facilmut
