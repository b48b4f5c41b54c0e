#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace facilmut {

/// Raised for malformed or invalid grammar text. Line and column are 1-based;
/// zero means the error has no single source location.
class GrammarError : public std::runtime_error {
public:
    explicit GrammarError(const std::string& message, std::size_t line = 0, std::size_t column = 0);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

inline constexpr int kUnboundedDepth = std::numeric_limits<int>::max();

struct Symbol {
    enum class Kind { NonTerminal, Terminal };

    Kind kind = Kind::Terminal;
    std::string text;
    /// Index of the referenced non-terminal inside the owning grammar.
    std::size_t ref = 0;

    bool is_terminal() const noexcept { return kind == Kind::Terminal; }
    bool operator==(const Symbol&) const = default;
};

struct Production {
    std::vector<Symbol> symbols;
    int min_depth = kUnboundedDepth;

    bool operator==(const Production&) const = default;
};

struct NonTerminal {
    std::string name;
    std::vector<Production> productions;
    int min_depth = kUnboundedDepth;
    bool recursive = false;

    bool operator==(const NonTerminal&) const = default;
};

/// Immutable context-free grammar. The first non-terminal is the start symbol
/// and production order is significant: codons index into it.
class Grammar {
public:
    /// Validates references, resolves symbol indices and runs the depth analysis.
    explicit Grammar(std::vector<NonTerminal> nonterminals);

    const std::vector<NonTerminal>& nonterminals() const noexcept { return nonterminals_; }
    std::size_t size() const noexcept { return nonterminals_.size(); }
    const NonTerminal& operator[](std::size_t i) const { return nonterminals_[i]; }

    std::size_t start_index() const noexcept { return 0; }
    const NonTerminal& start() const { return nonterminals_.front(); }

    std::optional<std::size_t> index_of(std::string_view name) const;
    const NonTerminal& by_name(std::string_view name) const;

    /// Every distinct terminal token, sorted.
    std::set<std::string> terminals() const;

    /// Renders the grammar back into the text format accepted by parse_grammar.
    std::string to_string() const;

    bool operator==(const Grammar& other) const { return nonterminals_ == other.nonterminals_; }

private:
    std::vector<NonTerminal> nonterminals_;
};

/// Parses the line-oriented BNF format:
///
///     <name> ::= alt1 | alt2 ...   # comment
///
/// Symbols are whitespace-separated, `<...>` tokens reference non-terminals,
/// every other token is a terminal, and a trailing backslash continues the rule
/// on the next line. The first rule's left-hand side is the start symbol.
Grammar parse_grammar(std::string_view source);

/// Fixed-point depth analysis over `nonterminals`, whose symbol `ref` indices
/// must already be resolved. Fills production/non-terminal min_depth and the
/// recursive flag. Throws GrammarError naming the first unproductive
/// non-terminal.
void compute_depths(std::vector<NonTerminal>& nonterminals);

}  // namespace facilmut
