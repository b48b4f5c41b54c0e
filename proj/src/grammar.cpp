#include "facilmut/grammar.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

namespace facilmut {

GrammarError::GrammarError(const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(line == 0 ? message : fmt::format("{}:{}: {}", line, column, message)),
      line_(line),
      column_(column) {}

namespace {

struct Token {
    std::string text;
    std::size_t line;
    std::size_t column;
};

bool is_nonterminal_token(std::string_view token) {
    if (token.size() < 3 || token.front() != '<' || token.back() != '>') {
        return false;
    }
    const auto inner = token.substr(1, token.size() - 2);
    return inner.find_first_of("<>") == std::string_view::npos;
}

std::string strip_brackets(std::string_view token) {
    return std::string(token.substr(1, token.size() - 2));
}

// Splits the source into logical rules, each a flat token list.
std::vector<std::vector<Token>> tokenize(std::string_view source) {
    std::vector<std::vector<Token>> rules;
    std::vector<Token> current;
    bool continuing = false;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= source.size()) {
        auto eol = source.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = source.size();
        }
        std::string_view line = source.substr(pos, eol - pos);
        ++line_no;
        pos = eol + 1;

        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }

        std::vector<Token> tokens;
        std::size_t i = 0;
        while (i < line.size()) {
            if (line[i] == ' ' || line[i] == '\t') {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j < line.size() && line[j] != ' ' && line[j] != '\t') {
                ++j;
            }
            tokens.push_back({std::string(line.substr(i, j - i)), line_no, i + 1});
            i = j;
        }

        bool continues = false;
        if (!tokens.empty() && tokens.back().text == "\\") {
            tokens.pop_back();
            continues = true;
        } else if (!tokens.empty() && tokens.back().text.size() > 1 && tokens.back().text.back() == '\\') {
            tokens.back().text.pop_back();
            continues = true;
        }

        if (!continuing && !current.empty()) {
            rules.push_back(std::move(current));
            current.clear();
        }
        current.insert(current.end(), tokens.begin(), tokens.end());
        continuing = continues;

        if (eol == source.size()) {
            break;
        }
    }
    if (continuing) {
        throw GrammarError("line continuation at end of input", line_no, 1);
    }
    if (!current.empty()) {
        rules.push_back(std::move(current));
    }
    return rules;
}

struct RawRule {
    Token lhs;
    std::vector<std::vector<Token>> alternatives;
};

RawRule parse_rule(const std::vector<Token>& tokens) {
    const Token& head = tokens.front();
    if (!is_nonterminal_token(head.text)) {
        throw GrammarError(fmt::format("expected non-terminal on left-hand side, found '{}'", head.text),
                           head.line, head.column);
    }
    if (tokens.size() < 2 || tokens[1].text != "::=") {
        const Token& where = tokens.size() < 2 ? head : tokens[1];
        throw GrammarError("expected '::=' after rule name", where.line,
                           tokens.size() < 2 ? head.column + head.text.size() : where.column);
    }

    RawRule rule{head, {{}}};
    const Token* last = &tokens[1];
    for (std::size_t i = 2; i < tokens.size(); ++i) {
        const Token& tok = tokens[i];
        if (tok.text == "|") {
            if (rule.alternatives.back().empty()) {
                throw GrammarError("empty alternative", tok.line, tok.column);
            }
            rule.alternatives.emplace_back();
        } else if (tok.text == "::=") {
            throw GrammarError("unexpected '::=' inside rule body", tok.line, tok.column);
        } else {
            rule.alternatives.back().push_back(tok);
        }
        last = &tok;
    }
    if (rule.alternatives.back().empty()) {
        throw GrammarError("empty alternative", last->line, last->column + last->text.size());
    }
    return rule;
}

}  // namespace

void compute_depths(std::vector<NonTerminal>& nonterminals) {
    for (auto& nt : nonterminals) {
        nt.min_depth = kUnboundedDepth;
        for (auto& p : nt.productions) {
            p.min_depth = kUnboundedDepth;
        }
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& nt : nonterminals) {
            for (auto& p : nt.productions) {
                int deepest = 0;
                bool finite = true;
                for (const auto& s : p.symbols) {
                    if (s.is_terminal()) {
                        continue;
                    }
                    const int d = nonterminals[s.ref].min_depth;
                    if (d == kUnboundedDepth) {
                        finite = false;
                        break;
                    }
                    deepest = std::max(deepest, d);
                }
                if (finite && 1 + deepest < p.min_depth) {
                    p.min_depth = 1 + deepest;
                    changed = true;
                }
                if (p.min_depth < nt.min_depth) {
                    nt.min_depth = p.min_depth;
                    changed = true;
                }
            }
        }
    }

    for (const auto& nt : nonterminals) {
        if (nt.min_depth == kUnboundedDepth) {
            throw GrammarError(fmt::format("non-terminal <{}> is unproductive (no finite derivation)", nt.name));
        }
    }

    // recursive(N): N reachable from its own direct references.
    const std::size_t n = nonterminals.size();
    for (std::size_t root = 0; root < n; ++root) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack;
        for (const auto& p : nonterminals[root].productions) {
            for (const auto& s : p.symbols) {
                if (!s.is_terminal() && !seen[s.ref]) {
                    seen[s.ref] = true;
                    stack.push_back(s.ref);
                }
            }
        }
        while (!stack.empty()) {
            const auto cur = stack.back();
            stack.pop_back();
            for (const auto& p : nonterminals[cur].productions) {
                for (const auto& s : p.symbols) {
                    if (!s.is_terminal() && !seen[s.ref]) {
                        seen[s.ref] = true;
                        stack.push_back(s.ref);
                    }
                }
            }
        }
        nonterminals[root].recursive = seen[root];
    }
}

Grammar::Grammar(std::vector<NonTerminal> nonterminals) : nonterminals_(std::move(nonterminals)) {
    if (nonterminals_.empty()) {
        throw GrammarError("grammar has no rules");
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < nonterminals_.size(); ++i) {
        const auto& nt = nonterminals_[i];
        if (!index.emplace(nt.name, i).second) {
            throw GrammarError(fmt::format("duplicate definition of <{}>", nt.name));
        }
        if (nt.productions.empty()) {
            throw GrammarError(fmt::format("<{}> has no productions", nt.name));
        }
    }
    for (auto& nt : nonterminals_) {
        for (auto& p : nt.productions) {
            if (p.symbols.empty()) {
                throw GrammarError(fmt::format("<{}> has an empty production", nt.name));
            }
            for (auto& s : p.symbols) {
                if (s.is_terminal()) {
                    if (s.text.empty()) {
                        throw GrammarError(fmt::format("<{}> has an empty terminal", nt.name));
                    }
                    continue;
                }
                auto it = index.find(s.text);
                if (it == index.end()) {
                    throw GrammarError(fmt::format("undefined non-terminal <{}> referenced from <{}>", s.text, nt.name));
                }
                s.ref = it->second;
            }
        }
    }
    compute_depths(nonterminals_);
}

std::optional<std::size_t> Grammar::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < nonterminals_.size(); ++i) {
        if (nonterminals_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

const NonTerminal& Grammar::by_name(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) {
        throw std::out_of_range(fmt::format("no non-terminal <{}>", name));
    }
    return nonterminals_[*idx];
}

std::set<std::string> Grammar::terminals() const {
    std::set<std::string> out;
    for (const auto& nt : nonterminals_) {
        for (const auto& p : nt.productions) {
            for (const auto& s : p.symbols) {
                if (s.is_terminal()) {
                    out.insert(s.text);
                }
            }
        }
    }
    return out;
}

std::string Grammar::to_string() const {
    std::ostringstream out;
    for (const auto& nt : nonterminals_) {
        out << '<' << nt.name << "> ::=";
        for (std::size_t i = 0; i < nt.productions.size(); ++i) {
            if (i > 0) {
                out << " |";
            }
            for (const auto& s : nt.productions[i].symbols) {
                out << ' ';
                if (s.is_terminal()) {
                    out << s.text;
                } else {
                    out << '<' << s.text << '>';
                }
            }
        }
        out << '\n';
    }
    return out.str();
}

Grammar parse_grammar(std::string_view source) {
    const auto token_rules = tokenize(source);
    if (token_rules.empty()) {
        throw GrammarError("grammar has no rules");
    }

    std::vector<RawRule> rules;
    rules.reserve(token_rules.size());
    std::map<std::string, const Token*> defined;
    for (const auto& tokens : token_rules) {
        rules.push_back(parse_rule(tokens));
    }
    for (const auto& rule : rules) {
        auto name = strip_brackets(rule.lhs.text);
        auto [it, inserted] = defined.emplace(name, &rule.lhs);
        if (!inserted) {
            throw GrammarError(fmt::format("duplicate definition of <{}> (first defined at line {})", name,
                                           it->second->line),
                               rule.lhs.line, rule.lhs.column);
        }
    }

    std::vector<NonTerminal> nonterminals;
    nonterminals.reserve(rules.size());
    for (const auto& rule : rules) {
        NonTerminal nt;
        nt.name = strip_brackets(rule.lhs.text);
        for (const auto& alt : rule.alternatives) {
            Production p;
            for (const auto& tok : alt) {
                Symbol s;
                if (is_nonterminal_token(tok.text)) {
                    s.kind = Symbol::Kind::NonTerminal;
                    s.text = strip_brackets(tok.text);
                    if (!defined.contains(s.text)) {
                        throw GrammarError(fmt::format("undefined non-terminal <{}>", s.text), tok.line, tok.column);
                    }
                } else {
                    s.kind = Symbol::Kind::Terminal;
                    s.text = tok.text;
                }
                p.symbols.push_back(std::move(s));
            }
            nt.productions.push_back(std::move(p));
        }
        nonterminals.push_back(std::move(nt));
    }

    try {
        return Grammar(std::move(nonterminals));
    } catch (const GrammarError& e) {
        // Attach the defining line to unproductive non-terminal errors.
        for (const auto& rule : rules) {
            const auto tag = "<" + strip_brackets(rule.lhs.text) + ">";
            if (std::string_view(e.what()).find(tag) != std::string_view::npos) {
                throw GrammarError(e.what(), rule.lhs.line, rule.lhs.column);
            }
        }
        throw;
    }
}

}  // namespace facilmut
