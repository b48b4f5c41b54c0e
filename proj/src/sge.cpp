#include "facilmut/sge.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace facilmut {

bool is_valid(const Genotype& genotype, const Grammar& grammar) {
    if (genotype.codons.size() != grammar.size()) {
        return false;
    }
    for (std::size_t i = 0; i < grammar.size(); ++i) {
        const int count = static_cast<int>(grammar[i].productions.size());
        for (int c : genotype.codons[i]) {
            if (c < 0 || c >= count) {
                return false;
            }
        }
    }
    return true;
}

MutationPolicy::MutationPolicy(double default_rate, std::map<std::string, double> rates)
    : default_rate_(default_rate), rates_(std::move(rates)) {
    auto check = [](std::string_view what, double r) {
        if (!(r >= 0.0 && r <= 1.0)) {
            throw std::invalid_argument(fmt::format("mutation rate for {} must be in [0,1], got {}", what, r));
        }
    };
    check("default", default_rate_);
    for (const auto& [name, r] : rates_) {
        check(name, r);
    }
}

MutationPolicy MutationPolicy::homogeneous(double rate) { return MutationPolicy(rate); }

MutationPolicy MutationPolicy::facilitated() {
    return MutationPolicy(0.01, {{"const", 0.15}, {"var_const", 0.05}});
}

double MutationPolicy::rate_for(std::string_view nonterminal) const {
    auto it = rates_.find(std::string(nonterminal));
    return it == rates_.end() ? default_rate_ : it->second;
}

namespace {

// Shared leftmost-derivation walker. `Chooser` returns the production index
// to expand given the non-terminal and its depth-feasible subset.
template <typename Chooser>
class Deriver {
public:
    Deriver(const Grammar& grammar, int max_depth, Chooser choose)
        : grammar_(grammar), max_depth_(max_depth), choose_(std::move(choose)) {}

    ExprNode expand(std::size_t nt_index, int depth) {
        depth_used_ = std::max(depth_used_, depth);
        const NonTerminal& nt = grammar_[nt_index];
        const int budget = max_depth_ - depth + 1;

        feasible_.clear();
        for (std::size_t i = 0; i < nt.productions.size(); ++i) {
            if (nt.productions[i].min_depth <= budget) {
                feasible_.push_back(static_cast<int>(i));
            }
        }
        if (feasible_.empty()) {
            throw std::logic_error(
                fmt::format("no depth-feasible production for <{}> at depth {} (max {})", nt.name, depth, max_depth_));
        }

        const int chosen = choose_(nt_index, std::span<const int>(feasible_));
        const Production& production = nt.productions[static_cast<std::size_t>(chosen)];

        std::vector<ExprNode> items;
        items.reserve(production.symbols.size());
        for (const auto& symbol : production.symbols) {
            if (symbol.is_terminal()) {
                items.push_back(ExprNode::leaf(symbol.text));
            } else {
                items.push_back(expand(symbol.ref, depth + 1));
            }
        }
        return ExprNode::from_sequence(std::move(items));
    }

    int depth_used() const noexcept { return depth_used_; }

private:
    const Grammar& grammar_;
    int max_depth_;
    Chooser choose_;
    std::vector<int> feasible_;
    int depth_used_ = 0;
};

template <typename Chooser>
Deriver(const Grammar&, int, Chooser) -> Deriver<Chooser>;

void require_depth(const Grammar& grammar, int max_depth) {
    if (max_depth < grammar.start().min_depth) {
        throw std::invalid_argument(fmt::format("max depth {} is below the minimum derivation depth {} of <{}>",
                                                max_depth, grammar.start().min_depth, grammar.start().name));
    }
}

int uniform_pick(std::span<const int> options, Rng& rng) {
    std::uniform_int_distribution<std::size_t> dist(0, options.size() - 1);
    return options[dist(rng)];
}

}  // namespace

Genotype random_genotype(const Grammar& grammar, int max_depth, Rng& rng) {
    require_depth(grammar, max_depth);
    Genotype genotype(grammar.size());
    Deriver deriver(grammar, max_depth, [&](std::size_t nt, std::span<const int> feasible) {
        const int pick = uniform_pick(feasible, rng);
        genotype.codons[nt].push_back(pick);
        return pick;
    });
    deriver.expand(grammar.start_index(), 1);
    return genotype;
}

MappingOutcome map_genotype(const Grammar& grammar, Genotype& genotype, int max_depth, Rng& rng) {
    require_depth(grammar, max_depth);
    if (genotype.codons.size() != grammar.size()) {
        throw std::invalid_argument("genotype does not match grammar");
    }
    std::vector<int> consumed(grammar.size(), 0);
    std::vector<int> appended(grammar.size(), 0);

    Deriver deriver(grammar, max_depth, [&](std::size_t nt, std::span<const int> feasible) {
        auto& list = genotype.codons[nt];
        auto& cursor = consumed[nt];
        if (static_cast<std::size_t>(cursor) == list.size()) {
            list.push_back(uniform_pick(feasible, rng));
            ++appended[nt];
        }
        const int codon = list[static_cast<std::size_t>(cursor++)];
        if (std::find(feasible.begin(), feasible.end(), codon) != feasible.end()) {
            return codon;
        }
        return feasible[static_cast<std::size_t>(codon) % feasible.size()];
    });
    ExprNode root = deriver.expand(grammar.start_index(), 1);

    MappingOutcome outcome;
    outcome.phenotype = Phenotype(std::move(root));
    outcome.consumed = std::move(consumed);
    outcome.appended = std::move(appended);
    outcome.depth_used = deriver.depth_used();
    return outcome;
}

Genotype mutate(const Genotype& genotype, const Grammar& grammar, const MutationPolicy& policy,
                std::span<const int> active_mask, Rng& rng) {
    if (active_mask.size() != grammar.size() || genotype.codons.size() != grammar.size()) {
        throw std::invalid_argument("active mask / genotype size does not match grammar");
    }
    Genotype child = genotype;
    for (std::size_t i = 0; i < grammar.size(); ++i) {
        const int count = static_cast<int>(grammar[i].productions.size());
        if (count < 2) {
            continue;
        }
        const double rate = policy.rate_for(grammar[i].name);
        if (rate <= 0.0) {
            continue;
        }
        std::bernoulli_distribution fire(rate);
        std::uniform_int_distribution<int> other(0, count - 2);
        auto& list = child.codons[i];
        const auto active = std::min<std::size_t>(static_cast<std::size_t>(std::max(active_mask[i], 0)), list.size());
        for (std::size_t k = 0; k < active; ++k) {
            if (fire(rng)) {
                const int r = other(rng);
                list[k] = r >= list[k] ? r + 1 : r;
            }
        }
    }
    return child;
}

Genotype crossover(const Genotype& a, const Genotype& b, const Grammar& grammar, Rng& rng) {
    if (a.codons.size() != grammar.size() || b.codons.size() != grammar.size()) {
        throw std::invalid_argument("parent genotype does not match grammar");
    }
    std::bernoulli_distribution from_a(0.5);
    Genotype child(grammar.size());
    for (std::size_t i = 0; i < grammar.size(); ++i) {
        child.codons[i] = from_a(rng) ? a.codons[i] : b.codons[i];
    }
    return child;
}

}  // namespace facilmut
