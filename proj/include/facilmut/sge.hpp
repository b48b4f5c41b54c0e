#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facilmut/grammar.hpp"
#include "facilmut/phenotype.hpp"
#include "facilmut/random.hpp"

namespace facilmut {

/// Structured genotype: one ordered codon list per non-terminal, in grammar
/// order. A codon selects a production of its non-terminal.
struct Genotype {
    std::vector<std::vector<int>> codons;

    Genotype() = default;
    explicit Genotype(std::size_t nonterminal_count) : codons(nonterminal_count) {}

    bool operator==(const Genotype&) const = default;
};

/// True when there is a list per non-terminal and every codon is in range.
bool is_valid(const Genotype& genotype, const Grammar& grammar);

/// Per-non-terminal mutation probabilities keyed by bare non-terminal name
/// (no angle brackets), with a fallback for unlisted names.
class MutationPolicy {
public:
    explicit MutationPolicy(double default_rate = 0.0, std::map<std::string, double> rates = {});

    /// Single rate for every non-terminal.
    static MutationPolicy homogeneous(double rate);
    /// Tiered rates: constants 0.15, constant/variable choice 0.05, everything else 0.01.
    static MutationPolicy facilitated();

    double rate_for(std::string_view nonterminal) const;
    double default_rate() const noexcept { return default_rate_; }
    const std::map<std::string, double>& rates() const noexcept { return rates_; }
    bool is_homogeneous() const noexcept { return rates_.empty(); }

    bool operator==(const MutationPolicy&) const = default;

private:
    double default_rate_;
    std::map<std::string, double> rates_;
};

struct MappingOutcome {
    Phenotype phenotype;
    /// Codons read per non-terminal; the active prefix of each list.
    std::vector<int> consumed;
    /// Codons appended at random per non-terminal because the list ran out.
    std::vector<int> appended;
    /// Deepest derivation level reached (root expansion is level 1).
    int depth_used = 0;
};

/// Random derivation bounded by max_depth, choosing uniformly among the
/// productions that still fit the remaining budget at every expansion.
Genotype random_genotype(const Grammar& grammar, int max_depth, Rng& rng);

/// Leftmost derivation from the start symbol. Depth-infeasible codons are
/// remapped by modulus into the feasible subset; exhausted lists are extended
/// in place with uniform feasible codons drawn from `rng`.
MappingOutcome map_genotype(const Grammar& grammar, Genotype& genotype, int max_depth, Rng& rng);

/// Per-codon mutation of the active prefix (`active_mask[i]` codons of
/// non-terminal i). A fired mutation always changes the codon. Non-terminals
/// with a single production are never touched.
Genotype mutate(const Genotype& genotype, const Grammar& grammar, const MutationPolicy& policy,
                std::span<const int> active_mask, Rng& rng);

/// Uniform whole-list crossover: each non-terminal's codon list is copied from
/// `a` or `b` with probability 1/2.
Genotype crossover(const Genotype& a, const Genotype& b, const Grammar& grammar, Rng& rng);

}  // namespace facilmut
