#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace facilmut {

/// Fully terminal expression tree. A leaf holds a terminal token. An interior
/// node with a non-empty token is a binary operator applied to its two
/// children; an interior node with an empty token is a plain group of symbols.
struct ExprNode {
    std::string token;
    std::vector<ExprNode> children;

    static ExprNode leaf(std::string token) { return {std::move(token), {}}; }
    static ExprNode binary(std::string op, ExprNode lhs, ExprNode rhs);
    /// Builds the node for a multi-symbol production: `x op y` with a terminal
    /// in the middle becomes a binary node, anything else a group.
    static ExprNode from_sequence(std::vector<ExprNode> items);

    bool is_leaf() const noexcept { return children.empty(); }
    bool operator==(const ExprNode&) const = default;
};

/// Fully parenthesized infix rendering with single spaces. No algebraic or
/// commutative normalization: `(grad + 0.0)` and `(0.0 + grad)` differ.
std::string canonicalize(const ExprNode& root);

/// Derived expression plus its canonical string, the behaviour identity used
/// by the archive.
class Phenotype {
public:
    Phenotype() : Phenotype(ExprNode::leaf("0.0")) {}
    explicit Phenotype(ExprNode root) : root_(std::move(root)), canonical_(canonicalize(root_)) {}

    const ExprNode& root() const noexcept { return root_; }
    const std::string& canonical() const noexcept { return canonical_; }

    bool operator==(const Phenotype& other) const { return canonical_ == other.canonical_; }

private:
    ExprNode root_;
    std::string canonical_;
};

/// Inverse of canonicalize. Throws std::invalid_argument on unbalanced or
/// empty input.
Phenotype parse_phenotype(std::string_view canonical);

inline constexpr std::string_view kGradientToken = "grad";

/// True iff the gradient terminal occurs anywhere in the tree.
bool uses_gradient(const Phenotype& phenotype);

}  // namespace facilmut
