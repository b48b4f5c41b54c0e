#include "facilmut/phenotype.hpp"

#include <stdexcept>

namespace facilmut {

ExprNode ExprNode::binary(std::string op, ExprNode lhs, ExprNode rhs) {
    ExprNode node{std::move(op), {}};
    node.children.reserve(2);
    node.children.push_back(std::move(lhs));
    node.children.push_back(std::move(rhs));
    return node;
}

ExprNode ExprNode::from_sequence(std::vector<ExprNode> items) {
    if (items.size() == 1) {
        return std::move(items.front());
    }
    if (items.size() == 3 && items[1].is_leaf()) {
        return binary(std::move(items[1].token), std::move(items[0]), std::move(items[2]));
    }
    return ExprNode{std::string(), std::move(items)};
}

namespace {

void render(const ExprNode& node, std::string& out) {
    if (node.is_leaf()) {
        out += node.token;
        return;
    }
    out += '(';
    if (!node.token.empty() && node.children.size() == 2) {
        render(node.children[0], out);
        out += ' ';
        out += node.token;
        out += ' ';
        render(node.children[1], out);
    } else {
        for (std::size_t i = 0; i < node.children.size(); ++i) {
            if (i > 0) {
                out += ' ';
            }
            render(node.children[i], out);
        }
    }
    out += ')';
}

bool contains_token(const ExprNode& node, std::string_view token) {
    if (node.is_leaf()) {
        return node.token == token;
    }
    for (const auto& child : node.children) {
        if (contains_token(child, token)) {
            return true;
        }
    }
    return false;
}

class CanonicalParser {
public:
    explicit CanonicalParser(std::string_view text) : text_(text) {}

    ExprNode parse() {
        ExprNode node = item();
        skip_spaces();
        if (pos_ != text_.size()) {
            fail("trailing input");
        }
        return node;
    }

private:
    ExprNode item() {
        skip_spaces();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        if (text_[pos_] == ')') {
            fail("unexpected ')'");
        }
        if (text_[pos_] != '(') {
            const auto start = pos_;
            while (pos_ < text_.size() && text_[pos_] != ' ' && text_[pos_] != '(' && text_[pos_] != ')') {
                ++pos_;
            }
            return ExprNode::leaf(std::string(text_.substr(start, pos_ - start)));
        }
        ++pos_;
        std::vector<ExprNode> items;
        for (;;) {
            skip_spaces();
            if (pos_ >= text_.size()) {
                fail("unbalanced '('");
            }
            if (text_[pos_] == ')') {
                ++pos_;
                break;
            }
            items.push_back(item());
        }
        if (items.size() < 2) {
            fail("groups need at least two items");
        }
        return ExprNode::from_sequence(std::move(items));
    }

    void skip_spaces() {
        while (pos_ < text_.size() && text_[pos_] == ' ') {
            ++pos_;
        }
    }

    [[noreturn]] void fail(const char* what) const {
        throw std::invalid_argument(std::string("cannot parse phenotype '") + std::string(text_) + "': " + what +
                                    " at offset " + std::to_string(pos_));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string canonicalize(const ExprNode& root) {
    std::string out;
    render(root, out);
    return out;
}

Phenotype parse_phenotype(std::string_view canonical) {
    return Phenotype(CanonicalParser(canonical).parse());
}

bool uses_gradient(const Phenotype& phenotype) {
    return contains_token(phenotype.root(), kGradientToken);
}

}  // namespace facilmut
