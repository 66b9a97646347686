#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mwp {

struct TreeParseError : std::runtime_error {
    size_t offset;
    TreeParseError(const std::string& msg, size_t off)
        : std::runtime_error(msg + " at offset " + std::to_string(off)), offset(off) {}
};

// One node of a bracketed constituency parse. Leaves carry the surface token;
// internal nodes carry children.
struct ParseTree {
    std::string label;
    std::vector<ParseTree> children;
    std::string leaf_token;  // set iff children empty

    bool is_preterminal() const { return children.empty() && !leaf_token.empty(); }
};

namespace detail {

inline void skip_ws(std::string_view s, size_t& i) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
}

inline std::string read_atom(std::string_view s, size_t& i) {
    size_t start = i;
    while (i < s.size() && s[i] != '(' && s[i] != ')' && s[i] != ' ' && s[i] != '\t' &&
           s[i] != '\n' && s[i] != '\r')
        ++i;
    return std::string(s.substr(start, i - start));
}

inline ParseTree parse_node(std::string_view s, size_t& i) {
    skip_ws(s, i);
    if (i >= s.size() || s[i] != '(') throw TreeParseError("expected '('", i);
    size_t open = i++;
    skip_ws(s, i);
    ParseTree node;
    node.label = read_atom(s, i);
    if (node.label.empty()) throw TreeParseError("empty node label", open);
    skip_ws(s, i);
    while (i < s.size() && s[i] != ')') {
        if (s[i] == '(') {
            node.children.push_back(parse_node(s, i));
        } else {
            std::string tok = read_atom(s, i);
            if (tok.empty()) throw TreeParseError("unexpected character", i);
            if (!node.leaf_token.empty() || !node.children.empty())
                throw TreeParseError("mixed leaf and child content", i);
            node.leaf_token = tok;
        }
        skip_ws(s, i);
    }
    if (i >= s.size()) throw TreeParseError("unbalanced parentheses", open);
    ++i;  // consume ')'
    return node;
}

}  // namespace detail

inline ParseTree parse_bracketed_tree(std::string_view tree_string) {
    size_t i = 0;
    ParseTree root = detail::parse_node(tree_string, i);
    detail::skip_ws(tree_string, i);
    if (i != tree_string.size()) throw TreeParseError("trailing content after tree", i);
    return root;
}

inline void serialize_tree(const ParseTree& t, std::string& out) {
    out += '(';
    out += t.label;
    if (t.children.empty()) {
        if (!t.leaf_token.empty()) {
            out += ' ';
            out += t.leaf_token;
        }
    } else {
        for (const auto& c : t.children) {
            out += ' ';
            serialize_tree(c, out);
        }
    }
    out += ')';
}

inline std::string serialize_tree(const ParseTree& t) {
    std::string s;
    serialize_tree(t, s);
    return s;
}

// Labeled nodes on the longest root-to-leaf path; root counted, the surface
// token not. "(X y)" has depth 1.
inline int tree_depth(const ParseTree& t) {
    int best = 0;
    for (const auto& c : t.children) best = std::max(best, tree_depth(c));
    return best + 1;
}

inline int count_label(const ParseTree& t, std::string_view label) {
    int n = t.label == label ? 1 : 0;
    for (const auto& c : t.children) n += count_label(c, label);
    return n;
}

inline int count_preterminal_label(const ParseTree& t, std::string_view label) {
    if (t.children.empty()) return t.label == label ? 1 : 0;
    int n = 0;
    for (const auto& c : t.children) n += count_preterminal_label(c, label);
    return n;
}

}  // namespace mwp
