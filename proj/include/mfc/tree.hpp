#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mfc/error.hpp"

namespace mfc {

// Ordered labeled tree read from a bracketed parse such as (NP (DT a) (NN cat)).
// Bare tokens become leaf nodes.
struct ParseTree {
    std::string label;
    std::vector<ParseTree> children;

    bool operator==(const ParseTree&) const = default;
};

inline std::size_t tree_size(const ParseTree& t) {
    std::size_t n = 1;
    for (const auto& c : t.children) {
        n += tree_size(c);
    }
    return n;
}

// Nodes on the longest root-to-leaf path; a single node has height 1.
inline std::size_t tree_height(const ParseTree& t) {
    std::size_t h = 0;
    for (const auto& c : t.children) {
        h = std::max(h, tree_height(c));
    }
    return h + 1;
}

namespace detail {

class BracketReader {
public:
    explicit BracketReader(std::string_view text) : text_(text) {}

    ParseTree read_root() {
        skip_ws();
        if (pos_ == text_.size()) {
            throw ParseError("bracketed tree", 0, "empty input");
        }
        if (text_[pos_] != '(') {
            fail("expected '('");
        }
        ParseTree root = read_node();
        skip_ws();
        if (pos_ != text_.size()) {
            fail(text_[pos_] == '(' ? "multiple roots" : text_[pos_] == ')' ? "unbalanced ')'" : "trailing text");
        }
        return root;
    }

private:
    // At '('.
    ParseTree read_node() {
        ++pos_;
        ParseTree node;
        skip_ws();
        if (pos_ < text_.size() && !is_delim(text_[pos_])) {
            node.label = read_token();
        }
        for (;;) {
            skip_ws();
            if (pos_ == text_.size()) {
                fail("unbalanced '(': missing ')'");
            }
            const char c = text_[pos_];
            if (c == ')') {
                ++pos_;
                return node;
            }
            if (c == '(') {
                node.children.push_back(read_node());
            } else {
                node.children.push_back(ParseTree{read_token(), {}});
            }
        }
    }

    std::string read_token() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && !is_delim(text_[pos_])) {
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    static bool is_delim(char c) { return c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c)); }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError("bracketed tree", 0, what + " at offset " + std::to_string(pos_));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline void write_bracketed(const ParseTree& t, std::string& out, bool is_root) {
    if (t.children.empty() && !is_root && !t.label.empty()) {
        out += t.label;
        return;
    }
    out += '(';
    out += t.label;
    for (const auto& c : t.children) {
        out += ' ';
        write_bracketed(c, out, false);
    }
    out += ')';
}

} // namespace detail

inline ParseTree parse_bracketed(std::string_view text) {
    return detail::BracketReader(text).read_root();
}

inline std::string to_bracketed(const ParseTree& t) {
    std::string out;
    detail::write_bracketed(t, out, true);
    return out;
}

// ---------------------------------------------------------------------------
// Tree edit distance (unit costs), Zhang-Shasha keyroot dynamic program.

namespace detail {

struct PostorderTree {
    std::vector<int> labels;   // interned label per postorder node
    std::vector<int> leftmost; // postorder index of each node's leftmost leaf
    std::vector<int> keyroots; // ascending
};

inline int flatten(const ParseTree& t, PostorderTree& out, std::unordered_map<std::string, int>& intern) {
    int first_leaf = -1;
    for (const auto& c : t.children) {
        const int child = flatten(c, out, intern);
        if (first_leaf < 0) {
            first_leaf = out.leftmost[static_cast<std::size_t>(child)];
        }
    }
    const int self = static_cast<int>(out.labels.size());
    const auto [it, inserted] = intern.try_emplace(t.label, static_cast<int>(intern.size()));
    out.labels.push_back(it->second);
    out.leftmost.push_back(first_leaf < 0 ? self : first_leaf);
    return self;
}

inline PostorderTree postorder(const ParseTree& t, std::unordered_map<std::string, int>& intern) {
    PostorderTree pt;
    flatten(t, pt, intern);
    // A keyroot is the highest node for each distinct leftmost leaf.
    const auto n = pt.labels.size();
    std::vector<int> highest(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        highest[static_cast<std::size_t>(pt.leftmost[i])] = static_cast<int>(i);
    }
    for (int k : highest) {
        if (k >= 0) {
            pt.keyroots.push_back(k);
        }
    }
    std::sort(pt.keyroots.begin(), pt.keyroots.end());
    return pt;
}

} // namespace detail

inline std::size_t ted(const ParseTree& f, const ParseTree& g) {
    std::unordered_map<std::string, int> intern;
    const auto a = detail::postorder(f, intern);
    const auto b = detail::postorder(g, intern);
    const std::size_t na = a.labels.size();
    const std::size_t nb = b.labels.size();

    std::vector<std::size_t> tree_dist(na * nb, 0);
    std::vector<std::size_t> forest((na + 1) * (nb + 1), 0);
    const std::size_t stride = nb + 1;

    for (int ki : a.keyroots) {
        for (int kj : b.keyroots) {
            const int li = a.leftmost[static_cast<std::size_t>(ki)];
            const int lj = b.leftmost[static_cast<std::size_t>(kj)];
            const auto rows = static_cast<std::size_t>(ki - li + 2);
            const auto cols = static_cast<std::size_t>(kj - lj + 2);
            // forest[x][y]: distance between postorder prefixes li..li+x-1 and lj..lj+y-1
            forest[0] = 0;
            for (std::size_t x = 1; x < rows; ++x) {
                forest[x * stride] = x;
            }
            for (std::size_t y = 1; y < cols; ++y) {
                forest[y] = y;
            }
            for (std::size_t x = 1; x < rows; ++x) {
                const std::size_t i = static_cast<std::size_t>(li) + x - 1;
                const bool i_spans = a.leftmost[i] == li;
                for (std::size_t y = 1; y < cols; ++y) {
                    const std::size_t j = static_cast<std::size_t>(lj) + y - 1;
                    const std::size_t del = forest[(x - 1) * stride + y] + 1;
                    const std::size_t ins = forest[x * stride + y - 1] + 1;
                    if (i_spans && b.leftmost[j] == lj) {
                        const std::size_t rel = forest[(x - 1) * stride + y - 1] + (a.labels[i] != b.labels[j]);
                        const std::size_t d = std::min({del, ins, rel});
                        forest[x * stride + y] = d;
                        tree_dist[i * nb + j] = d;
                    } else {
                        const auto px = static_cast<std::size_t>(a.leftmost[i] - li);
                        const auto py = static_cast<std::size_t>(b.leftmost[j] - lj);
                        const std::size_t sub = forest[px * stride + py] + tree_dist[i * nb + j];
                        forest[x * stride + y] = std::min({del, ins, sub});
                    }
                }
            }
        }
    }
    return tree_dist[(na - 1) * nb + (nb - 1)];
}

// ted / (|f| + |g| - min(height f, height g)); always in [0, 1].
inline double ted_normalized(const ParseTree& f, const ParseTree& g) {
    const std::size_t denom = tree_size(f) + tree_size(g) - std::min(tree_height(f), tree_height(g));
    return static_cast<double>(ted(f, g)) / static_cast<double>(denom);
}

} // namespace mfc
