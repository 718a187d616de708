#pragma once

// Synthetic monotone corpora: item i sits at position i on a line (or an arc),
// and its gloss differs from item j's in exactly |i - j| positions.

#include <cmath>
#include <string>
#include <vector>

#include "mfc/corpus.hpp"

namespace fixture {

inline std::string word(std::size_t i) { return "w" + std::to_string(i); }

inline mfc::Tokens monotone_gloss(std::size_t i, std::size_t n) {
    mfc::Tokens t;
    for (std::size_t k = 0; k < n; ++k) t.push_back((k < i ? "a" : "b") + std::to_string(k));
    return t;
}

inline mfc::ParseTree gloss_tree(const mfc::Tokens& gloss) {
    mfc::ParseTree root{"S", {}};
    for (const auto& tok : gloss) root.children.push_back({"X", {{tok, {}}}});
    return root;
}

// variants > 1 adds paraphrases that append a distinct filler token.
inline std::vector<mfc::DefinitionEntry> monotone_definitions(std::size_t n, std::size_t variants = 1) {
    std::vector<mfc::DefinitionEntry> out;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t v = 0; v < variants; ++v) {
            auto g = monotone_gloss(i, n);
            if (v) g.push_back("the" + std::to_string(v));
            out.push_back({word(i), g, gloss_tree(g)});
        }
    }
    return out;
}

inline mfc::EmbeddingTable line_embeddings(std::size_t n) {
    mfc::EmbeddingTable t(2);
    for (std::size_t i = 0; i < n; ++i) {
        const double x[2] = {static_cast<double>(i), 1.0};
        t.add(word(i), x);
    }
    return t;
}

inline mfc::EmbeddingTable arc_embeddings(std::size_t n) {
    mfc::EmbeddingTable t(2);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 0.02 * static_cast<double>(i);
        const double x[2] = {std::cos(a), std::sin(a)};
        t.add(word(i), x);
    }
    return t;
}

// Human scores fall as the distance between the two words grows.
inline std::vector<mfc::RatedPair> monotone_ratings(std::size_t n) {
    std::vector<mfc::RatedPair> out;
    for (std::size_t k = 1; k < n; ++k) out.push_back({word(0), word(k), static_cast<double>(n - k)});
    return out;
}

} // namespace fixture
