#include <gtest/gtest.h>

#include <random>

#include "mfc/tree.hpp"
#include "oracles.hpp"

using namespace mfc;

TEST(ParseBracketed, Examples) {
    const auto single = parse_bracketed("(A)");
    EXPECT_EQ(single.label, "A");
    EXPECT_TRUE(single.children.empty());
    EXPECT_EQ(tree_size(single), 1u);
    EXPECT_EQ(tree_height(single), 1u);

    const auto two = parse_bracketed("(A (B) (C))");
    EXPECT_EQ(two.children.size(), 2u);
    EXPECT_EQ(tree_size(two), 3u);
    EXPECT_EQ(tree_height(two), 2u);

    EXPECT_EQ(tree_height(parse_bracketed("(A (B (C)))")), 3u);
}

TEST(ParseBracketed, TerminalsBecomeLeaves) {
    const auto np = parse_bracketed("(NP (DT a) (NN cat))");
    ASSERT_EQ(np.children.size(), 2u);
    EXPECT_EQ(np.children[0].label, "DT");
    ASSERT_EQ(np.children[0].children.size(), 1u);
    EXPECT_EQ(np.children[0].children[0].label, "a");
    EXPECT_EQ(np.children[1].children[0].label, "cat");
    EXPECT_EQ(tree_size(np), 5u);
    EXPECT_EQ(tree_height(np), 3u);
}

TEST(ParseBracketed, ToleratesWhitespaceAndEmptyRootLabel) {
    const auto t = parse_bracketed("  ( (S\n (NP (PRP I))\t(VP (VBD saw)))  ) ");
    EXPECT_EQ(t.label, "");
    ASSERT_EQ(t.children.size(), 1u);
    EXPECT_EQ(t.children[0].label, "S");
}

TEST(ParseBracketed, Errors) {
    EXPECT_THROW(parse_bracketed(""), ParseError);
    EXPECT_THROW(parse_bracketed("   "), ParseError);
    EXPECT_THROW(parse_bracketed("(A (B)"), ParseError);
    EXPECT_THROW(parse_bracketed("(A))"), ParseError);
    EXPECT_THROW(parse_bracketed("(A) (B)"), ParseError);
    EXPECT_THROW(parse_bracketed("A"), ParseError);
}

TEST(ParseBracketed, SerializeRoundTripOnRandomTrees) {
    std::mt19937_64 gen(17);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto t = oracle::random_tree(gen, 1 + trial % 15, 5);
        ASSERT_EQ(parse_bracketed(to_bracketed(t)), t) << to_bracketed(t);
    }
}

TEST(Ted, Examples) {
    const auto t = parse_bracketed("(S (NP (DT the) (NN cat)) (VP (VBD sat)))");
    EXPECT_EQ(ted(t, t), 0u);
    EXPECT_EQ(ted(parse_bracketed("(A)"), parse_bracketed("(B)")), 1u);
    EXPECT_EQ(ted(parse_bracketed("(A (B) (C))"), parse_bracketed("(A (C))")), 1u);
    EXPECT_EQ(ted(parse_bracketed("(A)"), parse_bracketed("(A (B) (C))")), 2u);
    // Classic Zhang-Shasha example: f(d(a c(b)) e) vs f(c(d(a b)) e) -> 2
    EXPECT_EQ(ted(parse_bracketed("(f (d (a) (c (b))) (e))"), parse_bracketed("(f (c (d (a) (b))) (e))")), 2u);
}

TEST(Ted, OracleAgreesOnHandExamples) {
    EXPECT_EQ(oracle::ted(parse_bracketed("(f (d (a) (c (b))) (e))"), parse_bracketed("(f (c (d (a) (b))) (e))")), 2u);
    EXPECT_EQ(oracle::ted(parse_bracketed("(A)"), parse_bracketed("(A (B) (C))")), 2u);
}

TEST(Ted, MatchesZhangShashaOracle) {
    std::mt19937_64 gen(31337);
    std::uniform_int_distribution<std::size_t> size(1, 8);
    for (int trial = 0; trial < 10000; ++trial) {
        const auto f = oracle::random_tree(gen, size(gen));
        const auto g = oracle::random_tree(gen, size(gen));
        ASSERT_EQ(ted(f, g), oracle::ted(f, g)) << to_bracketed(f) << " vs " << to_bracketed(g);
    }
}

TEST(Ted, MetricAxioms) {
    std::mt19937_64 gen(4);
    std::uniform_int_distribution<std::size_t> size(1, 7);
    for (int trial = 0; trial < 1500; ++trial) {
        const auto x = oracle::random_tree(gen, size(gen));
        const auto y = oracle::random_tree(gen, size(gen));
        const auto z = oracle::random_tree(gen, size(gen));
        ASSERT_EQ(ted(x, x), 0u);
        ASSERT_EQ(ted(x, y), ted(y, x));
        ASSERT_LE(ted(x, z), ted(x, y) + ted(y, z));
    }
}

TEST(TedNormalized, Examples) {
    EXPECT_EQ(ted_normalized(parse_bracketed("(A)"), parse_bracketed("(A)")), 0.0);
    EXPECT_EQ(ted_normalized(parse_bracketed("(A)"), parse_bracketed("(B)")), 1.0);
    // ted = 1, denominator 3 + 2 - 2 = 3
    EXPECT_DOUBLE_EQ(ted_normalized(parse_bracketed("(A (B) (C))"), parse_bracketed("(A (C))")), 1.0 / 3.0);
}

TEST(TedNormalized, StaysInUnitInterval) {
    std::mt19937_64 gen(8);
    std::uniform_int_distribution<std::size_t> size(1, 8);
    for (int trial = 0; trial < 3000; ++trial) {
        const auto f = oracle::random_tree(gen, size(gen), 4);
        const auto g = oracle::random_tree(gen, size(gen), 4);
        const double v = ted_normalized(f, g);
        const double expected = static_cast<double>(oracle::ted(f, g)) /
                                static_cast<double>(tree_size(f) + tree_size(g) - std::min(tree_height(f), tree_height(g)));
        ASSERT_EQ(v, expected);
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
    }
}

TEST(Ted, LargerTreesAgreeWithOracle) {
    std::mt19937_64 gen(55);
    for (int trial = 0; trial < 200; ++trial) {
        const auto f = oracle::random_tree(gen, 10 + trial % 15, 4);
        const auto g = oracle::random_tree(gen, 10 + (trial * 7) % 15, 4);
        ASSERT_EQ(ted(f, g), oracle::ted(f, g));
    }
}
