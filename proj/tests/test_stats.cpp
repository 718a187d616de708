#include <gtest/gtest.h>

#include <random>

#include "mfc/langgen.hpp"
#include "mfc/stats.hpp"
#include "oracles.hpp"

using namespace mfc;

namespace {

DistanceMatrix random_matrix(std::mt19937_64& gen, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(DistanceMatrix::pair_count(n));
    for (auto& x : v) x = u(gen);
    return DistanceMatrix(n, std::move(v));
}

// Points on a line: |x_i - x_j|
DistanceMatrix line_matrix(const std::vector<double>& xs) {
    return pairwise_matrix(xs, [](double a, double b) { return std::abs(a - b); });
}

DistanceMatrix relabel(const DistanceMatrix& dm, const std::vector<std::size_t>& perm) {
    DistanceMatrix out(dm.n());
    auto v = out.condensed_mut();
    for (std::size_t i = 0, k = 0; i < dm.n(); ++i)
        for (std::size_t j = i + 1; j < dm.n(); ++j, ++k) v[k] = dm(perm[i], perm[j]);
    return out;
}

} // namespace

TEST(Pearson, Examples) {
    EXPECT_DOUBLE_EQ(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), 1.0);
    EXPECT_DOUBLE_EQ(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{6, 4, 2}), -1.0);
    // centred: dx = dy' = (-1.5,-.5,.5,1.5), (-1.5,.5,-.5,1.5): sxy=4, sxx=syy=5
    EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(Pearson, Errors) {
    EXPECT_THROW(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DegenerateInput);
    EXPECT_THROW(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), InvalidArgument);
    EXPECT_THROW(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), InvalidArgument);
}

TEST(Pearson, MatchesTextbookFormulaAndAffineInvariance) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 500; ++t) {
        std::vector<double> x(20), y(20);
        for (auto& v : x) v = nd(gen);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = 0.5 * x[i] + nd(gen);
        const double r = pearson(x, y);
        ASSERT_NEAR(r, oracle::pearson(x, y), 1e-12);
        std::vector<double> x2(x);
        for (auto& v : x2) v = 3.5 * v - 7.0;
        ASSERT_NEAR(pearson(x2, y), r, 1e-12);
    }
}

TEST(Ranks, AverageTies) {
    EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 5}), (std::vector<double>{2, 3.5, 3.5, 1}));
    std::mt19937_64 gen(2);
    std::uniform_int_distribution<int> small(0, 5);
    for (int t = 0; t < 300; ++t) {
        std::vector<double> v(15);
        for (auto& x : v) x = small(gen);
        ASSERT_EQ(average_ranks(v), oracle::ranks(v));
    }
}

TEST(Spearman, Examples) {
    EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3, 4}, std::vector<double>{2, 5, 7, 100}), 1.0);
    EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{9, 99, 999}), 1.0);
    // ranks (1.5,1.5,3) vs (1,2,3): 1.5 / sqrt(1.5 * 2)
    EXPECT_NEAR(spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}), 1.5 / std::sqrt(3.0), 1e-15);
    const auto rx = oracle::ranks({1, 1, 2});
    const auto ry = oracle::ranks({1, 2, 3});
    EXPECT_NEAR(spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}), oracle::pearson(rx, ry), 1e-15);
}

TEST(Spearman, InvariantUnderMonotoneTransforms) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 300; ++t) {
        std::vector<double> x(25), y(25);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = nd(gen);
            y[i] = x[i] + nd(gen);
        }
        std::vector<double> ex(x), cube(y);
        for (auto& v : ex) v = std::exp(v);
        for (auto& v : cube) v = v * v * v + 2.0;
        ASSERT_NEAR(spearman(ex, cube), spearman(x, y), 1e-12);
    }
}

TEST(Mantel, IdenticalMatricesGiveExactOne) {
    std::mt19937_64 gen(4);
    const auto dm = random_matrix(gen, 20);
    MantelConfig cfg;
    cfg.seed = 99;
    const auto res = mantel(dm, dm, cfg);
    EXPECT_EQ(res.r, 1.0);
    EXPECT_LE(res.p_value, 0.01);
    EXPECT_EQ(res.permutations, 9999u);
    EXPECT_GT(res.z_score, 0.0);
}

TEST(Mantel, SymmetricInArgumentsAndRelabeling) {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    std::vector<double> xs(15), ys(15);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = nd(gen);
        ys[i] = xs[i] + 0.7 * nd(gen);
    }
    const auto a = line_matrix(xs);
    const auto b = line_matrix(ys);
    MantelConfig cfg;
    cfg.permutations = 199;
    const double r = mantel(a, b, cfg).r;
    EXPECT_NEAR(mantel(b, a, cfg).r, r, 1e-14);

    std::vector<std::size_t> perm(xs.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    EXPECT_NEAR(mantel(relabel(a, perm), relabel(b, perm), cfg).r, r, 1e-12);
}

TEST(Mantel, ResultInvariants) {
    std::mt19937_64 gen(6);
    for (int t = 0; t < 40; ++t) {
        const auto a = random_matrix(gen, 12);
        const auto b = random_matrix(gen, 12);
        MantelConfig cfg;
        cfg.permutations = 199;
        cfg.seed = static_cast<std::uint64_t>(t);
        cfg.alternative = t % 2 ? Alternative::greater : Alternative::two_sided;
        const auto res = mantel(a, b, cfg);
        ASSERT_GT(res.p_value, 0.0);
        ASSERT_LE(res.p_value, 1.0);
        ASSERT_GE(res.p_value, 1.0 / 200.0);
        ASSERT_GE(res.r, -1.0);
        ASSERT_LE(res.r, 1.0);
    }
}

TEST(Mantel, ZScoreSignFollowsObservedMinusPermutedMean) {
    // Anti-correlated distances: r < 0 and far below the permutation mean.
    std::vector<double> xs{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto a = line_matrix(xs);
    std::vector<double> inv(a.condensed().begin(), a.condensed().end());
    for (auto& v : inv) v = 10.0 - v;
    const DistanceMatrix b(xs.size(), inv);
    MantelConfig cfg;
    cfg.permutations = 999;
    const auto res = mantel(a, b, cfg);
    EXPECT_LT(res.r, 0.0);
    EXPECT_LT(res.z_score, 0.0);
    EXPECT_GT(res.p_value, 0.99);

    cfg.alternative = Alternative::two_sided;
    EXPECT_LT(mantel(a, b, cfg).p_value, 0.01);
}

TEST(Mantel, DeterministicAndThreadIndependent) {
    std::mt19937_64 gen(7);
    const auto a = random_matrix(gen, 25);
    const auto b = random_matrix(gen, 25);
    MantelConfig cfg;
    cfg.permutations = 999;
    cfg.seed = 1234;
    const auto one = mantel(a, b, cfg, 1);
    for (std::size_t threads : {1u, 2u, 5u}) {
        const auto other = mantel(a, b, cfg, threads);
        EXPECT_EQ(other.r, one.r);
        EXPECT_EQ(other.p_value, one.p_value);
        EXPECT_EQ(other.z_score, one.z_score);
    }
    cfg.seed = 1235;
    EXPECT_NE(mantel(a, b, cfg).z_score, one.z_score);
}

TEST(Mantel, SpearmanOption) {
    std::vector<double> xs{0, 1, 2, 3, 4, 5, 6, 7};
    const auto a = line_matrix(xs);
    std::vector<double> sq(a.condensed().begin(), a.condensed().end());
    for (auto& v : sq) v = v * v * v;
    MantelConfig cfg;
    cfg.method = CorrelationMethod::spearman;
    cfg.permutations = 199;
    EXPECT_NEAR(mantel(a, DistanceMatrix(xs.size(), sq), cfg).r, 1.0, 1e-15);
    cfg.method = CorrelationMethod::pearson;
    EXPECT_LT(mantel(a, DistanceMatrix(xs.size(), sq), cfg).r, 0.99);
}

TEST(Mantel, Errors) {
    std::mt19937_64 gen(8);
    const auto a = random_matrix(gen, 5);
    const auto b = random_matrix(gen, 6);
    MantelConfig cfg;
    EXPECT_THROW(mantel(a, b, cfg), InvalidArgument);
    EXPECT_THROW(mantel(a, DistanceMatrix(5, std::vector<double>(10, 1.0)), cfg), DegenerateInput);
    cfg.permutations = 50;
    EXPECT_THROW(mantel(a, a, cfg), InvalidArgument);
    cfg.permutations = 99;
    cfg.alpha = 1.0;
    EXPECT_THROW(mantel(a, a, cfg), InvalidArgument);
}

TEST(Mantel, CompositionalLanguageCorrelates) {
    LanguageSpec spec;
    spec.seed = 3;
    const auto lang = generate_language(spec);
    std::vector<MeaningVector> ms;
    std::vector<Message> fs;
    for (const auto& [m, f] : lang.pairs) {
        ms.push_back(m);
        fs.push_back(f);
    }
    const auto a = pairwise_matrix(ms, [](const auto& x, const auto& y) { return hamming(x, y); });
    const auto b = pairwise_matrix(fs, [](const auto& x, const auto& y) { return levenshtein_normalized(x, y); });
    MantelConfig cfg;
    cfg.permutations = 999;
    const auto res = mantel(a, b, cfg);
    EXPECT_GT(res.r, 0.2);
    EXPECT_LT(res.p_value, 0.01);
}

TEST(DummyCode, TableShapedFactors) {
    std::vector<Factor> factors{{"h", {"1", "2", "3", "4", "5"}, "1"},
                                {"s", {"1", "2", "3"}, "1"},
                                {"u", {"0", "1", "2", "3"}, "0"},
                                {"p", {"1", "2", "3"}, "1"}};
    std::vector<std::vector<std::string>> rows;
    for (int h = 1; h <= 5; ++h)
        for (int s = 1; s <= 3; ++s)
            for (int u = 0; u <= 3; ++u)
                for (int p = 1; p <= 3; ++p)
                    rows.push_back({std::to_string(h), std::to_string(s), std::to_string(u), std::to_string(p)});
    const auto dm = dummy_code(factors, rows);
    EXPECT_EQ(dm.columns.size(), 12u);
    EXPECT_EQ(dm.x.cols(), 12);
    EXPECT_EQ(dm.columns[0], "(Intercept)");
    EXPECT_EQ(dm.columns[1], "h=2");
    EXPECT_EQ(dm.columns[11], "p=3");
    // First row is all-baseline.
    EXPECT_EQ(dm.x.row(0).sum(), 1.0);
    EXPECT_EQ(dm.x(0, 0), 1.0);
}

TEST(DummyCode, SingleFactor) {
    std::vector<Factor> factors{{"f", {"A", "B"}, "A"}};
    std::vector<std::vector<std::string>> rows{{"A"}, {"B"}, {"B"}};
    const auto dm = dummy_code(factors, rows);
    ASSERT_EQ(dm.columns, (std::vector<std::string>{"(Intercept)", "f=B"}));
    EXPECT_EQ(dm.x(0, 1), 0.0);
    EXPECT_EQ(dm.x(1, 1), 1.0);
}

TEST(DummyCode, Errors) {
    std::vector<Factor> factors{{"f", {"A", "B"}, "A"}};
    std::vector<std::vector<std::string>> unknown{{"A"}, {"C"}};
    EXPECT_THROW(dummy_code(factors, unknown), InvalidArgument);
    std::vector<std::vector<std::string>> only_baseline{{"A"}, {"A"}};
    EXPECT_THROW(dummy_code(factors, only_baseline), InvalidArgument);
    std::vector<Factor> bad_base{{"f", {"A", "B"}, "Z"}};
    EXPECT_THROW(dummy_code(bad_base, only_baseline), InvalidArgument);
}

TEST(Ols, ExactFit) {
    DesignMatrix d;
    d.columns = {"(Intercept)", "x"};
    d.x.resize(5, 2);
    std::vector<double> y;
    for (int i = 0; i < 5; ++i) {
        d.x(i, 0) = 1;
        d.x(i, 1) = i;
        y.push_back(2.0 - 0.5 * i);
    }
    const auto fit = ols_fit(d, y);
    EXPECT_NEAR(fit.estimates[0], 2.0, 1e-12);
    EXPECT_NEAR(fit.estimates[1], -0.5, 1e-12);
    EXPECT_NEAR(fit.rss, 0.0, 1e-20);
    EXPECT_EQ(fit.df_residual, 3u);
}

TEST(Ols, RecoversPlantedCoefficients) {
    std::mt19937_64 gen(10);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<Factor> factors{{"a", {"0", "1", "2"}, "0"}, {"b", {"x", "y"}, "x"}};
    const std::map<std::string, double> effect{{"a=1", -0.2}, {"a=2", 0.05}, {"b=y", 0.1}};
    std::vector<std::vector<std::string>> rows;
    std::vector<double> y;
    for (int i = 0; i < 9000; ++i) {
        const std::string a = std::to_string(i % 3), b = (i / 3) % 2 ? "y" : "x";
        rows.push_back({a, b});
        double v = 0.4 + noise(gen);
        if (a != "0") v += effect.at("a=" + a);
        if (b == "y") v += effect.at("b=y");
        y.push_back(v);
    }
    const auto fit = ols_fit(dummy_code(factors, rows), y);
    EXPECT_NEAR(fit.estimate("(Intercept)"), 0.4, 3 * fit.std_errors[0]);
    for (const auto& [name, value] : effect) {
        const auto k = fit.index_of(name);
        EXPECT_NEAR(fit.estimates[k], value, 3 * fit.std_errors[k]) << name;
        EXPECT_DOUBLE_EQ(fit.t_values[k], fit.estimates[k] / fit.std_errors[k]);
        EXPECT_LT(fit.p_values[k], 1e-10);
    }
}

TEST(Ols, ResidualsOrthogonalToDesign) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd;
    DesignMatrix d;
    d.columns = {"(Intercept)", "x1", "x2", "x3"};
    d.x.resize(200, 4);
    std::vector<double> y(200);
    for (int i = 0; i < 200; ++i) {
        d.x(i, 0) = 1;
        for (int c = 1; c < 4; ++c) d.x(i, c) = nd(gen);
        y[static_cast<std::size_t>(i)] = 1 + d.x(i, 1) - 2 * d.x(i, 3) + nd(gen);
    }
    const auto fit = ols_fit(d, y);
    Eigen::VectorXd beta(4);
    for (int c = 0; c < 4; ++c) beta(c) = fit.estimates[static_cast<std::size_t>(c)];
    const Eigen::VectorXd resid = Eigen::Map<const Eigen::VectorXd>(y.data(), 200) - d.x * beta;
    for (int c = 0; c < 4; ++c) {
        EXPECT_LT(std::abs(d.x.col(c).dot(resid)), 1e-8 * d.x.col(c).norm() * std::max(1.0, resid.norm()));
    }
    // Normal-equation solution agrees.
    const Eigen::VectorXd ne = (d.x.transpose() * d.x).ldlt().solve(d.x.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), 200));
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(beta(c), ne(c), 1e-10);
    // two-sided p for a known t: df=196
    EXPECT_GT(fit.p_values[2], 0.0);
    EXPECT_LE(fit.p_values[2], 1.0);
}

TEST(Ols, Errors) {
    DesignMatrix d;
    d.columns = {"(Intercept)", "dup"};
    d.x = Eigen::MatrixXd::Ones(5, 2);
    std::vector<double> y{1, 2, 3, 4, 5};
    EXPECT_THROW(ols_fit(d, y), DegenerateInput);
    d.x = Eigen::MatrixXd::Random(2, 2);
    EXPECT_THROW(ols_fit(d, std::vector<double>{1, 2}), InvalidArgument);
}

TEST(Ols, StudentTPValueMatchesKnownQuantile) {
    // y = x + e with residuals chosen so that t for the slope is known via
    // the textbook formulas; cross-check p against boost directly.
    DesignMatrix d;
    d.columns = {"(Intercept)", "x"};
    d.x.resize(6, 2);
    const std::vector<double> xs{1, 2, 3, 4, 5, 6};
    const std::vector<double> y{1.1, 1.9, 3.2, 3.8, 5.3, 5.9};
    for (int i = 0; i < 6; ++i) {
        d.x(i, 0) = 1;
        d.x(i, 1) = xs[static_cast<std::size_t>(i)];
    }
    const auto fit = ols_fit(d, y);
    // slope = Sxy / Sxx
    double mx = 3.5, my = 0;
    for (double v : y) my += v / 6;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 6; ++i) {
        sxy += (xs[static_cast<std::size_t>(i)] - mx) * (y[static_cast<std::size_t>(i)] - my);
        sxx += (xs[static_cast<std::size_t>(i)] - mx) * (xs[static_cast<std::size_t>(i)] - mx);
    }
    const double slope = sxy / sxx;
    EXPECT_NEAR(fit.estimates[1], slope, 1e-12);
    double rss = 0;
    for (int i = 0; i < 6; ++i) {
        const double e = y[static_cast<std::size_t>(i)] - (my - slope * mx) - slope * xs[static_cast<std::size_t>(i)];
        rss += e * e;
    }
    const double se = std::sqrt(rss / 4 / sxx);
    EXPECT_NEAR(fit.std_errors[1], se, 1e-12);
    const boost::math::students_t dist(4);
    EXPECT_NEAR(fit.p_values[1], 2 * boost::math::cdf(boost::math::complement(dist, slope / se)), 1e-15);
}

TEST(OlsCsv, Shape) {
    DesignMatrix d;
    d.columns = {"(Intercept)", "x"};
    d.x.resize(4, 2);
    for (int i = 0; i < 4; ++i) {
        d.x(i, 0) = 1;
        d.x(i, 1) = i;
    }
    const auto fit = ols_fit(d, std::vector<double>{0.1, 0.9, 2.2, 2.8});
    std::ostringstream os;
    write_ols_csv(os, fit);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "predictor,estimate,std_error,t_value,p_value");
    EXPECT_NE(text.find("\n(Intercept),"), std::string::npos);
    EXPECT_EQ(to_json(fit)["coefficients"].size(), 2u);
}
