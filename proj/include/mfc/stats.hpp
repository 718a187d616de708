#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "mfc/error.hpp"
#include "mfc/metrics.hpp"
#include "mfc/parallel.hpp"
#include "mfc/random.hpp"

namespace mfc {

// ---------------------------------------------------------------------------
// Correlation

// 1-based fractional ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i + 1;
        while (j < idx.size() && values[idx[j]] == values[idx[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + 1 + j); // mean of i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            ranks[idx[k]] = r;
        }
        i = j;
    }
    return ranks;
}

namespace detail {

inline void check_series(std::span<const double> xs, std::span<const double> ys, const char* who) {
    if (xs.size() != ys.size()) {
        throw InvalidArgument(std::string(who) + ": length mismatch");
    }
    if (xs.size() < 3) {
        throw InvalidArgument(std::string(who) + ": need at least 3 observations");
    }
}

// Deviations from the mean and their sum of squares.
inline double center(std::span<const double> v, std::vector<double>& out) {
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    out.resize(v.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] - mean;
        ss += out[i] * out[i];
    }
    return ss;
}

inline double correlation_of_centered(std::span<const double> xc, double sxx, std::span<const double> yc, double syy) {
    double sxy = 0.0;
    for (std::size_t i = 0; i < xc.size(); ++i) {
        sxy += xc[i] * yc[i];
    }
    // sqrt(fl(s*s)) == s, so identical inputs give exactly 1.
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

} // namespace detail

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
    detail::check_series(xs, ys, "pearson");
    std::vector<double> xc, yc;
    const double sxx = detail::center(xs, xc);
    const double syy = detail::center(ys, yc);
    if (sxx == 0.0 || syy == 0.0) {
        throw DegenerateInput("pearson: constant series has zero variance");
    }
    return detail::correlation_of_centered(xc, sxx, yc, syy);
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
    detail::check_series(xs, ys, "spearman");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    return pearson(rx, ry);
}

// ---------------------------------------------------------------------------
// Mantel test

enum class CorrelationMethod { pearson, spearman };
enum class Alternative { greater, two_sided };

inline std::string to_string(CorrelationMethod m) { return m == CorrelationMethod::pearson ? "pearson" : "spearman"; }
inline std::string to_string(Alternative a) { return a == Alternative::greater ? "greater" : "two-sided"; }

inline CorrelationMethod parse_correlation_method(const std::string& s) {
    if (s == "pearson") return CorrelationMethod::pearson;
    if (s == "spearman") return CorrelationMethod::spearman;
    throw InvalidArgument("unknown correlation method '" + s + "'");
}

inline Alternative parse_alternative(const std::string& s) {
    if (s == "greater") return Alternative::greater;
    if (s == "two-sided") return Alternative::two_sided;
    throw InvalidArgument("unknown alternative '" + s + "'");
}

struct MantelConfig {
    CorrelationMethod method = CorrelationMethod::pearson;
    std::size_t permutations = 9999;
    Alternative alternative = Alternative::greater;
    double alpha = 0.05;
    std::uint64_t seed = 0;

    void validate() const {
        if (permutations < 99) {
            throw InvalidArgument("MantelConfig: at least 99 permutations required");
        }
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw InvalidArgument("MantelConfig: alpha must lie in (0, 1)");
        }
    }
};

struct MantelResult {
    double r = 0.0;
    double p_value = 1.0;
    double z_score = 0.0;
    std::size_t permutations = 0;
};

// Permuted correlations are compared to the observed one with this slack so
// that permutations reproducing the observed matrix are counted as ties.
inline constexpr double kMantelTieTolerance = 1e-12;

namespace detail {

inline constexpr std::size_t kPermutationBlock = 64;

} // namespace detail

// Correlates the condensed matrices, then permutes rows and columns of dm_b
// jointly. Permutation t draws from its own stream seeded by (cfg.seed, t),
// so the result does not depend on the thread count.
inline MantelResult mantel(const DistanceMatrix& dm_a, const DistanceMatrix& dm_b, const MantelConfig& cfg,
                           std::size_t threads = 1) {
    cfg.validate();
    if (dm_a.n() != dm_b.n()) {
        throw InvalidArgument("mantel: matrix size mismatch (" + std::to_string(dm_a.n()) + " vs " +
                              std::to_string(dm_b.n()) + ")");
    }
    const std::size_t n = dm_a.n();
    if (n < 3) {
        throw InvalidArgument("mantel: need at least 3 items");
    }

    std::vector<double> xa(dm_a.condensed().begin(), dm_a.condensed().end());
    std::vector<double> xb(dm_b.condensed().begin(), dm_b.condensed().end());
    if (cfg.method == CorrelationMethod::spearman) {
        xa = average_ranks(xa);
        xb = average_ranks(xb);
    }
    std::vector<double> ac, bc;
    const double saa = detail::center(xa, ac);
    const double sbb = detail::center(xb, bc);
    if (saa == 0.0 || sbb == 0.0) {
        throw DegenerateInput("mantel: a distance matrix is constant");
    }
    const double denom = std::sqrt(saa * sbb);
    const double r_obs = detail::correlation_of_centered(ac, saa, bc, sbb);

    // Square form of the centred second matrix for permuted lookups.
    std::vector<double> bsq(n * n, 0.0);
    for (std::size_t i = 0, k = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            bsq[i * n + j] = bc[k];
            bsq[j * n + i] = bc[k];
        }
    }

    std::vector<double> r_perm(cfg.permutations);
    const std::size_t blocks = (cfg.permutations + detail::kPermutationBlock - 1) / detail::kPermutationBlock;
    parallel_for(blocks, threads, [&](std::size_t block) {
        std::vector<std::uint32_t> perm(n);
        const std::size_t first = block * detail::kPermutationBlock;
        const std::size_t last = std::min(cfg.permutations, first + detail::kPermutationBlock);
        for (std::size_t t = first; t < last; ++t) {
            SplitMix64 gen(derive_seed(cfg.seed, {t}));
            std::iota(perm.begin(), perm.end(), std::uint32_t{0});
            shuffle(std::span<std::uint32_t>(perm), gen);
            double sum = 0.0;
            const double* a = ac.data();
            for (std::size_t i = 0; i + 1 < n; ++i) {
                const double* row = bsq.data() + static_cast<std::size_t>(perm[i]) * n;
                for (std::size_t j = i + 1; j < n; ++j) {
                    sum += *a++ * row[perm[j]];
                }
            }
            r_perm[t] = sum / denom;
        }
    });

    std::size_t extreme = 0;
    double mean = 0.0;
    for (double r : r_perm) {
        const bool hit = cfg.alternative == Alternative::greater
                             ? r >= r_obs - kMantelTieTolerance
                             : std::abs(r) >= std::abs(r_obs) - kMantelTieTolerance;
        extreme += hit;
        mean += r;
    }
    mean /= static_cast<double>(r_perm.size());
    double var = 0.0;
    for (double r : r_perm) {
        var += (r - mean) * (r - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(r_perm.size() - 1));
    if (!(sd > 0.0)) {
        throw DegenerateInput("mantel: permuted correlations have zero spread");
    }

    MantelResult res;
    res.r = r_obs;
    res.p_value = static_cast<double>(1 + extreme) / static_cast<double>(1 + cfg.permutations);
    res.z_score = (r_obs - mean) / sd;
    res.permutations = cfg.permutations;
    return res;
}

inline nlohmann::json to_json(const MantelResult& r) {
    return {{"r", r.r}, {"p_value", r.p_value}, {"z_score", r.z_score}, {"n_permutations", r.permutations}};
}

inline nlohmann::json to_json(const MantelConfig& c) {
    return {{"method", to_string(c.method)},
            {"n_permutations", c.permutations},
            {"alternative", to_string(c.alternative)},
            {"alpha", c.alpha},
            {"seed", c.seed}};
}

inline MantelConfig mantel_config_from_json(const nlohmann::json& j) {
    MantelConfig c;
    c.method = parse_correlation_method(j.at("method").get<std::string>());
    c.permutations = j.at("n_permutations").get<std::size_t>();
    c.alternative = parse_alternative(j.at("alternative").get<std::string>());
    c.alpha = j.at("alpha").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Dummy coding and least squares

struct Factor {
    std::string name;
    std::vector<std::string> levels; // includes the baseline
    std::string baseline;
};

struct DesignMatrix {
    std::vector<std::string> columns; // "(Intercept)", then "<factor>=<level>"
    Eigen::MatrixXd x;
};

// Intercept plus one 0/1 indicator per non-baseline level, in factor then
// level order. rows[i][f] is the level of factor f in observation i.
inline DesignMatrix dummy_code(std::span<const Factor> factors, std::span<const std::vector<std::string>> rows) {
    DesignMatrix dm;
    dm.columns.emplace_back("(Intercept)");
    std::vector<std::map<std::string, Eigen::Index>> column_of(factors.size());
    for (std::size_t f = 0; f < factors.size(); ++f) {
        const auto& fac = factors[f];
        if (std::find(fac.levels.begin(), fac.levels.end(), fac.baseline) == fac.levels.end()) {
            throw InvalidArgument("dummy_code: baseline '" + fac.baseline + "' is not a level of factor " + fac.name);
        }
        for (const auto& lv : fac.levels) {
            if (lv == fac.baseline) {
                column_of[f][lv] = -1;
            } else {
                column_of[f][lv] = static_cast<Eigen::Index>(dm.columns.size());
                dm.columns.push_back(fac.name + "=" + lv);
            }
        }
    }

    dm.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dm.columns.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        dm.x(row, 0) = 1.0;
        if (rows[i].size() != factors.size()) {
            throw InvalidArgument("dummy_code: row " + std::to_string(i) + " has wrong number of factors");
        }
        for (std::size_t f = 0; f < factors.size(); ++f) {
            const auto it = column_of[f].find(rows[i][f]);
            if (it == column_of[f].end()) {
                throw InvalidArgument("dummy_code: unknown level '" + rows[i][f] + "' for factor " + factors[f].name);
            }
            if (it->second >= 0) {
                dm.x(row, it->second) = 1.0;
            }
        }
    }
    for (Eigen::Index c = 1; c < dm.x.cols(); ++c) {
        if (dm.x.col(c).sum() == 0.0) {
            throw InvalidArgument("dummy_code: level " + dm.columns[static_cast<std::size_t>(c)] +
                                  " never occurs (degenerate column)");
        }
    }
    return dm;
}

struct OLSFit {
    std::vector<std::string> predictors;
    std::vector<double> estimates;
    std::vector<double> std_errors;
    std::vector<double> t_values;
    std::vector<double> p_values;
    std::size_t observations = 0;
    std::size_t df_residual = 0;
    double rss = 0.0;

    // Index of a predictor by name; throws if absent.
    std::size_t index_of(const std::string& name) const {
        const auto it = std::find(predictors.begin(), predictors.end(), name);
        if (it == predictors.end()) {
            throw InvalidArgument("OLSFit: no predictor named " + name);
        }
        return static_cast<std::size_t>(it - predictors.begin());
    }
    double estimate(const std::string& name) const { return estimates[index_of(name)]; }
    double t_value(const std::string& name) const { return t_values[index_of(name)]; }
};

// Column-pivoted Householder QR; same solution as the normal equations.
inline OLSFit ols_fit(const DesignMatrix& design, std::span<const double> y) {
    const Eigen::Index n = design.x.rows();
    const Eigen::Index k = design.x.cols();
    if (static_cast<std::size_t>(n) != y.size()) {
        throw InvalidArgument("ols_fit: response length does not match design rows");
    }
    if (n <= k) {
        throw InvalidArgument("ols_fit: need more observations than columns");
    }
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design.x);
    if (qr.rank() < k) {
        throw DegenerateInput("ols_fit: design matrix is rank deficient");
    }
    const Eigen::VectorXd beta = qr.solve(yv);
    const Eigen::VectorXd resid = yv - design.x * beta;

    OLSFit fit;
    fit.predictors = design.columns;
    fit.observations = static_cast<std::size_t>(n);
    fit.df_residual = static_cast<std::size_t>(n - k);
    fit.rss = resid.squaredNorm();
    const double s2 = fit.rss / static_cast<double>(n - k);

    // (X'X)^-1 = P R^-1 R^-T P'
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv =
        r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd cov_pivoted = rinv * rinv.transpose();
    const auto& perm = qr.colsPermutation();
    const Eigen::MatrixXd cov = perm * cov_pivoted * perm.transpose();

    const boost::math::students_t dist(static_cast<double>(n - k));
    for (Eigen::Index c = 0; c < k; ++c) {
        const double est = beta(c);
        const double se = std::sqrt(s2 * cov(c, c));
        double t, p;
        if (se > 0.0) {
            t = est / se;
            p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
        } else {
            t = est == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                           : std::copysign(std::numeric_limits<double>::infinity(), est);
            p = est == 0.0 ? 1.0 : 0.0;
        }
        fit.estimates.push_back(est);
        fit.std_errors.push_back(se);
        fit.t_values.push_back(t);
        fit.p_values.push_back(p);
    }
    return fit;
}

inline nlohmann::json to_json(const OLSFit& f) {
    nlohmann::json coeffs = nlohmann::json::array();
    for (std::size_t i = 0; i < f.predictors.size(); ++i) {
        coeffs.push_back({{"predictor", f.predictors[i]},
                          {"estimate", f.estimates[i]},
                          {"std_error", f.std_errors[i]},
                          {"t_value", f.t_values[i]},
                          {"p_value", f.p_values[i]}});
    }
    return {{"coefficients", coeffs},
            {"observations", f.observations},
            {"df_residual", f.df_residual},
            {"rss", f.rss}};
}

inline void write_ols_csv(std::ostream& os, const OLSFit& f) {
    os << "predictor,estimate,std_error,t_value,p_value\n";
    for (std::size_t i = 0; i < f.predictors.size(); ++i) {
        os << f.predictors[i] << ',' << format_double(f.estimates[i]) << ',' << format_double(f.std_errors[i]) << ','
           << format_double(f.t_values[i]) << ',' << format_double(f.p_values[i]) << '\n';
    }
}

} // namespace mfc
