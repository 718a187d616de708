#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <ranges>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mfc/error.hpp"
#include "mfc/parallel.hpp"

namespace mfc {

// Binary concept vector; one entry per concept, each 0 or 1.
class MeaningVector {
public:
    MeaningVector() = default;

    explicit MeaningVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto b : bits_) {
            if (b > 1) {
                throw InvalidArgument("MeaningVector: components must be 0 or 1");
            }
        }
    }

    MeaningVector(std::initializer_list<int> bits) {
        bits_.reserve(bits.size());
        for (int b : bits) {
            if (b != 0 && b != 1) {
                throw InvalidArgument("MeaningVector: components must be 0 or 1");
            }
            bits_.push_back(static_cast<std::uint8_t>(b));
        }
    }

    std::size_t size() const noexcept { return bits_.size(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    auto operator<=>(const MeaningVector&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

// ---------------------------------------------------------------------------
// Meaning distances

inline std::size_t hamming(const MeaningVector& a, const MeaningVector& b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("hamming: length mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    }
    std::size_t d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] != b[i];
    }
    return d;
}

// ---------------------------------------------------------------------------
// String distances over arbitrary token sequences

// Unit-cost edit distance; two-row DP over the shorter sequence.
template <std::ranges::random_access_range X, std::ranges::random_access_range Y>
std::size_t levenshtein(const X& x, const Y& y) {
    const auto nx = static_cast<std::size_t>(std::ranges::size(x));
    const auto ny = static_cast<std::size_t>(std::ranges::size(y));
    if (nx < ny) {
        return levenshtein(y, x);
    }
    if (ny == 0) {
        return nx;
    }

    std::vector<std::size_t> row(ny + 1);
    for (std::size_t j = 0; j <= ny; ++j) {
        row[j] = j;
    }
    auto xi = std::ranges::begin(x);
    const auto y0 = std::ranges::begin(y);
    for (std::size_t i = 1; i <= nx; ++i, ++xi) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= ny; ++j) {
            const std::size_t up = row[j];
            if (*xi == y0[j - 1]) {
                row[j] = diag;
            } else {
                row[j] = 1 + std::min({diag, up, row[j - 1]});
            }
            diag = up;
        }
    }
    return row[ny];
}

// Edit distance divided by the longer length; 0 when both are empty.
template <std::ranges::random_access_range X, std::ranges::random_access_range Y>
double levenshtein_normalized(const X& x, const Y& y) {
    const auto longest = std::max<std::size_t>(std::ranges::size(x), std::ranges::size(y));
    if (longest == 0) {
        return 0.0;
    }
    return static_cast<double>(levenshtein(x, y)) / static_cast<double>(longest);
}

// ---------------------------------------------------------------------------
// Vector distances

inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("cosine_distance: dimension mismatch");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw InvalidArgument("cosine_distance: zero-norm vector");
    }
    const double sim = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
    return 1.0 - sim;
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InvalidArgument("euclidean_distance: dimension mismatch");
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

// ---------------------------------------------------------------------------
// Condensed distance matrix

// Upper triangle of a symmetric, zero-diagonal matrix stored row-major:
// (0,1), (0,2), ..., (0,n-1), (1,2), ...
class DistanceMatrix {
public:
    DistanceMatrix() = default;

    explicit DistanceMatrix(std::size_t n) : n_(n), values_(pair_count(n), 0.0) {}

    DistanceMatrix(std::size_t n, std::vector<double> condensed) : n_(n), values_(std::move(condensed)) {
        if (values_.size() != pair_count(n)) {
            throw InvalidArgument("DistanceMatrix: expected " + std::to_string(pair_count(n)) +
                                  " condensed values for n=" + std::to_string(n) + ", got " +
                                  std::to_string(values_.size()));
        }
        for (double v : values_) {
            if (!std::isfinite(v) || v < 0.0) {
                throw InvalidArgument("DistanceMatrix: entries must be finite and non-negative");
            }
        }
    }

    static constexpr std::size_t pair_count(std::size_t n) noexcept { return n < 2 ? 0 : n * (n - 1) / 2; }

    // Condensed position of (i, j), i != j.
    std::size_t index(std::size_t i, std::size_t j) const {
        if (i == j || i >= n_ || j >= n_) {
            throw InvalidArgument("DistanceMatrix: bad index pair");
        }
        if (i > j) {
            std::swap(i, j);
        }
        return i * n_ - i * (i + 1) / 2 + (j - i - 1);
    }

    double operator()(std::size_t i, std::size_t j) const { return i == j ? 0.0 : values_[index(i, j)]; }

    std::size_t n() const noexcept { return n_; }
    std::span<const double> condensed() const noexcept { return values_; }
    std::span<double> condensed_mut() noexcept { return values_; }

    // Row-major n*n copy, zero diagonal.
    std::vector<double> square() const {
        std::vector<double> out(n_ * n_, 0.0);
        std::size_t k = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            for (std::size_t j = i + 1; j < n_; ++j, ++k) {
                out[i * n_ + j] = values_[k];
                out[j * n_ + i] = values_[k];
            }
        }
        return out;
    }

    bool operator==(const DistanceMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

// Builds the condensed matrix of metric(items[i], items[j]) for i < j.
// Rows are distributed over workers; each entry is written to its fixed slot.
template <class Item, class Metric>
DistanceMatrix pairwise_matrix(std::span<const Item> items, Metric&& metric, std::size_t threads = 1) {
    const std::size_t n = items.size();
    if (n < 3) {
        throw InvalidArgument("pairwise_matrix: need at least 3 items, got " + std::to_string(n));
    }
    DistanceMatrix dm(n);
    auto out = dm.condensed_mut();
    parallel_for(n - 1, threads, [&](std::size_t i) {
        std::size_t k = dm.index(i, i + 1);
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            double d;
            try {
                d = static_cast<double>(metric(items[i], items[j]));
            } catch (const std::exception& e) {
                throw InvalidArgument("pairwise_matrix: metric failed on pair (" + std::to_string(i) + ", " +
                                      std::to_string(j) + "): " + e.what());
            }
            if (!std::isfinite(d) || d < 0.0) {
                throw InvalidArgument("pairwise_matrix: metric returned invalid value on pair (" +
                                      std::to_string(i) + ", " + std::to_string(j) + ")");
            }
            out[k] = d;
        }
    });
    return dm;
}

template <class Item, class Metric>
DistanceMatrix pairwise_matrix(const std::vector<Item>& items, Metric&& metric, std::size_t threads = 1) {
    return pairwise_matrix(std::span<const Item>(items), std::forward<Metric>(metric), threads);
}

// ---------------------------------------------------------------------------
// Matrix CSV
//
// Condensed form: first line "n,<n>", then one value per line in condensed
// order. Square form: n lines of n comma-separated values.

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline void write_condensed_csv(std::ostream& os, const DistanceMatrix& dm) {
    os << "n," << dm.n() << '\n';
    for (double v : dm.condensed()) {
        os << format_double(v) << '\n';
    }
}

inline void write_square_csv(std::ostream& os, const DistanceMatrix& dm) {
    const auto sq = dm.square();
    for (std::size_t i = 0; i < dm.n(); ++i) {
        for (std::size_t j = 0; j < dm.n(); ++j) {
            if (j) {
                os << ',';
            }
            os << format_double(sq[i * dm.n() + j]);
        }
        os << '\n';
    }
}

namespace detail {

inline double parse_double(std::string_view field, const std::string& source, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
        field.remove_prefix(1);
    }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
        throw ParseError(source, line, "not a number: '" + std::string(field) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace detail

// Reads either CSV layout; the condensed one is recognised by its "n," header.
inline DistanceMatrix read_matrix_csv(std::istream& is, const std::string& source = "matrix") {
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    if (lines.empty()) {
        throw ParseError(source, 0, "empty matrix file");
    }

    if (lines[0].rfind("n,", 0) == 0) {
        const double nd = detail::parse_double(std::string_view(lines[0]).substr(2), source, 1);
        const auto n = static_cast<std::size_t>(nd);
        if (nd < 0 || static_cast<double>(n) != nd) {
            throw ParseError(source, 1, "bad item count");
        }
        std::vector<double> values;
        values.reserve(lines.size() - 1);
        for (std::size_t i = 1; i < lines.size(); ++i) {
            values.push_back(detail::parse_double(lines[i], source, i + 1));
        }
        if (values.size() != DistanceMatrix::pair_count(n)) {
            throw ParseError(source, 0, "expected " + std::to_string(DistanceMatrix::pair_count(n)) +
                                            " values, got " + std::to_string(values.size()));
        }
        return DistanceMatrix(n, std::move(values));
    }

    const std::size_t n = lines.size();
    std::vector<double> sq(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto fields = detail::split(lines[i], ',');
        if (fields.size() != n) {
            throw ParseError(source, i + 1, "square matrix row has " + std::to_string(fields.size()) +
                                                " fields, expected " + std::to_string(n));
        }
        for (std::size_t j = 0; j < n; ++j) {
            sq[i * n + j] = detail::parse_double(fields[j], source, i + 1);
        }
    }
    std::vector<double> values;
    values.reserve(DistanceMatrix::pair_count(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (sq[i * n + i] != 0.0) {
            throw ParseError(source, i + 1, "non-zero diagonal");
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (sq[i * n + j] != sq[j * n + i]) {
                throw ParseError(source, i + 1, "matrix is not symmetric");
            }
            values.push_back(sq[i * n + j]);
        }
    }
    return DistanceMatrix(n, std::move(values));
}

} // namespace mfc
