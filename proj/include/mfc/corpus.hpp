#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mfc/error.hpp"
#include "mfc/metrics.hpp"
#include "mfc/random.hpp"
#include "mfc/stats.hpp"
#include "mfc/tree.hpp"

namespace mfc {

using Tokens = std::vector<std::string>;

// One dictionary definition (or, for sentence corpora, one sentence keyed by
// its id in the definiendum column).
struct DefinitionEntry {
    std::string definiendum;
    Tokens gloss;
    std::optional<ParseTree> parse;

    bool operator==(const DefinitionEntry&) const = default;
};

namespace text {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

inline Tokens split_ws(std::string_view s) {
    Tokens out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        const std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

inline std::string join(const Tokens& tokens, char sep = ' ') {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += sep;
        out += tokens[i];
    }
    return out;
}

inline void chomp(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

inline std::ifstream open(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("cannot open " + path);
    }
    return in;
}

} // namespace text

// ---------------------------------------------------------------------------
// Definitions / sentences: definiendum<TAB>gloss[<TAB>bracketed parse]

inline std::vector<DefinitionEntry> load_definitions(std::istream& is, const std::string& source = "definitions",
                                                     const std::unordered_set<std::string>* allowlist = nullptr) {
    std::vector<DefinitionEntry> out;
    std::string line;
    std::size_t lineno = 0;
    bool any_rows = false;
    while (std::getline(is, line)) {
        ++lineno;
        text::chomp(line);
        if (text::blank(line)) {
            continue;
        }
        any_rows = true;
        const auto fields = detail::split(line, '\t');
        if (fields.size() < 2 || fields.size() > 3) {
            throw ParseError(source, lineno, "expected 2 or 3 tab-separated fields, got " + std::to_string(fields.size()));
        }
        const Tokens head = text::split_ws(fields[0]);
        if (head.size() != 1) {
            throw ParseError(source, lineno, "definiendum must be a single token");
        }
        DefinitionEntry e{head[0], text::split_ws(fields[1]), std::nullopt};
        if (e.gloss.empty()) {
            throw ParseError(source, lineno, "empty gloss");
        }
        if (fields.size() == 3 && !text::blank(fields[2])) {
            try {
                e.parse = parse_bracketed(fields[2]);
            } catch (const ParseError& err) {
                throw ParseError(source, lineno, err.what());
            }
        }
        if (allowlist && !allowlist->count(e.definiendum)) {
            continue;
        }
        out.push_back(std::move(e));
    }
    if (!any_rows) {
        throw ParseError(source, 0, "empty file");
    }
    return out;
}

inline std::vector<DefinitionEntry> load_definitions(const std::string& path,
                                                     const std::unordered_set<std::string>* allowlist = nullptr) {
    auto in = text::open(path);
    return load_definitions(in, path, allowlist);
}

inline void write_definitions(std::ostream& os, std::span<const DefinitionEntry> entries) {
    for (const auto& e : entries) {
        os << e.definiendum << '\t' << text::join(e.gloss);
        if (e.parse) {
            os << '\t' << to_bracketed(*e.parse);
        }
        os << '\n';
    }
}

// Uniform sample of n entries without replacement, returned in input order.
// With one_per_definiendum, one gloss is first picked uniformly for every
// definiendum and n definienda are then sampled.
inline std::vector<DefinitionEntry> sample_definitions(std::span<const DefinitionEntry> entries, std::size_t n,
                                                       bool one_per_definiendum, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> pool;
    if (one_per_definiendum) {
        std::vector<std::string> order;
        std::unordered_map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            auto& g = groups[entries[i].definiendum];
            if (g.empty()) order.push_back(entries[i].definiendum);
            g.push_back(i);
        }
        for (const auto& word : order) {
            const auto& g = groups[word];
            pool.push_back(g[uniform_below(rng, g.size())]);
        }
    } else {
        pool.resize(entries.size());
        std::iota(pool.begin(), pool.end(), std::size_t{0});
    }
    if (n > pool.size()) {
        throw InvalidArgument("sample_definitions: requested " + std::to_string(n) + " items but only " +
                              std::to_string(pool.size()) + " are available");
    }
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < n; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_below(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
    std::vector<DefinitionEntry> out;
    out.reserve(n);
    for (std::size_t i : pool) {
        out.push_back(entries[i]);
    }
    return out;
}

inline std::size_t distinct_definienda(std::span<const DefinitionEntry> entries) {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries) seen.insert(e.definiendum);
    return seen.size();
}

// ---------------------------------------------------------------------------
// Embedding tables (word2vec / GloVe text format)

class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dimension) : dimension_(dimension) {}

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return tokens_.size(); }
    bool empty() const noexcept { return tokens_.empty(); }
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

    void add(std::string token, std::span<const double> vec) {
        if (vec.size() != dimension_) {
            throw InvalidArgument("EmbeddingTable: vector for '" + token + "' has dimension " +
                                  std::to_string(vec.size()) + ", expected " + std::to_string(dimension_));
        }
        if (index_.count(token)) {
            throw InvalidArgument("EmbeddingTable: duplicate token '" + token + "'");
        }
        index_.emplace(token, tokens_.size());
        tokens_.push_back(std::move(token));
        data_.insert(data_.end(), vec.begin(), vec.end());
    }

    std::optional<std::span<const double>> find(const std::string& token) const {
        const auto it = index_.find(token);
        if (it == index_.end()) {
            return std::nullopt;
        }
        return std::span<const double>(data_).subspan(it->second * dimension_, dimension_);
    }

    bool contains(const std::string& token) const { return index_.count(token) != 0; }

    std::span<const double> vector_at(std::size_t i) const {
        return std::span<const double>(data_).subspan(i * dimension_, dimension_);
    }

    void scale(double factor) {
        for (auto& v : data_) v *= factor;
    }

    bool operator==(const EmbeddingTable& o) const {
        return dimension_ == o.dimension_ && tokens_ == o.tokens_ && data_ == o.data_;
    }

private:
    std::size_t dimension_ = 0;
    std::vector<std::string> tokens_;
    std::vector<double> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Optional "<count> <dim>" header; every other line is a token followed by
// dim numbers. A header count that disagrees with the body is reported through
// `warnings` and the body is kept.
inline EmbeddingTable load_embeddings(std::istream& is, const std::string& source = "embeddings",
                                      std::vector<std::string>* warnings = nullptr) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<std::size_t> header_count;
    std::optional<std::size_t> dim;
    EmbeddingTable table;
    std::vector<double> vec;
    bool first = true;

    while (std::getline(is, line)) {
        ++lineno;
        text::chomp(line);
        if (text::blank(line)) {
            continue;
        }
        const Tokens fields = text::split_ws(line);
        if (first) {
            first = false;
            if (fields.size() == 2 && std::all_of(fields[0].begin(), fields[0].end(), ::isdigit) &&
                std::all_of(fields[1].begin(), fields[1].end(), ::isdigit)) {
                header_count = std::stoull(fields[0]);
                dim = std::stoull(fields[1]);
                if (*dim == 0) {
                    throw ParseError(source, lineno, "header declares dimension 0");
                }
                table = EmbeddingTable(*dim);
                continue;
            }
        }
        if (fields.size() < 2) {
            throw ParseError(source, lineno, "expected a token followed by a vector");
        }
        if (!dim) {
            dim = fields.size() - 1;
            table = EmbeddingTable(*dim);
        }
        if (fields.size() - 1 != *dim) {
            throw ParseError(source, lineno, "dimension " + std::to_string(fields.size() - 1) + ", expected " +
                                                 std::to_string(*dim));
        }
        vec.resize(*dim);
        for (std::size_t i = 0; i < *dim; ++i) {
            vec[i] = detail::parse_double(fields[i + 1], source, lineno);
        }
        if (table.contains(fields[0])) {
            throw ParseError(source, lineno, "duplicate token '" + fields[0] + "'");
        }
        table.add(fields[0], vec);
    }
    if (header_count && *header_count != table.size()) {
        if (warnings) {
            warnings->push_back(source + ": header declares " + std::to_string(*header_count) + " vectors, body has " +
                                std::to_string(table.size()));
        }
    }
    if (!dim) {
        throw ParseError(source, 0, "empty embedding file");
    }
    return table;
}

inline EmbeddingTable load_embeddings(const std::string& path, std::vector<std::string>* warnings = nullptr) {
    auto in = text::open(path);
    return load_embeddings(in, path, warnings);
}

inline void write_embeddings(std::ostream& os, const EmbeddingTable& table, bool header = true) {
    if (header) {
        os << table.size() << ' ' << table.dimension() << '\n';
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
        os << table.tokens()[i];
        for (double v : table.vector_at(i)) {
            os << ' ' << format_double(v);
        }
        os << '\n';
    }
}

// ---------------------------------------------------------------------------
// Controls

// One token per line; stored lowercased.
inline std::unordered_set<std::string> load_stoplist(std::istream& is) {
    std::unordered_set<std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        for (const auto& tok : text::split_ws(line)) {
            out.insert(text::lower(tok));
        }
    }
    return out;
}

inline std::unordered_set<std::string> load_stoplist(const std::string& path) {
    auto in = text::open(path);
    return load_stoplist(in);
}

// token<TAB>canonical; keys stored lowercased.
inline std::unordered_map<std::string, std::string> load_synonym_map(std::istream& is,
                                                                     const std::string& source = "synonym map") {
    std::unordered_map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        text::chomp(line);
        if (text::blank(line)) continue;
        const auto fields = detail::split(line, '\t');
        if (fields.size() != 2 || text::blank(fields[0]) || text::blank(fields[1])) {
            throw ParseError(source, lineno, "expected token<TAB>canonical");
        }
        out[text::lower(fields[0])] = std::string(fields[1]);
    }
    return out;
}

inline std::unordered_map<std::string, std::string> load_synonym_map(const std::string& path) {
    auto in = text::open(path);
    return load_synonym_map(in, path);
}

// Drops tokens whose lowercase form is in the stoplist. nullopt when nothing
// survives, so that callers can drop the item.
inline std::optional<Tokens> remove_stopwords(const Tokens& tokens, const std::unordered_set<std::string>& stoplist) {
    Tokens out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!stoplist.count(text::lower(t))) {
            out.push_back(t);
        }
    }
    if (out.empty()) {
        return std::nullopt;
    }
    return out;
}

inline Tokens apply_synonym_map(const Tokens& tokens, const std::unordered_map<std::string, std::string>& lexicon) {
    Tokens out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        const auto it = lexicon.find(text::lower(t));
        out.push_back(it == lexicon.end() ? t : it->second);
    }
    return out;
}

struct ControlConfig {
    bool stopword_removal = false;
    std::string stoplist_path;
    bool synonym_map = false;
    std::string synonym_map_path;
    bool paraphrase_sampling = false;
};

struct ControlOutcome {
    std::vector<DefinitionEntry> entries;
    std::size_t dropped = 0; // items left empty by stop-word removal
};

namespace detail {

inline void map_leaves(ParseTree& t, const std::unordered_map<std::string, std::string>& lexicon) {
    if (t.children.empty()) {
        const auto it = lexicon.find(text::lower(t.label));
        if (it != lexicon.end()) {
            t.label = it->second;
        }
        return;
    }
    for (auto& c : t.children) {
        map_leaves(c, lexicon);
    }
}

} // namespace detail

// Synonym mapping first (glosses and parse leaves), then stop-word removal.
// Stop-word removal discards parses since they no longer match the gloss.
inline ControlOutcome apply_controls(std::span<const DefinitionEntry> entries, const ControlConfig& cfg,
                                     const std::unordered_set<std::string>& stoplist,
                                     const std::unordered_map<std::string, std::string>& synonyms) {
    ControlOutcome out;
    out.entries.reserve(entries.size());
    for (const auto& e : entries) {
        DefinitionEntry d = e;
        if (cfg.synonym_map) {
            d.gloss = apply_synonym_map(d.gloss, synonyms);
            if (d.parse) {
                detail::map_leaves(*d.parse, synonyms);
            }
        }
        if (cfg.stopword_removal) {
            auto kept = remove_stopwords(d.gloss, stoplist);
            if (!kept) {
                ++out.dropped;
                continue;
            }
            d.gloss = std::move(*kept);
            d.parse.reset();
        }
        out.entries.push_back(std::move(d));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Similarity benchmarks (MEN, SICK, ...): item_a<TAB>item_b<TAB>score

struct RatedPair {
    std::string item_a;
    std::string item_b;
    double human_score = 0.0;
};

inline std::vector<RatedPair> load_ratings(std::istream& is, const std::string& source = "ratings") {
    std::vector<RatedPair> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        text::chomp(line);
        if (text::blank(line)) continue;
        auto fields = detail::split(line, '\t');
        if (fields.size() != 3) {
            // MEN ships space-separated.
            const Tokens ws = text::split_ws(line);
            if (ws.size() != 3) {
                throw ParseError(source, lineno, "expected item_a, item_b, score");
            }
            out.push_back({ws[0], ws[1], detail::parse_double(ws[2], source, lineno)});
        } else {
            out.push_back({std::string(fields[0]), std::string(fields[1]), detail::parse_double(fields[2], source, lineno)});
        }
        if (!std::isfinite(out.back().human_score)) {
            throw ParseError(source, lineno, "score must be finite");
        }
    }
    return out;
}

inline std::vector<RatedPair> load_ratings(const std::string& path) {
    auto in = text::open(path);
    return load_ratings(in, path);
}

enum class VectorMetric { cosine, euclidean };

inline std::string to_string(VectorMetric m) { return m == VectorMetric::cosine ? "cosine" : "euclidean"; }

inline VectorMetric parse_vector_metric(const std::string& s) {
    if (s == "cosine") return VectorMetric::cosine;
    if (s == "euclidean") return VectorMetric::euclidean;
    throw InvalidArgument("unknown vector metric '" + s + "' (cosine|euclidean)");
}

inline double vector_distance(VectorMetric m, std::span<const double> a, std::span<const double> b) {
    return m == VectorMetric::cosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

struct BenchmarkResult {
    double rho = 0.0;     // Spearman(distance, human score); good models are negative
    std::size_t covered = 0;
    std::size_t skipped = 0;
};

inline BenchmarkResult eval_embedding_benchmark(const EmbeddingTable& table, std::span<const RatedPair> pairs,
                                                VectorMetric metric) {
    std::vector<double> dist, score;
    BenchmarkResult res;
    for (const auto& p : pairs) {
        const auto a = table.find(p.item_a);
        const auto b = table.find(p.item_b);
        if (!a || !b) {
            ++res.skipped;
            continue;
        }
        dist.push_back(vector_distance(metric, *a, *b));
        score.push_back(p.human_score);
    }
    res.covered = dist.size();
    if (res.covered < 3) {
        throw InvalidArgument("eval_embedding_benchmark: only " + std::to_string(res.covered) +
                              " rated pairs are covered by the embedding table (need 3)");
    }
    res.rho = spearman(dist, score);
    return res;
}

// ---------------------------------------------------------------------------

struct MeaningAlignment {
    std::vector<DefinitionEntry> entries;
    std::vector<std::vector<double>> vectors;
    std::size_t dropped = 0;            // entries whose definiendum is out of vocabulary
    std::vector<std::string> oov;       // the dropped definienda, in input order
};

// Pairs every definition with its definiendum's vector; OOV entries are
// dropped and counted.
inline MeaningAlignment meaning_vectors_for_definitions(std::span<const DefinitionEntry> entries,
                                                        const EmbeddingTable& table) {
    if (table.empty()) {
        throw InvalidArgument("meaning_vectors_for_definitions: embedding table is empty");
    }
    MeaningAlignment out;
    for (const auto& e : entries) {
        const auto v = table.find(e.definiendum);
        if (!v) {
            ++out.dropped;
            out.oov.push_back(e.definiendum);
            continue;
        }
        out.entries.push_back(e);
        out.vectors.emplace_back(v->begin(), v->end());
    }
    if (out.entries.empty()) {
        throw InvalidArgument("meaning_vectors_for_definitions: every entry is out of vocabulary");
    }
    return out;
}

} // namespace mfc
