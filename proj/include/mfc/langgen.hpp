#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mfc/error.hpp"
#include "mfc/metrics.hpp"
#include "mfc/random.hpp"

namespace mfc {

using Symbol = std::uint32_t;
using Message = std::vector<Symbol>;

// "s00", "s01", ... ; ids past 99 simply grow wider.
inline std::string symbol_name(Symbol s) {
    std::string digits = std::to_string(s);
    return digits.size() < 2 ? "s0" + digits : "s" + digits;
}

// Placement of the grounded expressions inside a message.
enum class ExpressionOrder {
    fixed,        // holistic block first, then concepts by ascending index
    per_meaning,  // one random order per meaning, shared by all of its paraphrases
    per_message,  // a fresh random order for every generated message
};

inline std::string to_string(ExpressionOrder o) {
    switch (o) {
    case ExpressionOrder::fixed: return "fixed";
    case ExpressionOrder::per_meaning: return "per-meaning";
    case ExpressionOrder::per_message: return "per-message";
    }
    return "?";
}

inline ExpressionOrder parse_expression_order(const std::string& s) {
    if (s == "fixed") return ExpressionOrder::fixed;
    if (s == "per-meaning") return ExpressionOrder::per_meaning;
    if (s == "per-message") return ExpressionOrder::per_message;
    throw InvalidArgument("unknown expression order '" + s + "' (fixed|per-meaning|per-message)");
}

struct LanguageSpec {
    std::size_t concepts = 5; // K
    std::size_t holistic = 1; // h: the first h concepts share one expression
    std::size_t synonyms = 1; // s
    std::size_t ungrounded = 0; // u
    std::size_t paraphrases = 1; // p: candidate messages per meaning
    std::uint64_t seed = 0;
    ExpressionOrder order = ExpressionOrder::per_meaning;

    void validate() const {
        if (concepts < 1 || concepts > 16) {
            throw InvalidArgument("LanguageSpec: concept count must be in [1, 16]");
        }
        if (holistic < 1 || holistic > concepts) {
            throw InvalidArgument("LanguageSpec: h must be in [1, K]");
        }
        if (synonyms < 1) {
            throw InvalidArgument("LanguageSpec: s must be >= 1");
        }
        if (paraphrases < 1) {
            throw InvalidArgument("LanguageSpec: p must be >= 1");
        }
    }

    // Token count of every message this spec produces.
    std::size_t message_length() const { return concepts - holistic + 1 + ungrounded; }

    bool operator==(const LanguageSpec&) const = default;
};

struct Lexicon {
    std::size_t concepts = 0;
    std::size_t holistic = 0;
    // Indexed by the first h concept values read as a big-endian binary number.
    std::vector<std::vector<Symbol>> holistic_table;
    // atomic_table[c - h][value]
    std::vector<std::array<std::vector<Symbol>, 2>> atomic_table;
    std::vector<Symbol> ungrounded;

    std::size_t symbol_count() const {
        std::size_t n = ungrounded.size();
        for (const auto& e : holistic_table) n += e.size();
        for (const auto& pair : atomic_table) n += pair[0].size() + pair[1].size();
        return n;
    }
};

enum class BaselineKind { fixed_length, variable_length };

inline std::string to_string(BaselineKind k) {
    return k == BaselineKind::fixed_length ? "random-fixed" : "random-variable";
}

inline BaselineKind parse_baseline_kind(const std::string& s) {
    if (s == "random-fixed") return BaselineKind::fixed_length;
    if (s == "random-variable") return BaselineKind::variable_length;
    throw InvalidArgument("unknown baseline '" + s + "' (random-fixed|random-variable)");
}

inline constexpr std::size_t kBaselineAlphabet = 26;
inline constexpr std::size_t kBaselineFixedLength = 5;
inline constexpr std::size_t kBaselineMaxLength = 10;

struct Language {
    std::vector<std::pair<MeaningVector, Message>> pairs;
    std::optional<LanguageSpec> spec;      // set for grid-generated languages
    std::optional<BaselineKind> baseline;  // set for random baselines
};

// ---------------------------------------------------------------------------

inline std::vector<MeaningVector> enumerate_meanings(std::size_t concepts) {
    if (concepts < 1 || concepts > 16) {
        throw InvalidArgument("enumerate_meanings: concept count must be in [1, 16]");
    }
    const std::size_t count = std::size_t{1} << concepts;
    std::vector<MeaningVector> out;
    out.reserve(count);
    for (std::size_t code = 0; code < count; ++code) {
        std::vector<std::uint8_t> bits(concepts);
        for (std::size_t c = 0; c < concepts; ++c) {
            bits[c] = static_cast<std::uint8_t>((code >> (concepts - 1 - c)) & 1U);
        }
        out.emplace_back(std::move(bits));
    }
    return out;
}

// Symbol ids 0..N-1 are dealt out in a seeded random order so that ids carry
// no information about which concept they express.
template <class Gen>
Lexicon build_lexicon(const LanguageSpec& spec, Gen& rng) {
    spec.validate();
    const std::size_t h = spec.holistic;
    const std::size_t s = spec.synonyms;
    const std::size_t total = (std::size_t{1} << h) * s + (spec.concepts - h) * 2 * s + spec.ungrounded;

    std::vector<Symbol> ids(total);
    std::iota(ids.begin(), ids.end(), Symbol{0});
    shuffle(std::span<Symbol>(ids), rng);
    auto next = ids.begin();
    auto take = [&](std::size_t n) {
        std::vector<Symbol> out(next, next + static_cast<std::ptrdiff_t>(n));
        next += static_cast<std::ptrdiff_t>(n);
        return out;
    };

    Lexicon lex;
    lex.concepts = spec.concepts;
    lex.holistic = h;
    lex.holistic_table.reserve(std::size_t{1} << h);
    for (std::size_t combo = 0; combo < (std::size_t{1} << h); ++combo) {
        lex.holistic_table.push_back(take(s));
    }
    for (std::size_t c = h; c < spec.concepts; ++c) {
        lex.atomic_table.push_back({take(s), take(s)});
    }
    lex.ungrounded = take(spec.ungrounded);
    return lex;
}

namespace detail {

inline std::size_t holistic_code(const MeaningVector& m, std::size_t h) {
    std::size_t code = 0;
    for (std::size_t c = 0; c < h; ++c) {
        code = (code << 1) | m[c];
    }
    return code;
}

inline void drop_duplicate_pairs(Language& lang) {
    std::set<std::pair<MeaningVector, Message>> seen;
    std::vector<std::pair<MeaningVector, Message>> kept;
    kept.reserve(lang.pairs.size());
    for (auto& pr : lang.pairs) {
        if (seen.insert(pr).second) {
            kept.push_back(std::move(pr));
        }
    }
    lang.pairs = std::move(kept);
}

} // namespace detail

// For each meaning, p candidate messages: one expression per slot (the
// holistic block plus each remaining concept), synonyms drawn uniformly and
// independently, slots arranged per spec.order, then the u ungrounded symbols
// inserted one at a time at uniform positions. Duplicate pairs are dropped,
// keeping first occurrences.
inline Language generate_language(const LanguageSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const Lexicon lex = build_lexicon(spec, rng);

    const std::size_t h = spec.holistic;
    const std::size_t slots = spec.concepts - h + 1;
    const auto meanings = enumerate_meanings(spec.concepts);

    Language lang;
    lang.spec = spec;
    lang.pairs.reserve(meanings.size() * spec.paraphrases);

    std::vector<std::size_t> order(slots);
    Message grounded(slots);
    for (const auto& meaning : meanings) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (spec.order == ExpressionOrder::per_meaning) {
            shuffle(std::span<std::size_t>(order), rng);
        }
        for (std::size_t cand = 0; cand < spec.paraphrases; ++cand) {
            const auto& hol = lex.holistic_table[detail::holistic_code(meaning, h)];
            grounded[0] = hol[uniform_below(rng, hol.size())];
            for (std::size_t c = h; c < spec.concepts; ++c) {
                const auto& syn = lex.atomic_table[c - h][meaning[c]];
                grounded[c - h + 1] = syn[uniform_below(rng, syn.size())];
            }
            if (spec.order == ExpressionOrder::per_message) {
                shuffle(std::span<std::size_t>(order), rng);
            }
            Message msg;
            msg.reserve(spec.message_length());
            for (std::size_t slot : order) {
                msg.push_back(grounded[slot]);
            }
            for (Symbol u : lex.ungrounded) {
                const auto pos = uniform_below(rng, msg.size() + 1);
                msg.insert(msg.begin() + static_cast<std::ptrdiff_t>(pos), u);
            }
            lang.pairs.emplace_back(meaning, std::move(msg));
        }
    }
    detail::drop_duplicate_pairs(lang);
    return lang;
}

// One random message per meaning over a 26-symbol alphabet: 5 symbols, or a
// length drawn uniformly from [1, 10].
template <class Gen>
Language generate_random_baseline(BaselineKind kind, std::size_t concepts, Gen& rng) {
    Language lang;
    lang.baseline = kind;
    for (auto& meaning : enumerate_meanings(concepts)) {
        const std::size_t len = kind == BaselineKind::fixed_length
                                    ? kBaselineFixedLength
                                    : static_cast<std::size_t>(uniform_int(rng, 1, kBaselineMaxLength));
        Message msg(len);
        for (auto& sym : msg) {
            sym = static_cast<Symbol>(uniform_below(rng, kBaselineAlphabet));
        }
        lang.pairs.emplace_back(std::move(meaning), std::move(msg));
    }
    return lang;
}

inline Language generate_random_baseline(BaselineKind kind, std::size_t concepts, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return generate_random_baseline(kind, concepts, rng);
}

// Recovers the meaning of a grid-generated message, ignoring ungrounded
// symbols. Returns nullopt if the message is not decodable under `lex`.
inline std::optional<MeaningVector> decode_message(const Lexicon& lex, const Message& msg) {
    std::unordered_map<Symbol, std::pair<int, std::size_t>> where; // symbol -> (slot, value/combination)
    for (std::size_t combo = 0; combo < lex.holistic_table.size(); ++combo) {
        for (Symbol s : lex.holistic_table[combo]) where[s] = {0, combo};
    }
    for (std::size_t i = 0; i < lex.atomic_table.size(); ++i) {
        for (std::size_t v = 0; v < 2; ++v) {
            for (Symbol s : lex.atomic_table[i][v]) where[s] = {static_cast<int>(i + 1), v};
        }
    }
    const std::set<Symbol> ungrounded(lex.ungrounded.begin(), lex.ungrounded.end());

    std::vector<int> value(lex.concepts, -1);
    bool seen_holistic = false;
    for (Symbol s : msg) {
        if (ungrounded.count(s)) {
            continue;
        }
        const auto it = where.find(s);
        if (it == where.end()) {
            return std::nullopt;
        }
        const auto [slot, v] = it->second;
        if (slot == 0) {
            if (seen_holistic) return std::nullopt;
            seen_holistic = true;
            for (std::size_t c = 0; c < lex.holistic; ++c) {
                value[c] = static_cast<int>((v >> (lex.holistic - 1 - c)) & 1U);
            }
        } else {
            const std::size_t c = lex.holistic + static_cast<std::size_t>(slot) - 1;
            if (value[c] >= 0) return std::nullopt;
            value[c] = static_cast<int>(v);
        }
    }
    std::vector<std::uint8_t> bits;
    for (int v : value) {
        if (v < 0) return std::nullopt;
        bits.push_back(static_cast<std::uint8_t>(v));
    }
    return MeaningVector(std::move(bits));
}

inline Lexicon lexicon_for(const LanguageSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    return build_lexicon(spec, rng);
}

// ---------------------------------------------------------------------------
// JSON lines: {"meaning":[0,1,...],"message":["s12","s03",...]}

inline void write_language_jsonl(std::ostream& os, const Language& lang) {
    for (const auto& [meaning, message] : lang.pairs) {
        nlohmann::json row;
        row["meaning"] = meaning.bits();
        auto& tokens = row["message"] = nlohmann::json::array();
        for (Symbol s : message) {
            tokens.push_back(symbol_name(s));
        }
        os << row.dump() << '\n';
    }
}

// Token strings are interned to symbol ids in order of first appearance.
inline Language read_language_jsonl(std::istream& is, const std::string& source = "language") {
    Language lang;
    std::unordered_map<std::string, Symbol> intern;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            const auto row = nlohmann::json::parse(line);
            std::vector<std::uint8_t> bits;
            for (const auto& b : row.at("meaning")) {
                const int v = b.get<int>();
                if (v != 0 && v != 1) throw InvalidArgument("meaning components must be 0 or 1");
                bits.push_back(static_cast<std::uint8_t>(v));
            }
            Message msg;
            for (const auto& tok : row.at("message")) {
                const auto [it, fresh] = intern.try_emplace(tok.get<std::string>(), static_cast<Symbol>(intern.size()));
                msg.push_back(it->second);
            }
            if (msg.empty()) throw InvalidArgument("empty message");
            lang.pairs.emplace_back(MeaningVector(std::move(bits)), std::move(msg));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(source, lineno, e.what());
        }
    }
    return lang;
}

} // namespace mfc
