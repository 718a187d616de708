#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mfc/corpus.hpp"
#include "mfc/error.hpp"
#include "mfc/langgen.hpp"
#include "mfc/metrics.hpp"
#include "mfc/parallel.hpp"
#include "mfc/random.hpp"
#include "mfc/stats.hpp"
#include "mfc/tree.hpp"

namespace mfc {

// ---------------------------------------------------------------------------
// Artificial-language sweep

struct SweepGrid {
    std::vector<std::size_t> h{1, 2, 3, 4, 5};
    std::vector<std::size_t> s{1, 2, 3};
    std::vector<std::size_t> u{0, 1, 2, 3};
    std::vector<std::size_t> p{1, 2, 3};

    std::size_t size() const { return h.size() * s.size() * u.size() * p.size(); }
};

struct SweepConfig {
    SweepGrid grid;
    std::size_t concepts = 5;
    std::size_t runs_per_config = 50;
    bool include_baselines = true;
    ExpressionOrder order = ExpressionOrder::per_meaning;
    MantelConfig mantel;  // its seed is replaced by one derived per run
    std::uint64_t master_seed = 0;

    void validate() const {
        if (grid.h.empty() || grid.s.empty() || grid.u.empty() || grid.p.empty()) {
            throw InvalidArgument("SweepConfig: every grid dimension needs at least one level");
        }
        if (runs_per_config < 1) {
            throw InvalidArgument("SweepConfig: runs_per_config must be >= 1");
        }
        mantel.validate();
        for (std::size_t h : grid.h) {
            LanguageSpec probe;
            probe.concepts = concepts;
            probe.holistic = h;
            probe.validate();
        }
        for (std::size_t s : grid.s) {
            if (s < 1) throw InvalidArgument("SweepConfig: s levels must be >= 1");
        }
        for (std::size_t p : grid.p) {
            if (p < 1) throw InvalidArgument("SweepConfig: p levels must be >= 1");
        }
    }
};

// A grid point or a random baseline.
struct ConfigKey {
    std::optional<BaselineKind> baseline;
    std::size_t h = 0, s = 0, u = 0, p = 0;

    std::string label() const {
        if (baseline) return to_string(*baseline);
        return "h=" + std::to_string(h) + ",s=" + std::to_string(s) + ",u=" + std::to_string(u) +
               ",p=" + std::to_string(p);
    }

    bool operator==(const ConfigKey&) const = default;
};

struct RunRecord {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::size_t items = 0; // meaning-message pairs after deduplication
    std::optional<MantelResult> result;
    std::string error; // set when result is empty
};

struct ConfigSummary {
    ConfigKey key;
    std::size_t runs = 0;
    std::size_t failed = 0;
    double mean_r = std::numeric_limits<double>::quiet_NaN();
    double mean_p = std::numeric_limits<double>::quiet_NaN();
    double mean_z = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q2 = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
    bool significant = false;
    std::vector<RunRecord> records;
};

// Linear interpolation between closest ranks: position (n-1)q in sorted data.
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw InvalidArgument("quantile: empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

// Failed runs are counted but excluded from every statistic. A config with
// no successful run is never significant.
inline ConfigSummary aggregate_runs(std::vector<RunRecord> records, double alpha, ConfigKey key = {}) {
    if (records.empty()) {
        throw InvalidArgument("aggregate_runs: no runs");
    }
    ConfigSummary sum;
    sum.key = key;
    sum.runs = records.size();
    std::vector<double> rs;
    double p_total = 0.0, z_total = 0.0;
    for (const auto& rec : records) {
        if (!rec.result) {
            ++sum.failed;
            continue;
        }
        rs.push_back(rec.result->r);
        p_total += rec.result->p_value;
        z_total += rec.result->z_score;
    }
    if (!rs.empty()) {
        const auto n = static_cast<double>(rs.size());
        double r_total = 0.0;
        for (double r : rs) r_total += r;
        sum.mean_r = r_total / n;
        sum.mean_p = p_total / n;
        sum.mean_z = z_total / n;
        sum.q1 = quantile(rs, 0.25);
        sum.q2 = quantile(rs, 0.50);
        sum.q3 = quantile(rs, 0.75);
        sum.significant = sum.mean_p < alpha;
    }
    sum.records = std::move(records);
    return sum;
}

inline DistanceMatrix meaning_matrix(const Language& lang, std::size_t threads = 1) {
    std::vector<MeaningVector> meanings;
    meanings.reserve(lang.pairs.size());
    for (const auto& pr : lang.pairs) meanings.push_back(pr.first);
    return pairwise_matrix(meanings, [](const MeaningVector& a, const MeaningVector& b) { return hamming(a, b); },
                           threads);
}

inline DistanceMatrix form_matrix(const Language& lang, std::size_t threads = 1) {
    std::vector<Message> forms;
    forms.reserve(lang.pairs.size());
    for (const auto& pr : lang.pairs) forms.push_back(pr.second);
    return pairwise_matrix(forms, [](const Message& a, const Message& b) { return levenshtein_normalized(a, b); },
                           threads);
}

// Hamming over meanings against normalized Levenshtein over messages.
inline MantelResult language_mfc(const Language& lang, const MantelConfig& cfg, std::size_t threads = 1) {
    return mantel(meaning_matrix(lang, threads), form_matrix(lang, threads), cfg, threads);
}

inline std::vector<ConfigKey> sweep_configs(const SweepConfig& cfg) {
    std::vector<ConfigKey> keys;
    for (std::size_t h : cfg.grid.h)
        for (std::size_t s : cfg.grid.s)
            for (std::size_t u : cfg.grid.u)
                for (std::size_t p : cfg.grid.p) keys.push_back({std::nullopt, h, s, u, p});
    if (cfg.include_baselines) {
        keys.push_back({BaselineKind::fixed_length, 0, 0, 0, 0});
        keys.push_back({BaselineKind::variable_length, 0, 0, 0, 0});
    }
    return keys;
}

inline std::uint64_t run_seed(std::uint64_t master, const ConfigKey& key, std::size_t run) {
    if (key.baseline) {
        return derive_seed(master, {string_key(to_string(*key.baseline)), run});
    }
    return derive_seed(master, {key.h, key.s, key.u, key.p, run});
}

inline RunRecord run_single(const SweepConfig& cfg, const ConfigKey& key, std::size_t run) {
    RunRecord rec;
    rec.run = run;
    rec.seed = run_seed(cfg.master_seed, key, run);
    try {
        Language lang;
        if (key.baseline) {
            lang = generate_random_baseline(*key.baseline, cfg.concepts, rec.seed);
        } else {
            LanguageSpec spec;
            spec.concepts = cfg.concepts;
            spec.holistic = key.h;
            spec.synonyms = key.s;
            spec.ungrounded = key.u;
            spec.paraphrases = key.p;
            spec.seed = rec.seed;
            spec.order = cfg.order;
            lang = generate_language(spec);
        }
        rec.items = lang.pairs.size();
        MantelConfig mc = cfg.mantel;
        mc.seed = derive_seed(rec.seed, {string_key("mantel")});
        rec.result = language_mfc(lang, mc);
    } catch (const Error& e) {
        rec.error = e.what();
    }
    return rec;
}

// Every (config, run) is an independent work unit; results are merged by
// index, so the output is identical for any thread count.
inline std::vector<ConfigSummary> run_artificial_sweep(const SweepConfig& cfg, std::size_t threads = 1) {
    cfg.validate();
    const auto keys = sweep_configs(cfg);
    const std::size_t runs = cfg.runs_per_config;
    std::vector<RunRecord> records(keys.size() * runs);
    parallel_for(records.size(), threads, [&](std::size_t unit) {
        records[unit] = run_single(cfg, keys[unit / runs], unit % runs);
    });

    std::vector<ConfigSummary> out;
    out.reserve(keys.size());
    for (std::size_t c = 0; c < keys.size(); ++c) {
        std::vector<RunRecord> mine(std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>(c * runs)),
                                    std::make_move_iterator(records.begin() + static_cast<std::ptrdiff_t>((c + 1) * runs)));
        out.push_back(aggregate_runs(std::move(mine), cfg.mantel.alpha, keys[c]));
    }
    return out;
}

// Dummy-coded OLS of per-run r on the four factors; the lowest level of each
// factor is the baseline. Baselines and failed runs are excluded.
inline OLSFit fit_factor_model(std::span<const ConfigSummary> summaries) {
    std::array<std::set<std::size_t>, 4> levels;
    std::vector<std::vector<std::string>> rows;
    std::vector<double> y;
    for (const auto& sum : summaries) {
        if (sum.key.baseline) continue;
        const std::array<std::size_t, 4> lv{sum.key.h, sum.key.s, sum.key.u, sum.key.p};
        for (std::size_t f = 0; f < 4; ++f) levels[f].insert(lv[f]);
        for (const auto& rec : sum.records) {
            if (!rec.result) continue;
            rows.push_back({std::to_string(lv[0]), std::to_string(lv[1]), std::to_string(lv[2]), std::to_string(lv[3])});
            y.push_back(rec.result->r);
        }
    }
    static constexpr std::array<const char*, 4> names{"h", "s", "u", "p"};
    std::vector<Factor> factors;
    for (std::size_t f = 0; f < 4; ++f) {
        if (levels[f].empty()) {
            throw InvalidArgument("fit_factor_model: no grid configurations");
        }
        Factor fac{names[f], {}, std::to_string(*levels[f].begin())};
        for (std::size_t v : levels[f]) fac.levels.push_back(std::to_string(v));
        factors.push_back(std::move(fac));
    }
    const auto design = dummy_code(factors, rows);
    return ols_fit(design, y);
}

struct Quartiles {
    double q1 = 0.0, q2 = 0.0, q3 = 0.0;
    std::size_t configs = 0;
};

// For each level of one factor ('h', 's', 'u' or 'p'), quartiles of the
// per-config mean r over grid configs at that level.
inline std::map<std::size_t, Quartiles> marginal_quartiles(std::span<const ConfigSummary> summaries, char factor,
                                                           bool significant_only) {
    std::map<std::size_t, std::vector<double>> by_level;
    for (const auto& sum : summaries) {
        if (sum.key.baseline || std::isnan(sum.mean_r)) continue;
        if (significant_only && !sum.significant) continue;
        std::size_t level;
        switch (factor) {
        case 'h': level = sum.key.h; break;
        case 's': level = sum.key.s; break;
        case 'u': level = sum.key.u; break;
        case 'p': level = sum.key.p; break;
        default: throw InvalidArgument(std::string("marginal_quartiles: unknown factor ") + factor);
        }
        by_level[level].push_back(sum.mean_r);
    }
    std::map<std::size_t, Quartiles> out;
    for (auto& [level, values] : by_level) {
        out[level] = {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75), values.size()};
    }
    return out;
}

// Long-format outputs.

inline std::string csv_number(double v) {
    return std::isnan(v) ? std::string{} : format_double(v);
}

inline void write_runs_csv(std::ostream& os, std::span<const ConfigSummary> summaries) {
    os << "config,h,s,u,p,run,seed,n_items,r,p_value,z,status\n";
    for (const auto& sum : summaries) {
        const auto& k = sum.key;
        const std::string levels = k.baseline ? ",,,"
                                              : std::to_string(k.h) + "," + std::to_string(k.s) + "," +
                                                    std::to_string(k.u) + "," + std::to_string(k.p);
        for (const auto& rec : sum.records) {
            os << '"' << k.label() << "\"," << levels << ',' << rec.run << ',' << rec.seed << ',' << rec.items << ',';
            if (rec.result) {
                os << format_double(rec.result->r) << ',' << format_double(rec.result->p_value) << ','
                   << format_double(rec.result->z_score) << ",ok\n";
            } else {
                os << ",,,failed\n";
            }
        }
    }
}

inline void write_summary_csv(std::ostream& os, std::span<const ConfigSummary> summaries) {
    os << "config,h,s,u,p,runs,failed,mean_r,mean_p,mean_z,q1_r,q2_r,q3_r,significant\n";
    for (const auto& sum : summaries) {
        const auto& k = sum.key;
        os << '"' << k.label() << "\",";
        if (k.baseline) {
            os << ",,,,";
        } else {
            os << k.h << ',' << k.s << ',' << k.u << ',' << k.p << ',';
        }
        os << sum.runs << ',' << sum.failed << ',' << csv_number(sum.mean_r) << ',' << csv_number(sum.mean_p) << ','
           << csv_number(sum.mean_z) << ',' << csv_number(sum.q1) << ',' << csv_number(sum.q2) << ','
           << csv_number(sum.q3) << ',' << (sum.significant ? "true" : "false") << '\n';
    }
}

// ---------------------------------------------------------------------------
// Natural-language MFC

// Composes the two distance matrices and the Mantel test.
template <class MeaningItem, class FormItem, class MeaningMetric, class FormMetric>
MantelResult mfc_for_corpus(std::span<const MeaningItem> meanings, std::span<const FormItem> forms,
                            MeaningMetric&& meaning_metric, FormMetric&& form_metric, const MantelConfig& cfg,
                            std::size_t threads = 1) {
    if (meanings.size() != forms.size()) {
        throw InvalidArgument("mfc_for_corpus: meaning and form item counts differ");
    }
    if (meanings.size() < 3) {
        throw InvalidArgument("mfc_for_corpus: need at least 3 items");
    }
    const auto dm_meaning = pairwise_matrix(meanings, meaning_metric, threads);
    const auto dm_form = pairwise_matrix(forms, form_metric, threads);
    return mantel(dm_meaning, dm_form, cfg, threads);
}

enum class FormMetricKind { levenshtein, levenshtein_norm, ted, ted_norm };

inline std::string to_string(FormMetricKind m) {
    switch (m) {
    case FormMetricKind::levenshtein: return "levenshtein";
    case FormMetricKind::levenshtein_norm: return "levenshtein-norm";
    case FormMetricKind::ted: return "ted";
    case FormMetricKind::ted_norm: return "ted-norm";
    }
    return "?";
}

inline FormMetricKind parse_form_metric(const std::string& s) {
    if (s == "levenshtein") return FormMetricKind::levenshtein;
    if (s == "levenshtein-norm") return FormMetricKind::levenshtein_norm;
    if (s == "ted") return FormMetricKind::ted;
    if (s == "ted-norm") return FormMetricKind::ted_norm;
    throw InvalidArgument("unknown form metric '" + s + "' (levenshtein|levenshtein-norm|ted|ted-norm)");
}

inline bool is_tree_metric(FormMetricKind m) {
    return m == FormMetricKind::ted || m == FormMetricKind::ted_norm;
}

inline DistanceMatrix form_matrix(std::span<const DefinitionEntry> entries, FormMetricKind metric,
                                  std::size_t threads = 1) {
    if (is_tree_metric(metric)) {
        std::vector<ParseTree> trees;
        trees.reserve(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!entries[i].parse) {
                throw InvalidArgument("form_matrix: item " + std::to_string(i) + " ('" + entries[i].definiendum +
                                      "') has no parse tree");
            }
            trees.push_back(*entries[i].parse);
        }
        if (metric == FormMetricKind::ted) {
            return pairwise_matrix(trees, [](const ParseTree& a, const ParseTree& b) { return ted(a, b); }, threads);
        }
        return pairwise_matrix(trees, [](const ParseTree& a, const ParseTree& b) { return ted_normalized(a, b); },
                               threads);
    }
    std::vector<Tokens> glosses;
    glosses.reserve(entries.size());
    for (const auto& e : entries) glosses.push_back(e.gloss);
    if (metric == FormMetricKind::levenshtein) {
        return pairwise_matrix(glosses, [](const Tokens& a, const Tokens& b) { return levenshtein(a, b); }, threads);
    }
    return pairwise_matrix(glosses, [](const Tokens& a, const Tokens& b) { return levenshtein_normalized(a, b); },
                           threads);
}

inline DistanceMatrix meaning_matrix(std::span<const std::vector<double>> vectors, VectorMetric metric,
                                     std::size_t threads = 1) {
    return pairwise_matrix(vectors,
                           [metric](const std::vector<double>& a, const std::vector<double>& b) {
                               return vector_distance(metric, a, b);
                           },
                           threads);
}

struct CorpusRunConfig {
    VectorMetric meaning_metric = VectorMetric::cosine;
    FormMetricKind form_metric = FormMetricKind::levenshtein;
    ControlConfig controls;
    std::size_t sample_size = 0; // 0: one item per distinct definiendum
    std::size_t repeats = 5;
    std::uint64_t seed = 0;
    MantelConfig mantel;  // its seed is replaced by one derived per repeat

    void validate() const {
        if (controls.stopword_removal && is_tree_metric(form_metric)) {
            throw InvalidArgument("tree edit distance is not computed after stop-word removal: the parses no "
                                  "longer match the glosses");
        }
        if (repeats < 1) {
            throw InvalidArgument("repeats must be >= 1");
        }
        mantel.validate();
    }
};

struct RepeatResult {
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::size_t items = 0;
    std::size_t distinct_definienda = 0;
    std::size_t dropped_by_controls = 0;
    MantelResult mantel;
};

struct CorpusReport {
    std::vector<RepeatResult> repeats;
    std::size_t oov_dropped = 0;
    double mean_r = 0.0;
    double sd_r = 0.0; // sample standard deviation; 0 for a single repeat
    double mean_p = 0.0;
    double mean_z = 0.0;
};

// Drops OOV definienda, then per repeat: sample, apply controls, build both
// matrices and run the Mantel test.
inline CorpusReport run_corpus_mfc(std::span<const DefinitionEntry> entries, const EmbeddingTable& table,
                                   const CorpusRunConfig& cfg, const std::unordered_set<std::string>& stoplist = {},
                                   const std::unordered_map<std::string, std::string>& synonyms = {},
                                   std::size_t threads = 1) {
    cfg.validate();
    const auto aligned = meaning_vectors_for_definitions(entries, table);
    CorpusReport report;
    report.oov_dropped = aligned.dropped;

    const bool one_per = !cfg.controls.paraphrase_sampling;
    const std::size_t n = cfg.sample_size ? cfg.sample_size : distinct_definienda(aligned.entries);

    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
        RepeatResult rr;
        rr.repeat = rep;
        rr.seed = derive_seed(cfg.seed, {rep});
        const auto sample = sample_definitions(aligned.entries, n, one_per, rr.seed);
        auto controlled = apply_controls(sample, cfg.controls, stoplist, synonyms);
        rr.dropped_by_controls = controlled.dropped;
        rr.items = controlled.entries.size();
        rr.distinct_definienda = distinct_definienda(controlled.entries);

        std::vector<std::vector<double>> vectors;
        vectors.reserve(controlled.entries.size());
        for (const auto& e : controlled.entries) {
            const auto v = table.find(e.definiendum);
            vectors.emplace_back(v->begin(), v->end());
        }
        if (vectors.size() < 3) {
            throw InvalidArgument("run_corpus_mfc: fewer than 3 items left after sampling and controls");
        }
        MantelConfig mc = cfg.mantel;
        mc.seed = derive_seed(rr.seed, {string_key("mantel")});
        rr.mantel = mantel(meaning_matrix(vectors, cfg.meaning_metric, threads),
                           form_matrix(controlled.entries, cfg.form_metric, threads), mc, threads);
        report.repeats.push_back(rr);
    }

    const auto k = static_cast<double>(report.repeats.size());
    for (const auto& rr : report.repeats) {
        report.mean_r += rr.mantel.r / k;
        report.mean_p += rr.mantel.p_value / k;
        report.mean_z += rr.mantel.z_score / k;
    }
    if (report.repeats.size() > 1) {
        double ss = 0.0;
        for (const auto& rr : report.repeats) ss += (rr.mantel.r - report.mean_r) * (rr.mantel.r - report.mean_r);
        report.sd_r = std::sqrt(ss / (k - 1.0));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Problematic pairs

struct RankedPair {
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    double meaning_rank = 0.0;
    double form_rank = 0.0;
    double rank_gap = 0.0;
};

// The k item pairs whose meaning-distance rank and form-distance rank differ
// most. Ties are broken by (index_a, index_b) ascending.
inline std::vector<RankedPair> problematic_pairs(const DistanceMatrix& dm_meaning, const DistanceMatrix& dm_form,
                                                 std::size_t k = 100) {
    if (dm_meaning.n() != dm_form.n()) {
        throw InvalidArgument("problematic_pairs: matrix size mismatch");
    }
    const std::size_t total = DistanceMatrix::pair_count(dm_meaning.n());
    if (k > total) {
        throw InvalidArgument("problematic_pairs: k=" + std::to_string(k) + " exceeds the " + std::to_string(total) +
                              " available pairs");
    }
    const auto rm = average_ranks(dm_meaning.condensed());
    const auto rf = average_ranks(dm_form.condensed());

    std::vector<RankedPair> all;
    all.reserve(total);
    const std::size_t n = dm_meaning.n();
    for (std::size_t i = 0, c = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j, ++c) {
            all.push_back({i, j, rm[c], rf[c], std::abs(rm[c] - rf[c])});
        }
    }
    // Pairs are generated in (a, b) order, so a stable sort keeps the tie-break.
    std::stable_sort(all.begin(), all.end(),
                     [](const RankedPair& x, const RankedPair& y) { return x.rank_gap > y.rank_gap; });
    all.resize(k);
    return all;
}

} // namespace mfc
