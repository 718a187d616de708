// mfc: batch front end for the meaning-form correlation toolkit.
//
// Every command that writes to --out also writes manifest.json; running
// `mfc replay <manifest> --out <dir>` regenerates the same files.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mfc/mfc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string absolute_path(const std::string& p) {
    return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

std::ofstream create(const fs::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw mfc::Error("cannot write " + path.string());
    return os;
}

void write_json_file(const fs::path& path, const json& j) {
    auto os = create(path);
    os << j.dump(2) << '\n';
}

void write_manifest(const fs::path& out, const std::string& command, const json& params,
                    const std::vector<std::string>& outputs) {
    json m;
    m["schema_version"] = kSchemaVersion;
    m["command"] = command;
    m["params"] = params;
    m["outputs"] = outputs;
    write_json_file(out / "manifest.json", m);
}

void prepare_out(const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw mfc::Error("cannot create output directory " + out.string());
}

// ---------------------------------------------------------------------------
// sweep

std::vector<std::size_t> parse_levels(const std::string& spec, const std::string& token) {
    std::vector<std::size_t> out;
    for (const auto& part : mfc::detail::split(spec, ',')) {
        const auto dash = part.find('-');
        try {
            if (dash == std::string_view::npos) {
                out.push_back(std::stoul(std::string(part)));
            } else {
                const auto lo = std::stoul(std::string(part.substr(0, dash)));
                const auto hi = std::stoul(std::string(part.substr(dash + 1)));
                if (hi < lo) throw UsageError("empty range");
                for (auto v = lo; v <= hi; ++v) out.push_back(v);
            }
        } catch (const std::exception&) {
            throw UsageError("bad --grid entry '" + token + "'");
        }
    }
    return out;
}

mfc::SweepGrid parse_grid(const std::vector<std::string>& tokens) {
    mfc::SweepGrid grid;
    for (const auto& tok : tokens) {
        const auto eq = tok.find('=');
        if (eq != 1) throw UsageError("bad --grid entry '" + tok + "' (expected h=, s=, u= or p=)");
        auto levels = parse_levels(tok.substr(2), tok);
        switch (tok[0]) {
        case 'h': grid.h = std::move(levels); break;
        case 's': grid.s = std::move(levels); break;
        case 'u': grid.u = std::move(levels); break;
        case 'p': grid.p = std::move(levels); break;
        default: throw UsageError("bad --grid entry '" + tok + "' (expected h=, s=, u= or p=)");
        }
    }
    return grid;
}

void run_sweep(const json& params, const fs::path& out, std::size_t threads) {
    mfc::SweepConfig cfg;
    const auto& g = params.at("grid");
    cfg.grid.h = g.at("h").get<std::vector<std::size_t>>();
    cfg.grid.s = g.at("s").get<std::vector<std::size_t>>();
    cfg.grid.u = g.at("u").get<std::vector<std::size_t>>();
    cfg.grid.p = g.at("p").get<std::vector<std::size_t>>();
    cfg.concepts = params.at("concepts").get<std::size_t>();
    cfg.runs_per_config = params.at("runs").get<std::size_t>();
    cfg.include_baselines = params.at("baselines").get<bool>();
    cfg.order = mfc::parse_expression_order(params.at("order").get<std::string>());
    cfg.master_seed = params.at("seed").get<std::uint64_t>();
    cfg.mantel = mfc::mantel_config_from_json(params.at("mantel"));
    cfg.validate();

    prepare_out(out);
    const auto summaries = mfc::run_artificial_sweep(cfg, threads);
    std::vector<std::string> outputs{"runs.csv", "summary.csv"};
    {
        auto os = create(out / "runs.csv");
        mfc::write_runs_csv(os, summaries);
    }
    {
        auto os = create(out / "summary.csv");
        mfc::write_summary_csv(os, summaries);
    }
    try {
        const auto fit = mfc::fit_factor_model(summaries);
        auto os = create(out / "factor_model.csv");
        mfc::write_ols_csv(os, fit);
        outputs.push_back("factor_model.csv");
    } catch (const mfc::Error& e) {
        std::cerr << "mfc sweep: factor model not fitted: " << e.what() << '\n';
    }
    write_manifest(out, "sweep", params, outputs);

    std::size_t failed_configs = 0;
    for (const auto& s : summaries) failed_configs += s.failed == s.runs;
    std::cerr << "mfc sweep: " << summaries.size() << " configs x " << cfg.runs_per_config << " runs -> "
              << out.string() << '\n';
    if (failed_configs) {
        std::cerr << "mfc sweep: " << failed_configs << " configs had no successful run (constant distance matrix)\n";
    }
}

// ---------------------------------------------------------------------------
// mfc

json corpus_report_json(const mfc::CorpusReport& rep, const mfc::CorpusRunConfig& cfg) {
    json repeats = json::array();
    for (const auto& rr : rep.repeats) {
        json j = mfc::to_json(rr.mantel);
        j["repeat"] = rr.repeat;
        j["seed"] = rr.seed;
        j["items"] = rr.items;
        j["distinct_definienda"] = rr.distinct_definienda;
        j["dropped_by_controls"] = rr.dropped_by_controls;
        repeats.push_back(j);
    }
    json summary{{"repeats", rep.repeats.size()}, {"mean_r", rep.mean_r},   {"sd_r", rep.sd_r},
                 {"mean_p", rep.mean_p},          {"mean_z", rep.mean_z},   {"oov_dropped", rep.oov_dropped},
                 {"meaning_metric", mfc::to_string(cfg.meaning_metric)},
                 {"form_metric", mfc::to_string(cfg.form_metric)}};
    return {{"repeats", repeats}, {"summary", summary}};
}

json run_mfc(const json& params, std::size_t threads) {
    mfc::CorpusRunConfig cfg;
    cfg.meaning_metric = mfc::parse_vector_metric(params.at("meaning_metric").get<std::string>());
    cfg.form_metric = mfc::parse_form_metric(params.at("form_metric").get<std::string>());
    for (const auto& c : params.at("controls")) {
        const auto name = c.get<std::string>();
        if (name == "stopwords") {
            cfg.controls.stopword_removal = true;
        } else if (name == "synonyms") {
            cfg.controls.synonym_map = true;
        } else if (name == "paraphrases") {
            cfg.controls.paraphrase_sampling = true;
        } else {
            throw UsageError("unknown control '" + name + "' (stopwords|synonyms|paraphrases)");
        }
    }
    cfg.controls.stoplist_path = params.at("stoplist").get<std::string>();
    cfg.controls.synonym_map_path = params.at("synonym_map").get<std::string>();
    if (cfg.controls.stopword_removal && cfg.controls.stoplist_path.empty()) {
        throw UsageError("--control stopwords needs --stoplist");
    }
    if (cfg.controls.synonym_map && cfg.controls.synonym_map_path.empty()) {
        throw UsageError("--control synonyms needs --synonym-map");
    }
    cfg.sample_size = params.at("sample_size").get<std::size_t>();
    cfg.repeats = params.at("repeats").get<std::size_t>();
    cfg.seed = params.at("seed").get<std::uint64_t>();
    cfg.mantel = mfc::mantel_config_from_json(params.at("mantel"));
    // Checked before any file is read.
    cfg.validate();

    const auto entries = mfc::load_definitions(params.at("corpus").get<std::string>());
    const auto table = mfc::load_embeddings(params.at("embeddings").get<std::string>());
    std::unordered_set<std::string> stoplist;
    std::unordered_map<std::string, std::string> synonyms;
    if (cfg.controls.stopword_removal) stoplist = mfc::load_stoplist(cfg.controls.stoplist_path);
    if (cfg.controls.synonym_map) synonyms = mfc::load_synonym_map(cfg.controls.synonym_map_path);

    const auto report = mfc::run_corpus_mfc(entries, table, cfg, stoplist, synonyms, threads);
    return corpus_report_json(report, cfg);
}

// ---------------------------------------------------------------------------
// eval-embeddings

json run_eval(const json& params) {
    const auto table = mfc::load_embeddings(params.at("embeddings").get<std::string>());
    const auto pairs = mfc::load_ratings(params.at("ratings").get<std::string>());
    const auto metric = mfc::parse_vector_metric(params.at("metric").get<std::string>());
    const auto res = mfc::eval_embedding_benchmark(table, pairs, metric);
    return {{"metric", mfc::to_string(metric)}, {"rho", res.rho}, {"covered", res.covered}, {"skipped", res.skipped}};
}

// ---------------------------------------------------------------------------
// problem-pairs

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

std::string run_problem_pairs(const json& params, std::size_t threads) {
    const auto k = params.at("k").get<std::size_t>();
    std::vector<std::string> labels, texts;
    mfc::DistanceMatrix dm_meaning, dm_form;
    if (params.contains("meaning_matrix")) {
        const auto read = [](const std::string& path) {
            auto in = mfc::text::open(path);
            return mfc::read_matrix_csv(in, path);
        };
        dm_meaning = read(params.at("meaning_matrix").get<std::string>());
        dm_form = read(params.at("form_matrix").get<std::string>());
    } else {
        const auto entries = mfc::load_definitions(params.at("corpus").get<std::string>());
        const auto table = mfc::load_embeddings(params.at("embeddings").get<std::string>());
        const auto aligned = mfc::meaning_vectors_for_definitions(entries, table);
        dm_meaning = mfc::meaning_matrix(aligned.vectors,
                                         mfc::parse_vector_metric(params.at("meaning_metric").get<std::string>()),
                                         threads);
        dm_form = mfc::form_matrix(aligned.entries, mfc::parse_form_metric(params.at("form_metric").get<std::string>()),
                                   threads);
        for (const auto& e : aligned.entries) {
            labels.push_back(e.definiendum);
            texts.push_back(mfc::text::join(e.gloss));
        }
    }
    const auto pairs = mfc::problematic_pairs(dm_meaning, dm_form, k);
    std::ostringstream os;
    os << "rank,index_a,index_b,meaning_rank,form_rank,rank_gap,item_a,item_b,text_a,text_b\n";
    for (std::size_t r = 0; r < pairs.size(); ++r) {
        const auto& p = pairs[r];
        os << r + 1 << ',' << p.index_a << ',' << p.index_b << ',' << mfc::format_double(p.meaning_rank) << ','
           << mfc::format_double(p.form_rank) << ',' << mfc::format_double(p.rank_gap);
        if (labels.empty()) {
            os << ",,,,\n";
        } else {
            os << ',' << csv_field(labels[p.index_a]) << ',' << csv_field(labels[p.index_b]) << ','
               << csv_field(texts[p.index_a]) << ',' << csv_field(texts[p.index_b]) << '\n';
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------

// Runs a command from its parameter block, writing outputs under `out` (or to
// stdout when `out` is empty and the command allows it).
void execute(const std::string& command, const json& params, const fs::path& out, std::size_t threads) {
    if (command == "sweep") {
        run_sweep(params, out, threads);
    } else if (command == "mfc") {
        const auto result = run_mfc(params, threads);
        if (out.empty()) {
            std::cout << result.dump(2) << '\n';
            return;
        }
        prepare_out(out);
        write_json_file(out / "mfc.json", result);
        write_manifest(out, command, params, {"mfc.json"});
    } else if (command == "eval-embeddings") {
        const auto result = run_eval(params);
        if (out.empty()) {
            if (params.at("json").get<bool>()) {
                std::cout << result.dump(2) << '\n';
            } else {
                std::cout << "rho\t" << mfc::format_double(result["rho"].get<double>()) << "\ncovered\t"
                          << result["covered"] << "\nskipped\t" << result["skipped"] << '\n';
            }
            return;
        }
        prepare_out(out);
        write_json_file(out / "eval.json", result);
        write_manifest(out, command, params, {"eval.json"});
    } else if (command == "problem-pairs") {
        const auto csv = run_problem_pairs(params, threads);
        if (out.empty()) {
            std::cout << csv;
            return;
        }
        prepare_out(out);
        create(out / "problem_pairs.csv") << csv;
        write_manifest(out, command, params, {"problem_pairs.csv"});
    } else {
        throw UsageError("manifest names unknown command '" + command + "'");
    }
}

json mantel_params(std::size_t permutations, const std::string& method, const std::string& alternative, double alpha,
                   std::uint64_t seed) {
    mfc::MantelConfig c;
    c.permutations = permutations;
    c.method = mfc::parse_correlation_method(method);
    c.alternative = mfc::parse_alternative(alternative);
    c.alpha = alpha;
    c.seed = seed;
    c.validate();
    return mfc::to_json(c);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Meaning-form correlation toolkit"};
    app.require_subcommand(1);

    std::size_t threads = mfc::default_thread_count();
    auto add_threads = [&](CLI::App* sub) {
        sub->add_option("--threads", threads, "Worker threads (default: $MFC_THREADS or all cores)")
            ->check(CLI::PositiveNumber);
    };

    std::size_t permutations = 9999;
    std::string method = "pearson", alternative = "greater";
    double alpha = 0.05;
    auto add_mantel = [&](CLI::App* sub) {
        sub->add_option("--permutations", permutations, "Mantel permutations")->check(CLI::Range(99, 100000000));
        sub->add_option("--method", method, "Correlation: pearson|spearman")
            ->check(CLI::IsMember({"pearson", "spearman"}));
        sub->add_option("--alternative", alternative, "greater|two-sided")
            ->check(CLI::IsMember({"greater", "two-sided"}));
        sub->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(1e-12, 1.0 - 1e-12));
    };

    std::string out;
    std::uint64_t seed = 0;

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Artificial-language sweep over (h, s, u, p)");
    std::vector<std::string> grid_tokens;
    std::size_t runs = 50, concepts = 5;
    std::string order = "per-meaning";
    bool no_baselines = false;
    sweep->add_option("--grid", grid_tokens, "Levels, e.g. h=1 s=1,2 u=0-3 p=1 (unset factors keep defaults)")
        ->expected(1, 4);
    sweep->add_option("--runs", runs, "Languages per configuration")->check(CLI::PositiveNumber);
    sweep->add_option("--concepts", concepts, "Concepts per meaning")->check(CLI::Range(1, 16));
    sweep->add_option("--order", order, "Expression order: fixed|per-meaning|per-message")
        ->check(CLI::IsMember({"fixed", "per-meaning", "per-message"}));
    sweep->add_flag("--no-baselines", no_baselines, "Skip the two random baselines");
    sweep->add_option("--seed", seed, "Master seed");
    sweep->add_option("--out", out, "Output directory")->required();
    add_mantel(sweep);
    add_threads(sweep);

    // mfc
    auto* mfc_cmd = app.add_subcommand("mfc", "MFC of a definition or sentence corpus");
    std::string definitions, sentences, embeddings, meaning_metric = "cosine", form_metric = "levenshtein";
    std::vector<std::string> controls;
    std::string stoplist, synonym_map;
    std::size_t sample_size = 0, repeats = 5;
    auto* defs_opt = mfc_cmd->add_option("--definitions", definitions, "definiendum<TAB>gloss[<TAB>parse]")
                         ->check(CLI::ExistingFile);
    auto* sent_opt = mfc_cmd->add_option("--sentences", sentences, "id<TAB>sentence[<TAB>parse]")
                         ->check(CLI::ExistingFile);
    defs_opt->excludes(sent_opt);
    mfc_cmd->add_option("--embeddings", embeddings, "Vectors keyed by definiendum or sentence id")
        ->required()
        ->check(CLI::ExistingFile);
    mfc_cmd->add_option("--meaning-metric", meaning_metric)->check(CLI::IsMember({"cosine", "euclidean"}));
    mfc_cmd->add_option("--form-metric", form_metric)
        ->check(CLI::IsMember({"levenshtein", "levenshtein-norm", "ted", "ted-norm"}));
    mfc_cmd->add_option("--control", controls, "stopwords|synonyms|paraphrases (repeatable)")
        ->check(CLI::IsMember({"stopwords", "synonyms", "paraphrases"}));
    mfc_cmd->add_option("--stoplist", stoplist)->check(CLI::ExistingFile);
    mfc_cmd->add_option("--synonym-map", synonym_map)->check(CLI::ExistingFile);
    mfc_cmd->add_option("--sample-size", sample_size, "Items per repeat (0: one per distinct definiendum)");
    mfc_cmd->add_option("--repeats", repeats)->check(CLI::PositiveNumber);
    mfc_cmd->add_option("--seed", seed);
    mfc_cmd->add_option("--out", out, "Output directory (default: JSON on stdout)");
    add_mantel(mfc_cmd);
    add_threads(mfc_cmd);

    // eval-embeddings
    auto* eval = app.add_subcommand("eval-embeddings", "Spearman rho of vector distances against human ratings");
    std::string ratings, metric = "cosine";
    bool as_json = false;
    eval->add_option("--embeddings", embeddings)->required()->check(CLI::ExistingFile);
    eval->add_option("--ratings", ratings, "item_a item_b score")->required()->check(CLI::ExistingFile);
    eval->add_option("--metric", metric)->check(CLI::IsMember({"cosine", "euclidean"}));
    eval->add_flag("--json", as_json);
    eval->add_option("--out", out, "Output directory");

    // problem-pairs
    auto* pp = app.add_subcommand("problem-pairs", "Item pairs with the largest meaning/form rank gap");
    std::string meaning_matrix, form_matrix_path;
    std::size_t k = 100;
    auto* mm_opt = pp->add_option("--meaning-matrix", meaning_matrix)->check(CLI::ExistingFile);
    auto* fm_opt = pp->add_option("--form-matrix", form_matrix_path)->check(CLI::ExistingFile);
    mm_opt->needs(fm_opt);
    fm_opt->needs(mm_opt);
    auto* pdefs = pp->add_option("--definitions", definitions)->check(CLI::ExistingFile);
    pp->add_option("--sentences", sentences)->check(CLI::ExistingFile)->excludes(pdefs);
    pp->add_option("--embeddings", embeddings)->check(CLI::ExistingFile);
    pp->add_option("--meaning-metric", meaning_metric)->check(CLI::IsMember({"cosine", "euclidean"}));
    pp->add_option("--form-metric", form_metric)
        ->check(CLI::IsMember({"levenshtein", "levenshtein-norm", "ted", "ted-norm"}));
    pp->add_option("--k", k)->check(CLI::PositiveNumber);
    pp->add_option("--out", out, "Output directory (default: CSV on stdout)");
    add_threads(pp);

    // generate
    auto* gen = app.add_subcommand("generate", "Write an artificial language as JSON lines");
    mfc::LanguageSpec spec;
    std::string baseline;
    gen->add_option("--concepts", spec.concepts)->check(CLI::Range(1, 16));
    gen->add_option("--holistic", spec.holistic);
    gen->add_option("--synonyms", spec.synonyms);
    gen->add_option("--ungrounded", spec.ungrounded);
    gen->add_option("--paraphrases", spec.paraphrases);
    gen->add_option("--order", order)->check(CLI::IsMember({"fixed", "per-meaning", "per-message"}));
    gen->add_option("--baseline", baseline)->check(CLI::IsMember({"random-fixed", "random-variable"}));
    gen->add_option("--seed", spec.seed);
    gen->add_option("--out", out, "Output file (default: stdout)");

    // replay
    auto* replay = app.add_subcommand("replay", "Rerun a command from its manifest.json");
    std::string manifest_path;
    replay->add_option("manifest", manifest_path)->required()->check(CLI::ExistingFile);
    replay->add_option("--out", out, "Output directory")->required();
    add_threads(replay);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto mantel = [&] { return mantel_params(permutations, method, alternative, alpha, seed); };
        if (*sweep) {
            json params;
            const auto grid = parse_grid(grid_tokens);
            params["grid"] = {{"h", grid.h}, {"s", grid.s}, {"u", grid.u}, {"p", grid.p}};
            params["concepts"] = concepts;
            params["runs"] = runs;
            params["baselines"] = !no_baselines;
            params["order"] = order;
            params["seed"] = seed;
            params["mantel"] = mantel();
            execute("sweep", params, out, threads);
        } else if (*mfc_cmd) {
            if (definitions.empty() && sentences.empty()) throw UsageError("one of --definitions or --sentences is required");
            json params;
            params["corpus"] = absolute_path(definitions.empty() ? sentences : definitions);
            params["corpus_kind"] = definitions.empty() ? "sentences" : "definitions";
            params["embeddings"] = absolute_path(embeddings);
            params["meaning_metric"] = meaning_metric;
            params["form_metric"] = form_metric;
            params["controls"] = controls;
            params["stoplist"] = absolute_path(stoplist);
            params["synonym_map"] = absolute_path(synonym_map);
            params["sample_size"] = sample_size;
            params["repeats"] = repeats;
            params["seed"] = seed;
            params["mantel"] = mantel();
            execute("mfc", params, out, threads);
        } else if (*eval) {
            json params{{"embeddings", absolute_path(embeddings)},
                        {"ratings", absolute_path(ratings)},
                        {"metric", metric},
                        {"json", as_json}};
            execute("eval-embeddings", params, out, threads);
        } else if (*pp) {
            json params;
            if (!meaning_matrix.empty()) {
                params["meaning_matrix"] = absolute_path(meaning_matrix);
                params["form_matrix"] = absolute_path(form_matrix_path);
            } else {
                if ((definitions.empty() && sentences.empty()) || embeddings.empty()) {
                    throw UsageError("give --meaning-matrix/--form-matrix, or a corpus with --embeddings");
                }
                params["corpus"] = absolute_path(definitions.empty() ? sentences : definitions);
                params["embeddings"] = absolute_path(embeddings);
                params["meaning_metric"] = meaning_metric;
                params["form_metric"] = form_metric;
            }
            params["k"] = k;
            execute("problem-pairs", params, out, threads);
        } else if (*gen) {
            spec.order = mfc::parse_expression_order(order);
            const auto lang = baseline.empty()
                                  ? mfc::generate_language(spec)
                                  : mfc::generate_random_baseline(mfc::parse_baseline_kind(baseline), spec.concepts,
                                                                  spec.seed);
            if (out.empty()) {
                mfc::write_language_jsonl(std::cout, lang);
            } else {
                auto os = create(out);
                mfc::write_language_jsonl(os, lang);
            }
        } else if (*replay) {
            std::ifstream in(manifest_path);
            json manifest;
            try {
                manifest = json::parse(in);
            } catch (const json::exception& e) {
                throw mfc::Error(manifest_path + ": " + e.what());
            }
            if (manifest.value("schema_version", 0) != kSchemaVersion) {
                throw mfc::Error(manifest_path + ": unsupported schema_version");
            }
            execute(manifest.at("command").get<std::string>(), manifest.at("params"), out, threads);
        }
    } catch (const UsageError& e) {
        std::cerr << "mfc: " << e.what() << '\n';
        return 2;
    } catch (const mfc::InvalidArgument& e) {
        std::cerr << "mfc: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mfc: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
