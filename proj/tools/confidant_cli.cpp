// confidant: operator CLI for the conversation service and evaluation harness.

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>

#include "confidant/ablation.hpp"
#include "confidant/csv.hpp"
#include "confidant/error.hpp"
#include "confidant/knowledge_base.hpp"
#include "confidant/metrics.hpp"
#include "confidant/persistence.hpp"
#include "confidant/pipeline.hpp"
#include "confidant/service.hpp"
#include "confidant/stats.hpp"
#include "confidant/text.hpp"

using namespace confidant;

namespace {

struct EngineFlags {
    std::string data_root = pipeline::default_data_dir();
    std::string templates_dir;
    std::string corpus;
    std::string llm = "scripted";
    std::string embedder = "hashing";
    std::string config_file;
    std::optional<double> alpha;
    std::optional<int> short_term_n;
    std::optional<int> update_every;
    std::optional<int> k;
    std::optional<std::string> template_name;
    std::optional<std::uint64_t> seed;

    void add_to(CLI::App* app, bool with_corpus) {
        app->add_option("--data-root", data_root, "Directory holding data/ and templates/");
        app->add_option("--templates", templates_dir, "Template directory (default: <data-root>/templates)");
        if (with_corpus) app->add_option("--corpus", corpus, "Corpus CSV or knowledge-base snapshot (.json)");
        app->add_option("--llm", llm, "scripted | remote (LLM_BASE_URL, LLM_API_KEY)")
            ->check(CLI::IsMember({"scripted", "remote"}));
        app->add_option("--embedder", embedder, "hashing | remote (EMBEDDINGS_BASE_URL)")
            ->check(CLI::IsMember({"hashing", "remote"}));
        app->add_option("--config", config_file, "JSON file with session defaults");
        app->add_option("--alpha", alpha, "Retrieval gate threshold");
        app->add_option("--short-term-n", short_term_n, "Interactions kept in the short-term window");
        app->add_option("--update-every", update_every, "Entity summary cadence, in interactions");
        app->add_option("--k", k, "Therapist answers per retrieved question");
        app->add_option("--template", template_name, "Prompt template name");
        app->add_option("--seed", seed, "Surrogate RNG seed");
    }

    pipeline::SessionConfig session_config() const {
        pipeline::SessionConfig c;
        if (!config_file.empty()) {
            try {
                c = pipeline::merge_config(c, nlohmann::json::parse(text::read_file(config_file)));
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(ErrorCode::ValidationError, "config file: " + std::string(e.what()));
            }
        }
        if (alpha) c.alpha = *alpha;
        if (short_term_n) c.short_term_n = *short_term_n;
        if (update_every) c.update_every = *update_every;
        if (k) c.k = *k;
        if (template_name) c.template_name = *template_name;
        if (seed) c.seed = *seed;
        c.validate();
        return c;
    }

    pipeline::EngineResources resources() const {
        auto r = pipeline::load_default_resources(data_root);
        if (!templates_dir.empty()) {
            r.templates = std::make_shared<prompt::TemplateSet>(prompt::load_templates(templates_dir));
            r.summary_prompt = prompt::load_summary_prompt(templates_dir);
        }
        if (embedder == "remote") {
            r.embedder = std::make_shared<embedding::RemoteEmbedder>(embedding::RemoteEmbedderOptions::from_env());
        }
        if (llm == "remote") {
            r.llm = std::make_shared<llm::RemoteLlm>(llm::RemoteLlmOptions::from_env());
        } else {
            r.llm = llm::mock::make_echo_llm();
        }
        if (!corpus.empty()) {
            if (corpus.size() > 5 && corpus.substr(corpus.size() - 5) == ".json") {
                r.knowledge_base = std::make_shared<kb::KnowledgeBase>(kb::KnowledgeBase::load(corpus));
            } else {
                r.knowledge_base = std::make_shared<kb::KnowledgeBase>(kb::ingest(corpus, *r.embedder));
            }
        }
        return r;
    }
};

service::Service* g_service = nullptr;

void handle_signal(int) {
    if (g_service != nullptr) g_service->stop();
}

int run_serve(const EngineFlags& flags, const std::string& host, int port, const std::string& store_dir,
              const std::string& ui_dir) {
    auto engine = std::make_shared<pipeline::Engine>(flags.resources());
    auto store = std::make_shared<persistence::SessionStore>(store_dir);
    auto sessions = std::make_shared<service::SessionManager>(engine, store, flags.session_config());
    service::Service svc(sessions, {ui_dir});
    const int bound = svc.bind(host, port);
    g_service = &svc;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    std::cerr << "listening on " << host << ":" << bound << "\n";
    svc.listen();
    g_service = nullptr;
    return 0;
}

int run_chat(const EngineFlags& flags, bool show_trace) {
    const pipeline::Engine engine(flags.resources());
    auto state = engine.new_conversation("chat", flags.session_config());
    std::cerr << "type a message; /entities lists the entity store, /quit exits\n";
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        if (line == "/quit") break;
        if (line == "/entities") {
            for (const auto& [key, rec] : state.entities.records) {
                if (rec.summary.empty()) continue;
                std::cout << privacy::restore(pipeline::Engine::entity_display(state, key), state.map) << ": "
                          << privacy::restore(rec.summary, state.map) << "\n";
            }
            continue;
        }
        if (text::trim(line).empty()) continue;
        try {
            const auto r = engine.respond(state, line);
            std::cout << r.reply << "\n";
            if (show_trace) std::cout << nlohmann::json(r.trace).dump(2) << "\n";
        } catch (const Error& e) {
            std::cerr << "error [" << to_string(e.code()) << (e.stage().empty() ? "" : " @ " + e.stage())
                      << "]: " << e.what() << "\n";
        }
    }
    return 0;
}

int run_ingest(const std::string& corpus, const std::string& out, const std::string& embedder_kind) {
    std::unique_ptr<embedding::EmbeddingProvider> provider;
    if (embedder_kind == "remote") {
        provider = std::make_unique<embedding::RemoteEmbedder>(embedding::RemoteEmbedderOptions::from_env());
    } else {
        provider = std::make_unique<embedding::HashingEmbedder>();
    }
    const auto kb = kb::ingest(corpus, *provider);
    if (!out.empty()) kb.save(out);
    std::cout << nlohmann::json{{"questions", kb.questions().size()}, {"pairs", kb.pairs().size()}}.dump() << "\n";
    return 0;
}

int run_anonymize(const std::string& in, const std::string& data_root, std::uint64_t seed) {
    const std::string input = in.empty() || in == "-"
                                  ? std::string(std::istreambuf_iterator<char>(std::cin), {})
                                  : text::read_file(in);
    const privacy::RuleBasedDetector detector(privacy::load_lexicon(data_root + "/data/gazetteer.tsv"));
    const privacy::SurrogatePools pools(privacy::load_lexicon(data_root + "/data/surrogates.tsv"));
    privacy::AnonymizationMap map("cli", seed);
    const auto spans = privacy::detect_pii(input, detector);
    const auto anon = privacy::anonymize(input, spans, map, pools);
    nlohmann::json detected = nlohmann::json::array();
    for (const auto& s : spans) detected.push_back(s);
    std::cout << nlohmann::json{{"text", anon.text}, {"detected", detected}, {"map", map}}.dump(2) << "\n";
    return 0;
}

int run_eval_metrics(const std::string& in, const std::string& lexicon_path) {
    const auto rows = csv::parse(text::read_file(in));
    if (rows.empty()) throw Error(ErrorCode::ParseError, "empty responses file");
    const auto& header = rows.front().fields;
    auto col = [&](const char* name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorCode::ParseError, std::string("missing column '") + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t qc = col("question"), rc = col("response");
    const embedding::HashingEmbedder provider;
    const auto lexicon = metrics::SentimentLexicon::load(lexicon_path);
    nlohmann::json out = nlohmann::json::array();
    metrics::MetricReport mean;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& f = rows[i].fields;
        if (f.size() != header.size()) throw Error(ErrorCode::ParseError, "row " + std::to_string(i) + ": wrong field count");
        const auto r = metrics::evaluate_response(f[qc], f[rc], provider, lexicon);
        out.push_back(r);
        const double n = static_cast<double>(rows.size() - 1);
        mean.relevance += r.relevance / n;
        mean.readability_raw += r.readability_raw / n;
        mean.readability_norm += r.readability_norm / n;
        mean.polarity += r.polarity / n;
        mean.subjectivity += r.subjectivity / n;
    }
    std::cout << nlohmann::json{{"rows", out}, {"mean", mean}}.dump(2) << "\n";
    return 0;
}

int run_eval_ablation(const EngineFlags& flags, const std::string& scenarios_path, const std::string& json_out) {
    const auto scenarios = ablation::load_scenarios(scenarios_path);
    const pipeline::Engine engine(flags.resources());
    const pipeline::Engine baseline(flags.resources());
    ablation::AblationOptions opts;
    opts.config = flags.session_config();
    const embedding::HashingEmbedder provider;
    const auto report = ablation::run_memory_ablation(scenarios, engine, baseline, provider, opts);
    std::cout << ablation::format_table(report);
    if (!json_out.empty()) text::write_file_atomic(json_out, nlohmann::json(report).dump(2) + "\n");
    return 0;
}

std::vector<double> numeric_column(const std::vector<csv::Row>& rows, const std::string& name) {
    const auto& header = rows.front().fields;
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::ParseError, "missing column '" + name + "'");
    const auto c = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (c >= rows[i].fields.size()) continue;
        const std::string v = text::trim(rows[i].fields[c]);
        if (v.empty()) continue;  // ragged columns
        try {
            out.push_back(std::stod(v));
        } catch (const std::exception&) {
            throw Error(ErrorCode::ParseError, "row " + std::to_string(i) + ": '" + v + "' is not a number");
        }
    }
    return out;
}

int run_eval_stats(const std::string& in, const std::string& a, const std::string& b) {
    const auto rows = csv::parse(text::read_file(in));
    if (rows.empty()) throw Error(ErrorCode::ParseError, "empty input");
    const auto xs = numeric_column(rows, a);
    const auto ys = numeric_column(rows, b);
    nlohmann::json out;
    auto attempt = [&](const char* name, auto&& fn) {
        try {
            out[name] = fn();
        } catch (const Error& e) {
            out[name] = {{"error", to_string(e.code())}, {"message", e.what()}};
        }
    };
    attempt("shapiro_wilk_a", [&] { return stats::shapiro_wilk(xs); });
    attempt("shapiro_wilk_b", [&] { return stats::shapiro_wilk(ys); });
    attempt("levene", [&] { return stats::levene(xs, ys); });
    attempt("levene_median", [&] { return stats::levene(xs, ys, stats::LeveneCenter::Median); });
    attempt("welch_t", [&] { return stats::welch_t(xs, ys); });
    attempt("mann_whitney_u", [&] { return stats::mann_whitney_u(xs, ys); });
    out["n_a"] = xs.size();
    out["n_b"] = ys.size();
    std::cout << out.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"confidant: privacy-preserving retrieval-augmented counseling chat"};
    app.require_subcommand(1);

    EngineFlags serve_flags;
    std::string host = "127.0.0.1", store_dir = "confidant-data", ui_dir;
    int port = 8080;
    auto* serve = app.add_subcommand("serve", "Run the HTTP JSON API");
    serve_flags.add_to(serve, true);
    serve->add_option("--host", host);
    serve->add_option("--port", port);
    serve->add_option("--store", store_dir, "Session storage directory");
    serve->add_option("--ui", ui_dir, "Static client directory served under /ui");

    EngineFlags chat_flags;
    bool show_trace = false;
    auto* chat = app.add_subcommand("chat", "Terminal conversation over the same pipeline");
    chat_flags.add_to(chat, true);
    chat->add_flag("--trace", show_trace, "Print the response trace after each reply");

    std::string ingest_corpus, ingest_out, ingest_embedder = "hashing";
    auto* ingest = app.add_subcommand("ingest", "Build a knowledge-base snapshot from the corpus CSV");
    ingest->add_option("--corpus", ingest_corpus)->required();
    ingest->add_option("--out", ingest_out, "Snapshot path (.json)");
    ingest->add_option("--embedder", ingest_embedder)->check(CLI::IsMember({"hashing", "remote"}));

    std::string anon_in, anon_root = pipeline::default_data_dir();
    std::uint64_t anon_seed = 0;
    auto* anonymize = app.add_subcommand("anonymize", "Detect and replace PII in a text file (or stdin)");
    anonymize->add_option("--in", anon_in, "Input file, '-' for stdin");
    anonymize->add_option("--data-root", anon_root);
    anonymize->add_option("--seed", anon_seed);

    auto* eval = app.add_subcommand("eval", "Evaluation harness");
    eval->require_subcommand(1);
    std::string metrics_in, lexicon = pipeline::default_data_dir() + "/data/sentiment_lexicon.tsv";
    auto* eval_metrics = eval->add_subcommand("metrics", "Relevance, readability and sentiment per response");
    eval_metrics->add_option("--in", metrics_in, "CSV with question,response columns")->required();
    eval_metrics->add_option("--lexicon", lexicon);

    EngineFlags ablation_flags;
    std::string scenarios = pipeline::default_data_dir() + "/data/scenarios.json", ablation_json;
    auto* eval_ablation = eval->add_subcommand("ablation", "Long-term memory ablation over scripted scenarios");
    ablation_flags.add_to(eval_ablation, false);
    eval_ablation->add_option("--scenarios", scenarios);
    eval_ablation->add_option("--json", ablation_json, "Also write the report as JSON");

    std::string stats_in, col_a, col_b;
    auto* eval_stats = eval->add_subcommand("stats", "Normality, variance and location tests on two columns");
    eval_stats->add_option("--in", stats_in, "CSV file")->required();
    eval_stats->add_option("--a", col_a)->required();
    eval_stats->add_option("--b", col_b)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) return run_serve(serve_flags, host, port, store_dir, ui_dir);
        if (*chat) return run_chat(chat_flags, show_trace);
        if (*ingest) return run_ingest(ingest_corpus, ingest_out, ingest_embedder);
        if (*anonymize) return run_anonymize(anon_in, anon_root, anon_seed);
        if (*eval_metrics) return run_eval_metrics(metrics_in, lexicon);
        if (*eval_ablation) return run_eval_ablation(ablation_flags, scenarios, ablation_json);
        if (*eval_stats) return run_eval_stats(stats_in, col_a, col_b);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << (e.stage().empty() ? "" : " @ " + e.stage()) << "]: "
                  << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
