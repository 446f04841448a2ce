#include "confidant/ablation.hpp"

#include <future>
#include <iomanip>
#include <set>
#include <sstream>

#include "confidant/error.hpp"
#include "confidant/metrics.hpp"
#include "confidant/text.hpp"

namespace confidant::ablation {

namespace {

const std::set<std::string> kScenarioKeys = {"topic", "past_conversation", "user_query", "key_information",
                                             "sample_answer"};

[[noreturn]] void fail(std::size_t index, const std::string& what) {
    throw Error(ErrorCode::ScenarioParseError, "scenario " + std::to_string(index) + ": " + what);
}

std::string required_text(const nlohmann::json& obj, const char* key, std::size_t index) {
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(index, std::string(key) + " must be a string");
    auto s = v.get<std::string>();
    if (text::trim(s).empty()) fail(index, std::string(key) + " is empty");
    return s;
}

ArmResult run_arm(const ScenarioCase& sc, const pipeline::Engine& engine, pipeline::SessionConfig config,
                  const embedding::EmbeddingProvider& provider, const std::string& id) {
    auto state = engine.new_conversation(id, config);
    std::vector<std::pair<memory::Role, std::string>> past;
    past.reserve(sc.past_conversation.size());
    for (const auto& t : sc.past_conversation) past.emplace_back(t.role, t.content);
    engine.feed_history(state, past);
    // A handful of past turns never reaches the update cadence, so the store
    // is summarized once before the query.
    if (config.long_term_memory) engine.flush_entities(state);

    const auto response = engine.respond(state, sc.user_query);
    ArmResult r;
    r.reply = response.reply;
    r.relevance_sample = metrics::relevance(r.reply, sc.sample_answer, provider);
    r.relevance_key = metrics::relevance(r.reply, sc.key_information, provider);
    r.entities_used = response.trace.entities_used;
    return r;
}

ScenarioResult run_scenario(const ScenarioCase& sc, std::size_t index, const pipeline::Engine& engine,
                            const pipeline::Engine& baseline_engine, const embedding::EmbeddingProvider& provider,
                            const pipeline::SessionConfig& base) {
    pipeline::SessionConfig mem_cfg = base;
    mem_cfg.short_term_memory = false;
    mem_cfg.long_term_memory = true;
    pipeline::SessionConfig base_cfg = base;
    base_cfg.short_term_memory = false;
    base_cfg.long_term_memory = false;

    ScenarioResult out;
    out.topic = sc.topic;
    out.memory = run_arm(sc, engine, mem_cfg, provider, "ablation-memory-" + std::to_string(index));
    out.baseline = run_arm(sc, baseline_engine, base_cfg, provider, "ablation-baseline-" + std::to_string(index));
    return out;
}

nlohmann::json arm_json(const ArmResult& a) {
    return {{"reply", a.reply},
            {"relevance_sample_answer", a.relevance_sample},
            {"relevance_key_information", a.relevance_key},
            {"entities_used", a.entities_used}};
}

}  // namespace

std::vector<ScenarioCase> parse_scenarios(std::string_view json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ScenarioParseError, std::string("scenario file is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw Error(ErrorCode::ScenarioParseError, "scenario file must be a JSON array");
    if (doc.empty()) throw Error(ErrorCode::ScenarioParseError, "scenario list is empty");

    std::vector<ScenarioCase> out;
    out.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& obj = doc[i];
        if (!obj.is_object()) fail(i, "must be an object");
        for (const auto& [key, value] : obj.items()) {
            if (kScenarioKeys.count(key) == 0) fail(i, "unexpected key '" + key + "'");
        }
        for (const auto& key : kScenarioKeys) {
            if (!obj.contains(key)) fail(i, "missing key '" + key + "'");
        }
        ScenarioCase sc;
        sc.topic = required_text(obj, "topic", i);
        sc.user_query = required_text(obj, "user_query", i);
        sc.key_information = required_text(obj, "key_information", i);
        sc.sample_answer = required_text(obj, "sample_answer", i);
        const auto& past = obj.at("past_conversation");
        if (!past.is_array() || past.empty()) fail(i, "past_conversation must be a non-empty array");
        for (const auto& t : past) {
            if (!t.is_object() || !t.contains("role") || !t.contains("content") || t.size() != 2) {
                fail(i, "past_conversation entries need exactly role and content");
            }
            ScenarioTurn turn;
            try {
                turn.role = memory::parse_role(t.at("role").get<std::string>());
            } catch (const std::exception& e) {
                fail(i, e.what());
            }
            turn.content = required_text(t, "content", i);
            if (!sc.past_conversation.empty() && sc.past_conversation.back().role == turn.role) {
                fail(i, "past_conversation roles must alternate");
            }
            sc.past_conversation.push_back(std::move(turn));
        }
        out.push_back(std::move(sc));
    }
    return out;
}

std::vector<ScenarioCase> load_scenarios(const std::string& path) {
    return parse_scenarios(text::read_file(path));
}

AblationReport run_memory_ablation(const std::vector<ScenarioCase>& scenarios, const pipeline::Engine& engine,
                                   const pipeline::Engine& baseline_engine,
                                   const embedding::EmbeddingProvider& provider, const AblationOptions& options) {
    if (scenarios.empty()) throw Error(ErrorCode::ScenarioParseError, "scenario list is empty");
    options.config.validate();

    AblationReport report;
    report.scenarios.resize(scenarios.size());
    if (options.parallel) {
        std::vector<std::future<ScenarioResult>> jobs;
        jobs.reserve(scenarios.size());
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            jobs.push_back(std::async(std::launch::async, [&, i] {
                return run_scenario(scenarios[i], i, engine, baseline_engine, provider, options.config);
            }));
        }
        for (std::size_t i = 0; i < jobs.size(); ++i) report.scenarios[i] = jobs[i].get();
    } else {
        for (std::size_t i = 0; i < scenarios.size(); ++i) {
            report.scenarios[i] = run_scenario(scenarios[i], i, engine, baseline_engine, provider, options.config);
        }
    }

    const double n = static_cast<double>(report.scenarios.size());
    for (const auto& s : report.scenarios) {
        report.memory_mean_sample += s.memory.relevance_sample / n;
        report.memory_mean_key += s.memory.relevance_key / n;
        report.baseline_mean_sample += s.baseline.relevance_sample / n;
        report.baseline_mean_key += s.baseline.relevance_key / n;
    }
    return report;
}

void to_json(nlohmann::json& j, const AblationReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : r.scenarios) {
        rows.push_back({{"topic", s.topic}, {"memory", arm_json(s.memory)}, {"baseline", arm_json(s.baseline)}});
    }
    j = {{"scenarios", rows},
         {"mean",
          {{"memory", {{"relevance_sample_answer", r.memory_mean_sample},
                       {"relevance_key_information", r.memory_mean_key}}},
           {"baseline", {{"relevance_sample_answer", r.baseline_mean_sample},
                         {"relevance_key_information", r.baseline_mean_key}}}}}};
}

std::string format_table(const AblationReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << std::left << std::setw(44) << "topic" << std::right << std::setw(12) << "mem/sample" << std::setw(12)
       << "mem/key" << std::setw(12) << "base/sample" << std::setw(12) << "base/key" << "\n";
    for (const auto& s : r.scenarios) {
        std::string topic = s.topic.size() > 42 ? s.topic.substr(0, 41) + "~" : s.topic;
        os << std::left << std::setw(44) << topic << std::right << std::setw(12) << s.memory.relevance_sample
           << std::setw(12) << s.memory.relevance_key << std::setw(12) << s.baseline.relevance_sample << std::setw(12)
           << s.baseline.relevance_key << "\n";
    }
    os << std::left << std::setw(44) << "mean" << std::right << std::setw(12) << r.memory_mean_sample << std::setw(12)
       << r.memory_mean_key << std::setw(12) << r.baseline_mean_sample << std::setw(12) << r.baseline_mean_key << "\n";
    return os.str();
}

}  // namespace confidant::ablation
