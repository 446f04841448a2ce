#include "confidant/prompt.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>

#include "confidant/error.hpp"
#include "confidant/text.hpp"

namespace confidant::prompt {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

std::string drop_trailing_newline(std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

PromptTemplate make_template(std::string name, std::string instruction) {
    const auto n = count_occurrences(instruction, kSlot);
    if (n != 1) {
        throw Error(ErrorCode::TemplateSlotMissing, "template '" + name + "' must contain " + std::string(kSlot) +
                                                        " exactly once (found " + std::to_string(n) + ")");
    }
    return {std::move(name), std::move(instruction)};
}

void TemplateSet::add(PromptTemplate t) {
    std::string name = t.name;
    templates_.insert_or_assign(std::move(name), std::move(t));
}

const PromptTemplate& TemplateSet::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw Error(ErrorCode::TemplateNotFound, "unknown template '" + name + "'");
    return it->second;
}

std::vector<std::string> TemplateSet::names() const {
    std::vector<std::string> out;
    for (const auto& [name, t] : templates_) out.push_back(name);
    return out;
}

std::string default_templates_dir() {
    return std::string(CONFIDANT_DATA_DIR) + "/templates";
}

PromptTemplate load_template(const std::string& dir, const std::string& name) {
    const std::string path = dir + "/" + name + ".txt";
    if (!std::filesystem::is_regular_file(path)) {
        throw Error(ErrorCode::TemplateNotFound, "template file not found: " + path);
    }
    return make_template(name, drop_trailing_newline(text::read_file(path)));
}

TemplateSet load_templates(const std::string& dir) {
    TemplateSet set;
    for (auto name : kTemplateNames) set.add(load_template(dir, std::string(name)));
    return set;
}

std::string load_summary_prompt(const std::string& dir) {
    const std::string path = dir + "/summarize_entity.txt";
    if (!std::filesystem::is_regular_file(path)) return std::string(llm::kSummaryPromptTemplate);
    return drop_trailing_newline(text::read_file(path));
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error(ErrorCode::InvalidArgument, "sha256 failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

std::string format_x_shot(const kb::RetrievalResult& retrieval) {
    std::vector<std::string> blocks;
    for (const auto& a : retrieval.answers) {
        blocks.push_back("Question: " + retrieval.question_text + "\nAnswer: " + a.answer_text);
    }
    return text::join(blocks, "\n\n");
}

std::vector<llm::ChatMessage> AssembledPrompt::messages() const {
    std::vector<llm::ChatMessage> out;
    out.reserve(history.size() + 2);
    out.push_back({llm::ChatRole::System, system});
    out.insert(out.end(), history.begin(), history.end());
    out.push_back({llm::ChatRole::User, user});
    return out;
}

AssembledPrompt assemble_prompt(const PromptTemplate& tmpl, std::string_view anon_query,
                                const std::optional<kb::RetrievalResult>& retrieval,
                                const std::vector<memory::Turn>& history,
                                const std::vector<memory::EntityRecord>& entities,
                                const memory::NameResolver& display_name) {
    const auto slot = tmpl.instruction.find(kSlot);
    if (slot == std::string::npos || count_occurrences(tmpl.instruction, kSlot) != 1) {
        throw Error(ErrorCode::TemplateSlotMissing, "template '" + tmpl.name + "' has no usable slot");
    }
    AssembledPrompt p;
    p.therapist_context = retrieval.has_value() && !retrieval->answers.empty();
    p.system = tmpl.instruction.substr(0, slot) + (p.therapist_context ? format_x_shot(*retrieval) : "") +
               tmpl.instruction.substr(slot + kSlot.size());

    if (!entities.empty()) {
        p.entity_context = true;
        p.system += "\n";
        for (const auto& e : entities) {
            const std::string name = display_name ? display_name(e.name) : e.name;
            p.system += "\nKnown context: " + name + ": " + e.summary;
        }
    }

    p.history.reserve(history.size());
    for (const auto& t : history) {
        p.history.push_back(
            {t.role == memory::Role::User ? llm::ChatRole::User : llm::ChatRole::Assistant, t.content});
    }
    p.user = std::string(anon_query);
    return p;
}

}  // namespace confidant::prompt
