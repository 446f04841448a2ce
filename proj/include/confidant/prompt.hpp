#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "confidant/knowledge_base.hpp"
#include "confidant/llm.hpp"
#include "confidant/memory.hpp"

namespace confidant::prompt {

inline constexpr std::string_view kSlot = "{x_shot_prompts}";

inline constexpr std::array<std::string_view, 6> kTemplateNames = {
    "default", "7feelings", "7feelings2tones", "gkp", "gkpPsychoTherapy", "gkpPsychoTherapyNonRep"};

struct PromptTemplate {
    std::string name;
    std::string instruction;
};

// Throws TemplateSlotMissing unless the slot occurs exactly once.
PromptTemplate make_template(std::string name, std::string instruction);

class TemplateSet {
public:
    TemplateSet() = default;

    void add(PromptTemplate t);
    // Throws TemplateNotFound.
    const PromptTemplate& get(const std::string& name) const;
    bool contains(const std::string& name) const { return templates_.count(name) != 0; }
    std::vector<std::string> names() const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

std::string default_templates_dir();

// Reads {dir}/{name}.txt; one trailing newline is dropped.
PromptTemplate load_template(const std::string& dir, const std::string& name);
// All six shipped templates; a missing file is TemplateNotFound.
TemplateSet load_templates(const std::string& dir);

// Summarization prompt resource, falling back to the built-in text.
std::string load_summary_prompt(const std::string& dir);

std::string sha256_hex(std::string_view data);

// "Question: ...\nAnswer: ..." per ranked answer, separated by blank lines.
std::string format_x_shot(const kb::RetrievalResult& retrieval);

struct AssembledPrompt {
    std::string system;
    std::vector<llm::ChatMessage> history;
    std::string user;
    bool therapist_context = false;
    bool entity_context = false;

    // system, then history, then the user query.
    std::vector<llm::ChatMessage> messages() const;
};

/// Fills the slot with the retrieved Q&A (or nothing) and appends one
/// "Known context: {name}: {summary}" line per entity after a blank line.
/// `display_name` maps an entity key to the name written into the prompt; the
/// key itself is used when it is empty.
AssembledPrompt assemble_prompt(const PromptTemplate& tmpl, std::string_view anon_query,
                                const std::optional<kb::RetrievalResult>& retrieval,
                                const std::vector<memory::Turn>& history,
                                const std::vector<memory::EntityRecord>& entities,
                                const memory::NameResolver& display_name = {});

}  // namespace confidant::prompt
