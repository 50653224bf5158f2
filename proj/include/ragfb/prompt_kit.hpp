#pragma once

#include "ragfb/retrieval.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace ragfb {

enum class ExemplarKind { fully_correct, partially_correct, incorrect };

ExemplarKind exemplar_kind_from_string(const std::string& name);
const char* to_string(ExemplarKind kind);

// One worked question/answer/feedback triple shown to the model so it copies
// the expected tone, structure and mark line.
struct Exemplar {
    ExemplarKind kind = ExemplarKind::fully_correct;
    std::string question;
    std::string student_answer;
    std::string expected_feedback;
    int marks_awarded = 0;
    int marks_max = 0;
};

/// Exactly one exemplar per kind.
struct ExemplarBank {
    Exemplar fully_correct;
    Exemplar partially_correct;
    Exemplar incorrect;

    const Exemplar& get(ExemplarKind kind) const;
};

/// Loads and validates a bank from JSON (either a top-level array of three
/// records or {"exemplars": [...]}). Throws MissingKind / MalformedExemplar.
ExemplarBank load_exemplars(const std::filesystem::path& path);

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;
    int token_estimate = 0;
};

/// The three editable template files. Placeholders are written {name}.
struct PromptTemplates {
    std::string system;     // shared system text
    std::string free_text;  // uses {question} {student_answer} {marks_max} {context} {exemplars}
    std::string mcq;        // uses {question} {options} {selected_option} {context} {exemplars}

    static PromptTemplates load_dir(const std::filesystem::path& dir);
};

/// Substitutes {name} placeholders in a single pass. A placeholder with no
/// value is a MalformedTemplate error; braces that do not form a placeholder
/// pass through verbatim.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values);

class PromptRenderer {
public:
    PromptRenderer(PromptTemplates templates, ExemplarBank bank)
        : templates_(std::move(templates)), bank_(std::move(bank)) {}

    RenderedPrompt render_free_text(const std::string& question, const std::string& student_answer,
                                    int marks_max, const ContextBundle& context) const;

    /// Options are labelled A, B, C... and the student's pick is flagged.
    /// Throws SelectionNotInOptions when selected_option is not in options.
    RenderedPrompt render_mcq(const std::string& question,
                              const std::vector<std::string>& options,
                              const std::string& selected_option,
                              const ContextBundle& context) const;

    const ExemplarBank& bank() const { return bank_; }

private:
    std::string exemplar_block() const;
    static std::string context_block(const ContextBundle& context);

    PromptTemplates templates_;
    ExemplarBank bank_;
};

}  // namespace ragfb
