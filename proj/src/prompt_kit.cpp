#include "ragfb/prompt_kit.hpp"

#include "ragfb/errors.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

namespace ragfb {

using nlohmann::json;

ExemplarKind exemplar_kind_from_string(const std::string& name) {
    if (name == "fully_correct") return ExemplarKind::fully_correct;
    if (name == "partially_correct") return ExemplarKind::partially_correct;
    if (name == "incorrect") return ExemplarKind::incorrect;
    throw Error(ErrorCode::malformed_exemplar, "unknown exemplar kind '" + name + "'");
}

const char* to_string(ExemplarKind kind) {
    switch (kind) {
        case ExemplarKind::fully_correct: return "fully_correct";
        case ExemplarKind::partially_correct: return "partially_correct";
        case ExemplarKind::incorrect: return "incorrect";
    }
    return "?";
}

const Exemplar& ExemplarBank::get(ExemplarKind kind) const {
    switch (kind) {
        case ExemplarKind::fully_correct: return fully_correct;
        case ExemplarKind::partially_correct: return partially_correct;
        case ExemplarKind::incorrect: return incorrect;
    }
    return fully_correct;
}

namespace {

Exemplar parse_exemplar(const json& j) {
    Exemplar e;
    try {
        e.kind = exemplar_kind_from_string(j.at("kind").get<std::string>());
        e.question = j.at("question").get<std::string>();
        e.student_answer = j.at("student_answer").get<std::string>();
        e.expected_feedback = j.at("expected_feedback").get<std::string>();
        e.marks_awarded = j.at("marks_awarded").get<int>();
        e.marks_max = j.at("marks_max").get<int>();
    } catch (const json::exception& ex) {
        throw Error(ErrorCode::malformed_exemplar, ex.what());
    }
    if (e.marks_max < 1)
        throw Error(ErrorCode::malformed_exemplar, "marks_max must be >= 1");
    switch (e.kind) {
        case ExemplarKind::fully_correct:
            if (e.marks_awarded != e.marks_max)
                throw Error(ErrorCode::malformed_exemplar,
                            "fully_correct exemplar must award full marks");
            break;
        case ExemplarKind::incorrect:
            if (e.marks_awarded != 0)
                throw Error(ErrorCode::malformed_exemplar,
                            "incorrect exemplar must award zero marks");
            break;
        case ExemplarKind::partially_correct:
            if (e.marks_awarded <= 0 || e.marks_awarded >= e.marks_max)
                throw Error(ErrorCode::malformed_exemplar,
                            "partially_correct exemplar must award between 0 and marks_max");
            break;
    }
    return e;
}

}  // namespace

ExemplarBank load_exemplars(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_exemplar, e.what());
    }
    const json& arr = doc.is_array() ? doc : doc.at("exemplars");
    if (!arr.is_array()) throw Error(ErrorCode::malformed_exemplar, "expected an array");

    std::optional<Exemplar> fully, partial, incorrect;
    for (const auto& item : arr) {
        Exemplar e = parse_exemplar(item);
        auto& slot = (e.kind == ExemplarKind::fully_correct)      ? fully
                     : (e.kind == ExemplarKind::partially_correct) ? partial
                                                                   : incorrect;
        if (slot)
            throw Error(ErrorCode::malformed_exemplar,
                        std::string("duplicate exemplar kind ") + to_string(e.kind));
        slot = std::move(e);
    }
    if (!fully) throw Error(ErrorCode::missing_kind, "no fully_correct exemplar");
    if (!partial) throw Error(ErrorCode::missing_kind, "no partially_correct exemplar");
    if (!incorrect) throw Error(ErrorCode::missing_kind, "no incorrect exemplar");
    return ExemplarBank{std::move(*fully), std::move(*partial), std::move(*incorrect)};
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.system = read_file(dir / "system.txt");
    t.free_text = read_file(dir / "free_text.txt");
    t.mcq = read_file(dir / "mcq.txt");
    return t;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        char c = tmpl[i];
        if (c != '{') {
            out.push_back(c);
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < tmpl.size() && (std::islower(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_'))
            ++j;
        if (j > i + 1 && j < tmpl.size() && tmpl[j] == '}') {
            std::string name = tmpl.substr(i + 1, j - i - 1);
            auto it = values.find(name);
            if (it == values.end())
                throw Error(ErrorCode::malformed_template,
                            "template references unknown placeholder {" + name + "}");
            out += it->second;
            i = j + 1;
        } else {
            out.push_back(c);
            ++i;
        }
    }
    return out;
}

std::string PromptRenderer::exemplar_block() const {
    static const struct {
        ExemplarKind kind;
        const char* label;
    } order[] = {
        {ExemplarKind::fully_correct, "fully correct"},
        {ExemplarKind::partially_correct, "partially correct"},
        {ExemplarKind::incorrect, "incorrect"},
    };
    std::string out;
    for (const auto& [kind, label] : order) {
        const Exemplar& e = bank_.get(kind);
        out += "### Example of feedback for a ";
        out += label;
        out += " answer\n";
        out += "Question: " + e.question + "\n";
        out += "Student's answer: " + e.student_answer + "\n";
        out += "Feedback (" + std::to_string(e.marks_awarded) + "/" +
               std::to_string(e.marks_max) + "):\n";
        out += e.expected_feedback;
        out += "\n\n";
    }
    if (!out.empty()) out.resize(out.size() - 1);  // drop the final extra newline
    return out;
}

std::string PromptRenderer::context_block(const ContextBundle& context) {
    if (context.chunks.empty()) return "(no course extracts retrieved)";
    std::string out;
    for (std::size_t i = 0; i < context.chunks.size(); ++i) {
        const CourseChunk& chunk = context.chunks[i];
        if (i) out += "\n\n";
        out += "[Section " + chunk.section_ref + "]\n";
        out += chunk.text;
    }
    return out;
}

RenderedPrompt PromptRenderer::render_free_text(const std::string& question,
                                                const std::string& student_answer, int marks_max,
                                                const ContextBundle& context) const {
    std::map<std::string, std::string> values{
        {"question", question},
        {"student_answer", student_answer.empty() ? "(no answer given)" : student_answer},
        {"marks_max", std::to_string(marks_max)},
        {"context", context_block(context)},
        {"exemplars", exemplar_block()},
    };
    RenderedPrompt p;
    p.system_text = templates_.system;
    p.user_text = render_template(templates_.free_text, values);
    p.token_estimate = estimate_tokens(p.system_text) + estimate_tokens(p.user_text);
    return p;
}

RenderedPrompt PromptRenderer::render_mcq(const std::string& question,
                                          const std::vector<std::string>& options,
                                          const std::string& selected_option,
                                          const ContextBundle& context) const {
    if (options.empty())
        throw Error(ErrorCode::selection_not_in_options, "question has no options");
    std::string options_block;
    bool found = false;
    for (std::size_t i = 0; i < options.size(); ++i) {
        char label = static_cast<char>('A' + i);
        options_block += label;
        options_block += ". ";
        options_block += options[i];
        if (!found && options[i] == selected_option) {
            options_block += "   <-- student's selection";
            found = true;
        }
        if (i + 1 < options.size()) options_block += "\n";
    }
    if (!found)
        throw Error(ErrorCode::selection_not_in_options,
                    "selected option is not one of the listed options");

    std::map<std::string, std::string> values{
        {"question", question},
        {"options", options_block},
        {"selected_option", selected_option},
        {"context", context_block(context)},
        {"exemplars", exemplar_block()},
    };
    RenderedPrompt p;
    p.system_text = templates_.system;
    p.user_text = render_template(templates_.mcq, values);
    p.token_estimate = estimate_tokens(p.system_text) + estimate_tokens(p.user_text);
    return p;
}

}  // namespace ragfb
