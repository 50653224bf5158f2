#include "ragfb/feedback_core.hpp"

#include "ragfb/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>

namespace ragfb {

using nlohmann::json;

QuestionKind question_kind_from_string(const std::string& name) {
    if (name == "free_text") return QuestionKind::free_text;
    if (name == "mcq") return QuestionKind::mcq;
    throw Error(ErrorCode::config_error, "unknown question kind '" + name + "'");
}

const char* to_string(QuestionKind kind) {
    return kind == QuestionKind::free_text ? "free_text" : "mcq";
}

void validate_question(const Question& q) {
    if (q.question_id.empty())
        throw Error(ErrorCode::config_error, "question without question_id");
    if (q.kind == QuestionKind::free_text) {
        if (q.marks_max < 1)
            throw Error(ErrorCode::config_error,
                        "free-text question " + q.question_id + " needs marks_max >= 1");
    } else {
        if (q.options.size() < 2)
            throw Error(ErrorCode::config_error,
                        "mcq question " + q.question_id + " needs at least 2 options");
        if (q.answer_key < 0 || q.answer_key >= static_cast<int>(q.options.size()))
            throw Error(ErrorCode::config_error,
                        "mcq question " + q.question_id + " has an invalid answer_key");
    }
}

const Question* Quiz::find(const std::string& question_id) const {
    for (const auto& q : questions)
        if (q.question_id == question_id) return &q;
    return nullptr;
}

Quiz load_quiz(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_error, path.string() + ": " + e.what());
    }
    Quiz quiz;
    try {
        quiz.module_id = doc.at("module_id").get<std::string>();
        quiz.quiz_serial = doc.at("quiz_serial").get<int>();
        quiz.week = doc.at("week").get<int>();
        for (const auto& jq : doc.at("questions")) {
            Question q;
            q.question_id = jq.at("question_id").get<std::string>();
            q.kind = question_kind_from_string(jq.at("kind").get<std::string>());
            q.text = jq.at("text").get<std::string>();
            q.marks_max = jq.value("marks_max", q.kind == QuestionKind::mcq ? 1 : 0);
            if (jq.contains("options")) q.options = jq.at("options").get<std::vector<std::string>>();
            q.answer_key = jq.value("answer_key", -1);
            q.week = jq.value("week", quiz.week);
            q.module_id = jq.value("module_id", quiz.module_id);
            validate_question(q);
            quiz.questions.push_back(std::move(q));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_error, path.string() + ": " + e.what());
    }
    return quiz;
}

Classification classification_from_string(const std::string& name) {
    if (name == "correct") return Classification::correct;
    if (name == "partially_correct") return Classification::partially_correct;
    if (name == "incorrect") return Classification::incorrect;
    throw Error(ErrorCode::config_error, "unknown classification '" + name + "'");
}

const char* to_string(Classification c) {
    switch (c) {
        case Classification::correct: return "correct";
        case Classification::partially_correct: return "partially_correct";
        case Classification::incorrect: return "incorrect";
    }
    return "?";
}

void to_json(json& j, const FeedbackRecord& r) {
    j = json{
        {"question_id", r.question_id},
        {"classification", to_string(r.classification)},
        {"marks_awarded", r.marks_awarded},
        {"marks_max", r.marks_max},
        {"full_text", r.full_text},
        {"warnings", r.warnings},
    };
    if (r.chapter_ref)
        j["chapter_ref"] = json{{"section_id", r.chapter_ref->section_id},
                                {"heading", r.chapter_ref->heading}};
    else
        j["chapter_ref"] = nullptr;
    if (r.mcq_result)
        j["mcq_result"] = *r.mcq_result;
    else
        j["mcq_result"] = nullptr;
}

void from_json(const json& j, FeedbackRecord& r) {
    r.question_id = j.value("question_id", std::string{});
    r.classification = classification_from_string(j.at("classification").get<std::string>());
    r.marks_awarded = j.at("marks_awarded").get<int>();
    r.marks_max = j.at("marks_max").get<int>();
    r.full_text = j.value("full_text", std::string{});
    r.warnings = j.value("warnings", std::vector<std::string>{});
    r.chapter_ref.reset();
    if (j.contains("chapter_ref") && !j.at("chapter_ref").is_null()) {
        const json& c = j.at("chapter_ref");
        r.chapter_ref = ChapterRef{c.at("section_id").get<std::string>(),
                                   c.value("heading", std::string{})};
    }
    r.mcq_result.reset();
    if (j.contains("mcq_result") && !j.at("mcq_result").is_null())
        r.mcq_result = j.at("mcq_result").get<bool>();
}

namespace {

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Model output cites sections in several shapes: chapter '1.5 ...' /
// chapter 1.5 ... / section "1.5 ...". The id is what scoring compares;
// the heading is kept as informational text.
std::optional<ChapterRef> find_chapter_ref(const std::string& text) {
    static const std::regex re(R"((?:section|chapter)\s+(["'])?(\d+(?:\.\d+)*))",
                               std::regex::icase);
    std::smatch m;
    if (!std::regex_search(text, m, re)) return std::nullopt;

    ChapterRef ref;
    ref.section_id = m[2].str();
    std::size_t after_id = static_cast<std::size_t>(m.position(2) + m.length(2));
    std::size_t end;
    if (m[1].matched) {
        end = text.find(m[1].str()[0], after_id);
    } else {
        end = text.find('\n', after_id);
    }
    if (end == std::string::npos) end = text.size();
    ref.heading = trim(text.substr(after_id, end - after_id));
    return ref;
}

std::optional<Classification> find_classification(const std::string& lower) {
    // Order matters: "partially correct" contains "correct", and "is
    // incorrect" must not be shadowed either.
    if (lower.find("partially correct") != std::string::npos)
        return Classification::partially_correct;
    if (lower.find("is incorrect") != std::string::npos) return Classification::incorrect;
    if (lower.find("is correct") != std::string::npos) return Classification::correct;
    return std::nullopt;
}

}  // namespace

FeedbackRecord parse_free_text_feedback(const std::string& text, int marks_max) {
    if (trim(text).empty()) throw Error(ErrorCode::empty_text, "feedback text is empty");

    FeedbackRecord record;
    record.full_text = text;

    auto cls = find_classification(lowercase(text));
    if (!cls)
        throw Error(ErrorCode::no_classification,
                    "no correct / partially correct / incorrect phrase found");
    record.classification = *cls;

    // Last mark line wins: the trailer is mandated at the end, and earlier
    // matches can be echoes of the exemplars.
    static const std::regex mark_re(
        R"(total\s+mark\s*(?:for\s+this\s+question)?\s*:\s*(\d+)\s*/\s*(\d+))",
        std::regex::icase);
    std::smatch last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), mark_re);
         it != std::sregex_iterator(); ++it)
        last = *it;
    if (last.empty()) throw Error(ErrorCode::no_mark_line, "no 'Total mark: n/m' line found");
    record.marks_awarded = std::stoi(last[1].str());
    record.marks_max = std::stoi(last[2].str());
    if (record.marks_awarded > record.marks_max)
        throw Error(ErrorCode::mark_out_of_range,
                    "awarded " + std::to_string(record.marks_awarded) + " out of " +
                        std::to_string(record.marks_max));
    if (marks_max > 0 && record.marks_awarded > marks_max)
        throw Error(ErrorCode::mark_out_of_range,
                    "awarded " + std::to_string(record.marks_awarded) +
                        " but the question is out of " + std::to_string(marks_max));

    record.chapter_ref = find_chapter_ref(text);

    if (record.classification == Classification::correct &&
        record.marks_awarded != record.marks_max)
        record.warnings.push_back("ParseInconsistency: classified correct but mark is " +
                                  std::to_string(record.marks_awarded) + "/" +
                                  std::to_string(record.marks_max));
    if (record.classification == Classification::incorrect && record.marks_awarded != 0)
        record.warnings.push_back("ParseInconsistency: classified incorrect but mark is " +
                                  std::to_string(record.marks_awarded) + "/" +
                                  std::to_string(record.marks_max));
    return record;
}

FeedbackRecord parse_mcq_feedback(const std::string& text) {
    if (trim(text).empty()) throw Error(ErrorCode::empty_text, "feedback text is empty");

    FeedbackRecord record;
    record.full_text = text;

    static const std::regex result_re(R"(result\s*:\s*(correct|incorrect))", std::regex::icase);
    std::smatch last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), result_re);
         it != std::sregex_iterator(); ++it)
        last = *it;
    if (last.empty())
        throw Error(ErrorCode::no_result_line, "no 'Result: CORRECT|INCORRECT' line found");

    bool verdict = lowercase(last[1].str()) == "correct";
    record.mcq_result = verdict;
    record.classification = verdict ? Classification::correct : Classification::incorrect;
    record.marks_awarded = verdict ? 1 : 0;
    record.marks_max = 1;
    record.chapter_ref = find_chapter_ref(text);
    return record;
}

const char* to_string(IssueKind kind) {
    switch (kind) {
        case IssueKind::mark_exceeds_max: return "MarkExceedsMax";
        case IssueKind::classification_mark_mismatch: return "ClassificationMarkMismatch";
        case IssueKind::missing_chapter_for_imperfect: return "MissingChapterForImperfect";
        case IssueKind::unknown_chapter: return "UnknownChapter";
    }
    return "?";
}

std::vector<Issue> validate_record(const FeedbackRecord& record, const Question& question,
                                   const std::set<std::string>& known_section_ids) {
    std::vector<Issue> issues;
    int max = question.kind == QuestionKind::mcq ? 1 : question.marks_max;

    if (record.marks_awarded > max)
        issues.push_back({IssueKind::mark_exceeds_max,
                          "awarded " + std::to_string(record.marks_awarded) +
                              " exceeds the question maximum " + std::to_string(max)});

    bool mismatch = false;
    switch (record.classification) {
        case Classification::correct: mismatch = record.marks_awarded != max; break;
        case Classification::incorrect: mismatch = record.marks_awarded != 0; break;
        case Classification::partially_correct:
            mismatch = record.marks_awarded <= 0 || record.marks_awarded >= max;
            break;
    }
    if (mismatch)
        issues.push_back({IssueKind::classification_mark_mismatch,
                          std::string(to_string(record.classification)) + " with mark " +
                              std::to_string(record.marks_awarded) + "/" + std::to_string(max)});

    if (record.classification != Classification::correct && !record.chapter_ref)
        issues.push_back({IssueKind::missing_chapter_for_imperfect,
                          "imperfect answer cites no chapter for further study"});

    if (record.chapter_ref && !known_section_ids.empty() &&
        !known_section_ids.count(record.chapter_ref->section_id))
        issues.push_back({IssueKind::unknown_chapter,
                          "cited section " + record.chapter_ref->section_id +
                              " is not part of the course"});
    return issues;
}

}  // namespace ragfb
