#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ragfb {

enum class QuestionKind { free_text, mcq };

QuestionKind question_kind_from_string(const std::string& name);
const char* to_string(QuestionKind kind);

struct Question {
    std::string question_id;
    QuestionKind kind = QuestionKind::free_text;
    std::string text;
    int marks_max = 0;                  // free_text only
    std::vector<std::string> options;   // mcq only
    int answer_key = -1;                // mcq only, index into options
    int week = 0;
    std::string module_id;
};

/// Throws ConfigError when invariants are broken (free_text needs marks_max
/// >= 1; mcq needs >= 2 options and a valid answer_key).
void validate_question(const Question& q);

struct Quiz {
    std::string module_id;
    int quiz_serial = 0;
    int week = 0;
    std::vector<Question> questions;

    const Question* find(const std::string& question_id) const;
};

/// Quiz definition JSON: {module_id, quiz_serial, week, questions: [...]}.
/// Per-question week/module_id default to the quiz's when omitted.
Quiz load_quiz(const std::filesystem::path& path);

/// Free-text answers are strings; MCQ answers are selected option indices.
using Answer = std::variant<std::string, int>;

struct QuizAttempt {
    std::string pseudonym;
    std::string module_id;
    int quiz_serial = 0;
    int attempt_no = 0;
    int week = 0;
    std::map<std::string, Answer> answers;
};

enum class Classification { correct, partially_correct, incorrect };

Classification classification_from_string(const std::string& name);
const char* to_string(Classification c);

struct ChapterRef {
    std::string section_id;  // e.g. "1.5"
    std::string heading;     // best-effort text near the citation
};

struct FeedbackRecord {
    std::string question_id;
    Classification classification = Classification::incorrect;
    int marks_awarded = 0;
    int marks_max = 0;
    std::optional<ChapterRef> chapter_ref;
    std::string full_text;
    std::optional<bool> mcq_result;
    // Classification/mark inconsistencies survive as warnings, never as
    // silent fixes: the record must reach rubric scoring as parsed.
    std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const FeedbackRecord& r);
void from_json(const nlohmann::json& j, FeedbackRecord& r);

/// Parses model feedback for a free-text answer.
///   - classification: first phrase found, checked partially correct ->
///     is incorrect -> is correct so substrings cannot shadow each other
///   - marks: last `Total mark [for this question] : n/m` line wins
///     (tolerates both "mark:" and "mark :")
///   - chapter: first `section|chapter <id>` citation, quoted or bare
/// marks_max <= 0 disables the cross-check against the question's maximum.
/// Throws EmptyText, NoClassification, NoMarkLine, MarkOutOfRange.
FeedbackRecord parse_free_text_feedback(const std::string& text, int marks_max);

/// Parses model feedback for an MCQ answer: the last `Result: CORRECT` /
/// `Result: INCORRECT` trailer decides, chapter parsed as above.
/// Throws EmptyText, NoResultLine.
FeedbackRecord parse_mcq_feedback(const std::string& text);

enum class IssueKind {
    mark_exceeds_max,
    classification_mark_mismatch,
    missing_chapter_for_imperfect,
    unknown_chapter,
};

const char* to_string(IssueKind kind);

struct Issue {
    IssueKind kind;
    std::string message;
};

/// Pure consistency report. known_section_ids empty skips the UnknownChapter
/// check (caller has no course loaded).
std::vector<Issue> validate_record(const FeedbackRecord& record, const Question& question,
                                   const std::set<std::string>& known_section_ids = {});

}  // namespace ragfb
