#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragfb/feedback_core.hpp"
#include "ragfb/prompt_kit.hpp"
#include "support.hpp"

using namespace ragfb;
using nlohmann::json;
using testutil::error_code_of;
using testutil::repo_path;

namespace {

ExemplarBank walkthroughs() {
    return load_exemplars(repo_path("assets/exemplars/default_bank.json"));
}

}  // namespace

TEST_CASE("fully correct walkthrough parses to full marks with no citation") {
    auto record = parse_free_text_feedback(walkthroughs().fully_correct.expected_feedback, 6);
    CHECK(record.classification == Classification::correct);
    CHECK(record.marks_awarded == 6);
    CHECK(record.marks_max == 6);
    CHECK(!record.chapter_ref.has_value());
    CHECK(record.warnings.empty());
}

TEST_CASE("partially correct walkthrough parses marks and the quoted chapter") {
    auto record =
        parse_free_text_feedback(walkthroughs().partially_correct.expected_feedback, 6);
    CHECK(record.classification == Classification::partially_correct);
    CHECK(record.marks_awarded == 4);
    CHECK(record.marks_max == 6);
    REQUIRE(record.chapter_ref.has_value());
    CHECK(record.chapter_ref->section_id == "1.5");
    CHECK(record.chapter_ref->heading.find("How do we define security?") != std::string::npos);
}

TEST_CASE("incorrect walkthrough parses zero marks and the bare chapter") {
    auto record = parse_free_text_feedback(walkthroughs().incorrect.expected_feedback, 6);
    CHECK(record.classification == Classification::incorrect);
    CHECK(record.marks_awarded == 0);
    CHECK(record.marks_max == 6);
    REQUIRE(record.chapter_ref.has_value());
    CHECK(record.chapter_ref->section_id == "1.5");
}

TEST_CASE("long mark trailer and quoted section survive parsing") {
    // Inline "Feedback:" labels, "Total mark for this question: 4/6" and a
    // double-quoted heading in one paragraph.
    std::string text =
        "Feedback: Your answer is partially correct but incomplete. "
        "Total mark for this question: 4/6. Feedback: You missed availability. "
        "To improve, review section \"1.5 How do we define security?\" before the exam.";
    auto record = parse_free_text_feedback(text, 6);
    CHECK(record.classification == Classification::partially_correct);
    CHECK(record.marks_awarded == 4);
    CHECK(record.marks_max == 6);
    REQUIRE(record.chapter_ref.has_value());
    CHECK(record.chapter_ref->section_id == "1.5");
}

TEST_CASE("the last mark line wins when exemplar echoes precede it") {
    std::string text =
        "Your answer is partially correct.\n"
        "For example, a perfect answer would earn Total mark: 6/6.\n"
        "Total mark: 3/6";
    auto record = parse_free_text_feedback(text, 6);
    CHECK(record.marks_awarded == 3);
}

TEST_CASE("the first chapter mention wins") {
    std::string text =
        "Your answer is incorrect.\n"
        "Study chapter 2.3 first; section 4.1 is optional.\n"
        "Total mark: 0/5";
    auto record = parse_free_text_feedback(text, 5);
    REQUIRE(record.chapter_ref.has_value());
    CHECK(record.chapter_ref->section_id == "2.3");
}

TEST_CASE("classification detection dodges substring traps") {
    CHECK(parse_free_text_feedback("Your answer is incorrect.\nTotal mark: 0/4", 4)
              .classification == Classification::incorrect);
    CHECK(parse_free_text_feedback("Your answer is correct!\nTotal mark: 4/4", 4)
              .classification == Classification::correct);
    CHECK(parse_free_text_feedback("Your answer is PARTIALLY CORRECT.\nTotal mark: 2/4", 4)
              .classification == Classification::partially_correct);
}

TEST_CASE("free-text parse failures carry typed codes") {
    CHECK(error_code_of([] { parse_free_text_feedback("", 6); }) == ErrorCode::empty_text);
    CHECK(error_code_of([] { parse_free_text_feedback("  \n ", 6); }) == ErrorCode::empty_text);
    CHECK(error_code_of([] { parse_free_text_feedback("Total mark: 3/6", 6); }) ==
          ErrorCode::no_classification);
    CHECK(error_code_of([] { parse_free_text_feedback("Your answer is correct!", 6); }) ==
          ErrorCode::no_mark_line);
    CHECK(error_code_of([] {
              parse_free_text_feedback("Your answer is correct! Total mark: 7/6", 6);
          }) == ErrorCode::mark_out_of_range);
}

TEST_CASE("inconsistent classification and marks warn instead of failing") {
    auto correct_partial =
        parse_free_text_feedback("Your answer is correct!\nTotal mark: 4/6", 6);
    CHECK(correct_partial.warnings.size() == 1);

    auto incorrect_nonzero =
        parse_free_text_feedback("Your answer is incorrect.\nTotal mark: 2/6", 6);
    CHECK(incorrect_nonzero.warnings.size() == 1);

    auto consistent = parse_free_text_feedback("Your answer is correct!\nTotal mark: 6/6", 6);
    CHECK(consistent.warnings.empty());
}

TEST_CASE("mcq trailer parsing takes the last result line") {
    auto correct = parse_mcq_feedback("Well done.\nResult: CORRECT");
    CHECK(correct.mcq_result == true);
    CHECK(correct.classification == Classification::correct);
    CHECK(correct.marks_awarded == 1);
    CHECK(correct.marks_max == 1);
    CHECK(!correct.chapter_ref.has_value());

    auto incorrect =
        parse_mcq_feedback("Not quite.\nResult: INCORRECT\nFocus on section 2.3 this week.");
    CHECK(incorrect.mcq_result == false);
    CHECK(incorrect.marks_awarded == 0);
    REQUIRE(incorrect.chapter_ref.has_value());
    CHECK(incorrect.chapter_ref->section_id == "2.3");

    auto flipped = parse_mcq_feedback("Result: CORRECT\nOn reflection: Result: INCORRECT");
    CHECK(flipped.mcq_result == false);

    CHECK(error_code_of([] { parse_mcq_feedback("no verdict here"); }) ==
          ErrorCode::no_result_line);
}

TEST_CASE("record validation cross-checks the question") {
    Question q;
    q.question_id = "ft01";
    q.kind = QuestionKind::free_text;
    q.text = "q";
    q.marks_max = 6;
    q.week = 1;

    auto issues_of = [&](const std::string& text, std::set<std::string> sections = {}) {
        auto record = parse_free_text_feedback(text, 0);  // 0 = denominator only
        record.question_id = "ft01";
        return validate_record(record, q, sections);
    };

    CHECK(issues_of("Your answer is correct!\nTotal mark: 6/6").empty());

    // partial with full marks also cites no chapter, so two issues
    auto mismatch = issues_of("Your answer is partially correct.\nTotal mark: 6/6");
    REQUIRE(mismatch.size() == 2);
    CHECK(mismatch[0].kind == IssueKind::classification_mark_mismatch);
    CHECK(mismatch[1].kind == IssueKind::missing_chapter_for_imperfect);

    auto unknown = issues_of("Your answer is incorrect.\nStudy chapter 9.9 today.\n"
                             "Total mark: 0/6",
                             {"1.5", "2.3"});
    bool found = false;
    for (const auto& issue : unknown) found |= issue.kind == IssueKind::unknown_chapter;
    CHECK(found);

    auto overflow = issues_of("Your answer is correct!\nTotal mark: 8/8");
    bool exceeded = false;
    for (const auto& issue : overflow) exceeded |= issue.kind == IssueKind::mark_exceeds_max;
    CHECK(exceeded);

    auto missing = issues_of("Your answer is incorrect.\nTotal mark: 0/6");
    bool flagged = false;
    for (const auto& issue : missing)
        flagged |= issue.kind == IssueKind::missing_chapter_for_imperfect;
    CHECK(flagged);
}

TEST_CASE("feedback records round-trip through json") {
    auto record =
        parse_free_text_feedback(walkthroughs().partially_correct.expected_feedback, 6);
    record.question_id = "ft02";
    json j;
    to_json(j, record);
    FeedbackRecord back;
    from_json(j, back);
    CHECK(back.question_id == record.question_id);
    CHECK(back.classification == record.classification);
    CHECK(back.marks_awarded == record.marks_awarded);
    CHECK(back.marks_max == record.marks_max);
    CHECK(back.full_text == record.full_text);
    REQUIRE(back.chapter_ref.has_value());
    CHECK(back.chapter_ref->section_id == record.chapter_ref->section_id);
    CHECK(back.mcq_result == record.mcq_result);
}

TEST_CASE("quiz loading validates questions and inherits defaults") {
    Quiz quiz = load_quiz(repo_path("fixtures/quiz.json"));
    CHECK(quiz.module_id == "netsec");
    CHECK(quiz.quiz_serial == 1);
    CHECK(quiz.questions.size() == 50);

    const Question* ft = quiz.find("ft01");
    REQUIRE(ft != nullptr);
    CHECK(ft->kind == QuestionKind::free_text);
    CHECK(ft->marks_max == 6);
    CHECK(ft->module_id == "netsec");  // inherited from the quiz header

    const Question* mc = quiz.find("mc01");
    REQUIRE(mc != nullptr);
    CHECK(mc->kind == QuestionKind::mcq);
    CHECK(mc->options.size() == 4);
    CHECK(mc->answer_key == 1);

    CHECK(quiz.find("nope") == nullptr);
}

TEST_CASE("question validation rejects broken definitions") {
    Question q;
    q.question_id = "x";
    q.kind = QuestionKind::free_text;
    q.text = "t";
    q.marks_max = 0;  // free text needs at least one mark
    q.week = 1;
    CHECK(error_code_of([&] { validate_question(q); }) == ErrorCode::config_error);

    q.kind = QuestionKind::mcq;
    q.marks_max = 0;
    q.options = {"only one"};
    q.answer_key = 0;
    CHECK(error_code_of([&] { validate_question(q); }) == ErrorCode::config_error);

    q.options = {"a", "b", "c"};
    q.answer_key = 3;  // out of range
    CHECK(error_code_of([&] { validate_question(q); }) == ErrorCode::config_error);
}
