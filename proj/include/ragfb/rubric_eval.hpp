#pragma once

#include "ragfb/feedback_core.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ragfb {

/// Efficacy rubric weights in percentage points. The default grouping is
/// correctness 40 (marks + classification), personalisation 40 (chapter +
/// tailoring), clarity 20 (explanation + structure).
struct RubricWeights {
    int marks_correct = 20;
    int classification_correct = 20;
    int chapter_identified = 20;
    int tailored_to_gap = 20;
    int clear_explanation = 10;
    int well_structured = 10;

    int total() const {
        return marks_correct + classification_correct + chapter_identified + tailored_to_gap +
               clear_explanation + well_structured;
    }
};

struct GoldAnswer {
    std::string question_id;
    int expected_marks = 0;
    Classification expected_classification = Classification::correct;
    std::string expected_chapter;  // section id; empty means no citation expected
};

/// Judgments for the subjective rubric components. Produced by a human or by
/// heuristic_adjudicate (then adjudicator_id is "heuristic-v1").
struct Adjudication {
    std::string question_id;
    bool tailored_to_gap = false;
    bool clear_explanation = false;
    bool well_structured = false;
    std::string adjudicator_id;
};

struct ComponentFlags {
    bool marks_correct = false;
    bool classification_correct = false;
    bool chapter_identified = false;
    bool tailored_to_gap = false;
    bool clear_explanation = false;
    bool well_structured = false;
};

struct EfficacyScore {
    std::string question_id;
    ComponentFlags flags;
    int percentage = 0;  // dot product of flags and weights
};

/// Scores one free-text feedback record against its gold answer.
/// chapter_identified is true when the cited section id equals the expected
/// one, or when no citation was expected and none was made.
/// Throws QuestionMismatch when ids disagree.
EfficacyScore score_free_text(const FeedbackRecord& record, const GoldAnswer& gold,
                              const Adjudication& judgment, const RubricWeights& weights = {});

/// Binary MCQ protocol: 1 iff the model's verdict agrees with whether the
/// selected option matches the answer key. Throws NotMcq.
int score_mcq(const FeedbackRecord& record, const Question& question, int selected);

/// Labelled heuristic stand-in for a human adjudicator: well_structured when
/// a mark trailer is present, tailored_to_gap when a section is cited,
/// clear_explanation when the text has at least two sentences.
Adjudication heuristic_adjudicate(const FeedbackRecord& record);

struct CohortReport {
    std::size_t count = 0;
    double mean_percent = 0.0;                      // reported to 0.1
    std::map<std::string, double> component_rates;  // percent of cohort, to 0.1
    std::array<std::size_t, 10> decile_histogram{}; // [0,10) ... [90,100]
};

/// Throws EmptyCohort on an empty list.
CohortReport cohort_report(const std::vector<EfficacyScore>& scores);

void to_json(nlohmann::json& j, const EfficacyScore& s);
void to_json(nlohmann::json& j, const CohortReport& r);
std::string render_report_text(const CohortReport& r);

std::vector<GoldAnswer> load_gold(const std::filesystem::path& path);
std::vector<Adjudication> load_adjudications(const std::filesystem::path& path);

}  // namespace ragfb
