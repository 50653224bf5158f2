#include "ragfb/rubric_eval.hpp"

#include "ragfb/errors.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace ragfb {

using nlohmann::json;

namespace {

double round1(double x) { return std::round(x * 10.0) / 10.0; }

}  // namespace

EfficacyScore score_free_text(const FeedbackRecord& record, const GoldAnswer& gold,
                              const Adjudication& judgment, const RubricWeights& weights) {
    if (weights.total() != 100)
        throw Error(ErrorCode::config_error, "rubric weights must sum to 100");
    if (!record.question_id.empty() && record.question_id != gold.question_id)
        throw Error(ErrorCode::question_mismatch,
                    "record is for " + record.question_id + ", gold is for " + gold.question_id);
    if (!judgment.question_id.empty() && judgment.question_id != gold.question_id)
        throw Error(ErrorCode::question_mismatch,
                    "judgment is for " + judgment.question_id + ", gold is for " +
                        gold.question_id);

    EfficacyScore score;
    score.question_id = gold.question_id;
    score.flags.marks_correct = record.marks_awarded == gold.expected_marks;
    score.flags.classification_correct = record.classification == gold.expected_classification;
    if (gold.expected_chapter.empty())
        score.flags.chapter_identified = !record.chapter_ref.has_value();
    else
        score.flags.chapter_identified =
            record.chapter_ref && record.chapter_ref->section_id == gold.expected_chapter;
    score.flags.tailored_to_gap = judgment.tailored_to_gap;
    score.flags.clear_explanation = judgment.clear_explanation;
    score.flags.well_structured = judgment.well_structured;

    score.percentage = (score.flags.marks_correct ? weights.marks_correct : 0) +
                       (score.flags.classification_correct ? weights.classification_correct : 0) +
                       (score.flags.chapter_identified ? weights.chapter_identified : 0) +
                       (score.flags.tailored_to_gap ? weights.tailored_to_gap : 0) +
                       (score.flags.clear_explanation ? weights.clear_explanation : 0) +
                       (score.flags.well_structured ? weights.well_structured : 0);
    return score;
}

int score_mcq(const FeedbackRecord& record, const Question& question, int selected) {
    if (question.kind != QuestionKind::mcq)
        throw Error(ErrorCode::not_mcq, "question " + question.question_id + " is not an MCQ");
    if (!record.mcq_result)
        throw Error(ErrorCode::not_mcq, "record carries no MCQ verdict");
    bool pick_matches_key = selected == question.answer_key;
    return *record.mcq_result == pick_matches_key ? 1 : 0;
}

Adjudication heuristic_adjudicate(const FeedbackRecord& record) {
    Adjudication j;
    j.question_id = record.question_id;
    j.adjudicator_id = "heuristic-v1";
    j.tailored_to_gap = record.chapter_ref.has_value();

    static const std::regex mark_re(R"(total\s+mark\s*(?:for\s+this\s+question)?\s*:\s*\d+\s*/\s*\d+)",
                                    std::regex::icase);
    static const std::regex result_re(R"(result\s*:\s*(?:correct|incorrect))", std::regex::icase);
    j.well_structured = std::regex_search(record.full_text, mark_re) ||
                        std::regex_search(record.full_text, result_re);

    int sentences = 0;
    for (char c : record.full_text)
        if (c == '.' || c == '!' || c == '?') ++sentences;
    j.clear_explanation = sentences >= 2;
    return j;
}

CohortReport cohort_report(const std::vector<EfficacyScore>& scores) {
    if (scores.empty()) throw Error(ErrorCode::empty_cohort, "no scores to aggregate");

    CohortReport report;
    report.count = scores.size();

    double sum = 0.0;
    std::map<std::string, std::size_t> hits{
        {"marks_correct", 0},       {"classification_correct", 0}, {"chapter_identified", 0},
        {"tailored_to_gap", 0},     {"clear_explanation", 0},      {"well_structured", 0},
    };
    for (const auto& s : scores) {
        sum += s.percentage;
        hits["marks_correct"] += s.flags.marks_correct;
        hits["classification_correct"] += s.flags.classification_correct;
        hits["chapter_identified"] += s.flags.chapter_identified;
        hits["tailored_to_gap"] += s.flags.tailored_to_gap;
        hits["clear_explanation"] += s.flags.clear_explanation;
        hits["well_structured"] += s.flags.well_structured;
        int bin = s.percentage / 10;
        if (bin > 9) bin = 9;  // 100% shares the top decile
        ++report.decile_histogram[static_cast<std::size_t>(bin)];
    }
    report.mean_percent = round1(sum / static_cast<double>(scores.size()));
    for (const auto& [name, n] : hits)
        report.component_rates[name] =
            round1(100.0 * static_cast<double>(n) / static_cast<double>(scores.size()));
    return report;
}

void to_json(json& j, const EfficacyScore& s) {
    j = json{
        {"question_id", s.question_id},
        {"percentage", s.percentage},
        {"flags",
         {
             {"marks_correct", s.flags.marks_correct},
             {"classification_correct", s.flags.classification_correct},
             {"chapter_identified", s.flags.chapter_identified},
             {"tailored_to_gap", s.flags.tailored_to_gap},
             {"clear_explanation", s.flags.clear_explanation},
             {"well_structured", s.flags.well_structured},
         }},
    };
}

void to_json(json& j, const CohortReport& r) {
    j = json{
        {"count", r.count},
        {"mean_percent", r.mean_percent},
        {"component_rates", r.component_rates},
        {"decile_histogram", r.decile_histogram},
    };
}

std::string render_report_text(const CohortReport& r) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(1);
    out << "Cohort efficacy report\n";
    out << "  questions scored : " << r.count << "\n";
    out << "  mean efficacy    : " << r.mean_percent << "%\n";
    out << "  component satisfaction:\n";
    for (const auto& [name, rate] : r.component_rates)
        out << "    " << name << std::string(name.size() < 24 ? 24 - name.size() : 1, ' ')
            << rate << "%\n";
    out << "  deciles (0-9 ... 90-100):";
    for (std::size_t n : r.decile_histogram) out << " " << n;
    out << "\n";
    return out.str();
}

namespace {

template <typename T, typename ParseLine>
std::vector<T> load_jsonl(const std::filesystem::path& path, ParseLine parse_line) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_line(json::parse(line)));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::malformed_line,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

std::vector<GoldAnswer> load_gold(const std::filesystem::path& path) {
    return load_jsonl<GoldAnswer>(path, [](const json& j) {
        GoldAnswer g;
        g.question_id = j.at("question_id").get<std::string>();
        g.expected_marks = j.at("expected_marks").get<int>();
        g.expected_classification =
            classification_from_string(j.at("expected_classification").get<std::string>());
        g.expected_chapter = j.value("expected_chapter", std::string{});
        return g;
    });
}

std::vector<Adjudication> load_adjudications(const std::filesystem::path& path) {
    return load_jsonl<Adjudication>(path, [](const json& j) {
        Adjudication a;
        a.question_id = j.at("question_id").get<std::string>();
        a.tailored_to_gap = j.at("tailored_to_gap").get<bool>();
        a.clear_explanation = j.at("clear_explanation").get<bool>();
        a.well_structured = j.at("well_structured").get<bool>();
        a.adjudicator_id = j.value("adjudicator_id", std::string{});
        return a;
    });
}

}  // namespace ragfb
