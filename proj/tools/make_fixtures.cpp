// Regenerates the derived fixture artifacts from the hand-written ones.
//
// Inputs (committed, edited by hand):
//   fixtures/course.json fixtures/quiz.json fixtures/attempts.jsonl
//   fixtures/gold.jsonl fixtures/judgments.jsonl fixtures/pipeline.json
// Outputs (committed, written here):
//   fixtures/replay_store.jsonl    canned completions keyed by prompt fingerprint
//   fixtures/expected_records.jsonl golden parse of every completion
//   fixtures/course.vfix           index cache, also used as a load fixture
//
// Two passes: a capture run with a stub gateway harvests the prompt
// fingerprint for every question, then canned completions are written and a
// replay run produces the golden records. Free-text completions are shaped by
// gold.jsonl: items whose expected marks already match score 100, the rest
// deliberately award one mark less than gold so the cohort lands at 90.0 with
// a 50% marks-correct component rate.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ragfb/config.hpp"
#include "ragfb/errors.hpp"
#include "ragfb/hashing.hpp"
#include "ragfb/lms_sync.hpp"
#include "ragfb/pipeline.hpp"
#include "ragfb/prompt_kit.hpp"
#include "ragfb/rubric_eval.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ragfb;

namespace {

constexpr const char* kSalt = "fixture-salt";

// Returns a text every parser accepts, so the capture pass survives both
// question kinds without knowing which is which.
class CaptureGateway : public LlmGateway {
public:
    std::string complete(const CompletionRequest& request) override {
        fingerprints.push_back(prompt_fingerprint(request.user_text));
        return "Your answer is correct! Well done.\nTotal mark: 0/6\nResult: CORRECT";
    }
    std::string mode() const override { return "mock"; }

    std::vector<std::string> fingerprints;
};

// Walkthrough-style grading: inline labels, the long "Total mark for this
// question" trailer and a double-quoted section heading.
const std::string kWalkthroughFeedback =
    "Feedback: Your answer is partially correct but incomplete. The correct answer is: "
    "Confidentiality: it assures that private or confidential information is not disclosed to "
    "unauthorised individuals. Integrity: it assures that information and programs are changed "
    "only in a specified and authorised manner. Availability: it assures that systems work "
    "promptly, and service is not denied to authorised users. Total mark for this question: "
    "4/6. Feedback: You have correctly identified and described two of the three main security "
    "properties, confidentiality and integrity. However, you missed mentioning and describing "
    "the third property, availability, which is equally important in ensuring that systems work "
    "promptly and service is not denied to authorised users. To improve, review section \"1.5 "
    "How do we define security?\" to get a comprehensive understanding of all three security "
    "properties and their significance.";

int question_serial(const std::string& qid) {
    return std::stoi(qid.substr(2));
}

std::string free_text_response(const GoldAnswer& gold, const Question& question,
                               const ExemplarBank& bank) {
    int serial = question_serial(gold.question_id);
    if (serial == 1) return bank.fully_correct.expected_feedback;
    if (serial == 2) return bank.partially_correct.expected_feedback;
    if (serial == 3) return bank.incorrect.expected_feedback;
    if (serial == 4) return kWalkthroughFeedback;

    int max = question.marks_max;
    if (serial <= 15) {
        switch (gold.expected_classification) {
            case Classification::correct:
                if (gold.expected_marks != max)
                    throw Error(ErrorCode::config_error,
                                gold.question_id + ": correct gold must expect full marks");
                return "Your answer is correct! Well done. You covered everything the question "
                       "asked for.\nTotal mark: " +
                       std::to_string(max) + "/" + std::to_string(max);
            case Classification::partially_correct:
                return "Your answer is partially correct. The core idea is there, but part of "
                       "the expected answer is missing or imprecise.\nStudy section " +
                       gold.expected_chapter + " for a deeper understanding.\nTotal mark : " +
                       std::to_string(gold.expected_marks) + "/" + std::to_string(max);
            case Classification::incorrect:
                return "Your answer is incorrect. The key concepts the question asked about are "
                       "not addressed.\nStudy section " +
                       gold.expected_chapter + " before attempting this question again.\n"
                       "Total mark : 0/" + std::to_string(max);
        }
    }
    // Off-by-one block: one mark below gold, still partially correct.
    if (gold.expected_classification != Classification::partially_correct ||
        gold.expected_marks < 2)
        throw Error(ErrorCode::config_error,
                    gold.question_id + ": off-by-one gold must be partially correct with "
                    "expected marks >= 2");
    return "Your answer is partially correct. Most of the key points are present, but one "
           "element is missing or imprecise.\nStudy section " +
           gold.expected_chapter + " for a deeper understanding.\nTotal mark : " +
           std::to_string(gold.expected_marks - 1) + "/" + std::to_string(max);
}

std::string mcq_response(const Question& question) {
    int serial = question_serial(question.question_id);
    if (serial <= 10)
        return "Well done, you selected the right option.\nResult: CORRECT";
    char letter = static_cast<char>('A' + question.answer_key);
    return "That is not the right option. The correct answer is option " +
           std::string(1, letter) + ": " + question.options[question.answer_key] +
           ". Focus on section " + std::to_string(question.week) +
           ".1 for revision.\nResult: INCORRECT";
}

std::vector<std::string> run_overrides(const fs::path& scratch) {
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    return {"sinks.0.outbox=" + (scratch / "outbox").string(),
            "manifest_path=" + (scratch / "manifest.json").string()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regenerate derived fixture artifacts (replay store, golden records, index)"};
    std::string fixtures_arg = "fixtures";
    app.add_option("--fixtures", fixtures_arg, "Fixture directory");
    CLI11_PARSE(app, argc, argv);

    setenv("RAGFB_SALT", kSalt, 1);
    const fs::path dir = fs::absolute(fixtures_arg);
    const fs::path scratch = fs::temp_directory_path() / "ragfb-make-fixtures";

    try {
        Quiz quiz = load_quiz(dir / "quiz.json");
        auto attempts = import_attempts(dir / "attempts.jsonl", kSalt, &quiz);
        auto gold = load_gold(dir / "gold.jsonl");

        // Capture pass: harvest one fingerprint per answered question.
        fs::remove(dir / "course.vfix");
        auto capture = std::make_shared<CaptureGateway>();
        PipelineConfig cfg =
            load_config(dir / "pipeline.json", run_overrides(scratch / "capture"));
        Pipeline capture_pipeline(cfg, nullptr, capture);
        auto captured = capture_pipeline.run(attempts);
        if (!capture_pipeline.manifest().question_failures.empty()) {
            for (const auto& f : capture_pipeline.manifest().question_failures)
                std::cerr << "capture failure: " << f << "\n";
            return 1;
        }
        if (captured.size() != capture->fingerprints.size()) {
            std::cerr << "envelope/fingerprint count mismatch\n";
            return 1;
        }

        ExemplarBank bank = load_exemplars(cfg.exemplar_bank);
        std::map<std::string, const GoldAnswer*> gold_by_id;
        for (const auto& g : gold) gold_by_id[g.question_id] = &g;

        std::ofstream store(dir / "replay_store.jsonl", std::ios::trunc);
        std::set<std::string> seen;
        for (std::size_t i = 0; i < captured.size(); ++i) {
            const std::string& qid = captured[i].question_id;
            if (!seen.insert(qid).second) {
                std::cerr << qid << " answered more than once; fixture expects one attempt\n";
                return 1;
            }
            const Question* question = quiz.find(qid);
            std::string response;
            if (question->kind == QuestionKind::mcq) {
                response = mcq_response(*question);
            } else {
                auto g = gold_by_id.find(qid);
                if (g == gold_by_id.end()) {
                    std::cerr << qid << " missing from gold.jsonl\n";
                    return 1;
                }
                response = free_text_response(*g->second, *question, bank);
            }
            store << json{{"fingerprint", capture->fingerprints[i]},
                          {"response", response}}
                         .dump()
                  << "\n";
        }
        store.close();

        // Replay pass: the store written above must satisfy every prompt.
        PipelineConfig replay_cfg =
            load_config(dir / "pipeline.json", run_overrides(scratch / "replay"));
        Pipeline replay_pipeline(replay_cfg);
        auto envelopes = replay_pipeline.run(attempts);
        if (!replay_pipeline.manifest().question_failures.empty()) {
            for (const auto& f : replay_pipeline.manifest().question_failures)
                std::cerr << "replay failure: " << f << "\n";
            return 1;
        }

        std::ofstream golden(dir / "expected_records.jsonl", std::ios::trunc);
        for (const auto& envelope : envelopes) {
            json record;
            to_json(record, envelope.record);
            golden << json{{"envelope_id", envelope.envelope_id},
                           {"question_id", envelope.question_id},
                           {"record", record}}
                          .dump()
                   << "\n";
        }
        golden.close();

        // Sanity: the cohort numbers the fixtures are built to produce.
        json eval = replay_pipeline.evaluate(envelopes, dir / "gold.jsonl",
                                             dir / "judgments.jsonl");
        double mean = eval["report"]["mean_percent"].get<double>();
        std::size_t scored = eval["scores"].size();

        int mcq_total = 0, mcq_agreed = 0;
        std::map<std::string, Answer> answer_by_qid;
        for (const auto& attempt : attempts)
            for (const auto& [qid, answer] : attempt.answers) answer_by_qid[qid] = answer;
        for (const auto& envelope : envelopes) {
            const Question* question = quiz.find(envelope.question_id);
            if (question->kind != QuestionKind::mcq) continue;
            ++mcq_total;
            int selected = std::get<int>(answer_by_qid.at(envelope.question_id));
            mcq_agreed += score_mcq(envelope.record, *question, selected);
        }

        std::cout << "fixtures: " << envelopes.size() << " envelopes, " << scored
                  << " free-text scored, mean " << mean << "%, mcq " << mcq_agreed << "/"
                  << mcq_total << "\n";
        if (scored != 30 || mean != 90.0 || mcq_total != 20 || mcq_agreed != 20) {
            std::cerr << "fixture targets missed; inspect gold.jsonl and the crafted "
                         "responses\n";
            return 1;
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout << "wrote " << (dir / "replay_store.jsonl").string() << ", "
              << (dir / "expected_records.jsonl").string() << ", "
              << (dir / "course.vfix").string() << "\n";
    return 0;
}
