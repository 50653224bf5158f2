#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragfb/lms_sync.hpp"
#include "support.hpp"

using namespace ragfb;
using nlohmann::json;
using testutil::error_code_of;
using testutil::fresh_dir;
using testutil::repo_path;
using testutil::spit;

namespace {

std::string attempt_line(const std::string& student, int attempt_no = 1,
                         const std::string& qid = "q7", int week = 3) {
    json j{{"student_id", student}, {"module_id", "crypto"},  {"quiz_serial", 3},
           {"attempt_no", attempt_no}, {"week", week},
           {"answers", json{{qid, "free text answer"}}}};
    return j.dump() + "\n";
}

}  // namespace

TEST_CASE("pseudonyms are deterministic per salt and diverge across salts") {
    CHECK(anonymize("student-42", "salt-a") == anonymize("student-42", "salt-a"));
    CHECK(anonymize("student-42", "salt-a") != anonymize("student-42", "salt-b"));
    CHECK(anonymize("student-42", "salt-a") != anonymize("student-43", "salt-a"));
    CHECK(anonymize("x", "s").size() == 16);
    CHECK(error_code_of([] { anonymize("x", ""); }) == ErrorCode::empty_salt);
}

TEST_CASE("no pseudonym leaks its source id") {
    for (int i = 0; i < 1000; ++i) {
        std::string id = "student" + std::to_string(i);
        std::string pseudonym = anonymize(id, "classroom-salt");
        CHECK(pseudonym.find(id) == std::string::npos);
    }
}

TEST_CASE("a valid export line becomes one attempt") {
    auto attempts = parse_attempts_text(
        R"({"student_id":"s1","module_id":"crypto","quiz_serial":3,"attempt_no":1,"week":3,"answers":{"q7":"the answer"}})"
        "\n",
        "inline", "salt");
    REQUIRE(attempts.size() == 1);
    CHECK(attempts[0].module_id == "crypto");
    CHECK(attempts[0].quiz_serial == 3);
    CHECK(attempts[0].attempt_no == 1);
    CHECK(attempts[0].week == 3);
    CHECK(attempts[0].pseudonym == anonymize("s1", "salt"));
    REQUIRE(attempts[0].answers.count("q7") == 1);
    CHECK(std::get<std::string>(attempts[0].answers.at("q7")) == "the answer");
}

TEST_CASE("empty input means no attempts") {
    CHECK(parse_attempts_text("", "inline", "salt").empty());
    auto dir = fresh_dir("attempts-empty");
    spit(dir / "empty.jsonl", "");
    CHECK(import_attempts(dir / "empty.jsonl", "salt").empty());
}

TEST_CASE("schema violations carry the source location") {
    json line{{"student_id", "s1"}, {"module_id", "m"}, {"quiz_serial", 1},
              {"attempt_no", 1},    {"answers", json::object()}};  // week missing
    auto code = error_code_of(
        [&] { parse_attempts_text(line.dump() + "\n", "feed.jsonl", "salt"); });
    CHECK(code == ErrorCode::missing_field);
    try {
        parse_attempts_text(line.dump() + "\n", "feed.jsonl", "salt");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("feed.jsonl:1") != std::string::npos);
        CHECK(std::string(e.what()).find("week") != std::string::npos);
    }

    CHECK(error_code_of([] { parse_attempts_text("not json\n", "f", "salt"); }) ==
          ErrorCode::malformed_line);
    CHECK(error_code_of([] {
              parse_attempts_text(attempt_line("s1", 1, "q7", 9), "f", "salt");
          }) == ErrorCode::malformed_line);  // week out of 1..6
    CHECK(error_code_of([] {
              parse_attempts_text(attempt_line("s1", 0), "f", "salt");
          }) == ErrorCode::malformed_line);  // attempt_no below 1
}

TEST_CASE("answers accept strings and option indexes only") {
    json j{{"student_id", "s1"}, {"module_id", "m"}, {"quiz_serial", 1},
           {"attempt_no", 1},    {"week", 2},
           {"answers", json{{"q1", "text"}, {"q2", 3}}}};
    auto attempts = parse_attempts_text(j.dump() + "\n", "f", "salt");
    REQUIRE(attempts.size() == 1);
    CHECK(std::get<std::string>(attempts[0].answers.at("q1")) == "text");
    CHECK(std::get<int>(attempts[0].answers.at("q2")) == 3);

    j["answers"]["q3"] = json::array({1, 2});
    CHECK(error_code_of([&] { parse_attempts_text(j.dump() + "\n", "f", "salt"); }) ==
          ErrorCode::malformed_line);
}

TEST_CASE("a quiz rejects answers to unknown questions") {
    Quiz quiz = load_quiz(repo_path("fixtures/quiz.json"));
    json j{{"student_id", "s1"}, {"module_id", "netsec"}, {"quiz_serial", 1},
           {"attempt_no", 1},    {"week", 1},
           {"answers", json{{"never-heard-of-it", "text"}}}};
    CHECK(error_code_of([&] {
              parse_attempts_text(j.dump() + "\n", "f", "salt", &quiz);
          }) == ErrorCode::unknown_question);
}

TEST_CASE("attempts sort by quiz, attempt number, then pseudonym") {
    std::string lines = attempt_line("zz", 2) + attempt_line("aa", 1) + attempt_line("mm", 1);
    auto attempts = parse_attempts_text(lines, "f", "salt");
    REQUIRE(attempts.size() == 3);
    CHECK(attempts[0].attempt_no == 1);
    CHECK(attempts[1].attempt_no == 1);
    CHECK(attempts[2].attempt_no == 2);
    CHECK(attempts[0].pseudonym < attempts[1].pseudonym);
}

TEST_CASE("watcher delivers each file version once") {
    auto dir = fresh_dir("watch-dedupe");
    std::vector<std::vector<QuizAttempt>> deliveries;
    Watcher watcher(AttemptSource{AttemptSource::Kind::directory_watch, dir, 1}, "salt",
                    [&](const std::vector<QuizAttempt>& batch) { deliveries.push_back(batch); });

    spit(dir / "export1.jsonl", attempt_line("s1") + attempt_line("s2"));
    CHECK(watcher.poll_once() == 2);
    REQUIRE(deliveries.size() == 1);
    CHECK(deliveries[0].size() == 2);

    // identical bytes: nothing new
    CHECK(watcher.poll_once() == 0);
    CHECK(deliveries.size() == 1);

    // appended line: only the new attempt is redelivered
    spit(dir / "export1.jsonl",
         attempt_line("s1") + attempt_line("s2") + attempt_line("s3"));
    CHECK(watcher.poll_once() == 1);
    REQUIRE(deliveries.size() == 2);
    REQUIRE(deliveries[1].size() == 1);
    CHECK(deliveries[1][0].pseudonym == anonymize("s3", "salt"));
}

TEST_CASE("watcher visits files in name order") {
    auto dir = fresh_dir("watch-order");
    std::vector<std::string> order;
    Watcher watcher(AttemptSource{AttemptSource::Kind::directory_watch, dir, 1}, "salt",
                    [&](const std::vector<QuizAttempt>& batch) {
                        for (const auto& a : batch) order.push_back(a.pseudonym);
                    });
    spit(dir / "b.jsonl", attempt_line("from-b"));
    spit(dir / "a.jsonl", attempt_line("from-a"));
    CHECK(watcher.poll_once() == 2);
    REQUIRE(order.size() == 2);
    CHECK(order[0] == anonymize("from-a", "salt"));
    CHECK(order[1] == anonymize("from-b", "salt"));
}

TEST_CASE("watcher reports parse errors without stopping the feed") {
    auto dir = fresh_dir("watch-errors");
    std::vector<std::string> errors;
    std::size_t delivered = 0;
    Watcher watcher(
        AttemptSource{AttemptSource::Kind::directory_watch, dir, 1}, "salt",
        [&](const std::vector<QuizAttempt>& batch) { delivered += batch.size(); }, nullptr,
        [&](const std::string& message) { errors.push_back(message); });

    spit(dir / "mixed.jsonl", attempt_line("good1") + "garbage line\n" + attempt_line("good2"));
    CHECK(watcher.poll_once() == 2);
    CHECK(delivered == 2);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("mixed.jsonl:2") != std::string::npos);
}

TEST_CASE("watcher needs an existing path and a sane interval") {
    auto dir = fresh_dir("watch-missing");
    CHECK(error_code_of([&] {
              Watcher w(AttemptSource{AttemptSource::Kind::directory_watch,
                                      dir / "nope", 1},
                        "salt", [](const std::vector<QuizAttempt>&) {});
          }) == ErrorCode::watch_path_missing);
    CHECK(error_code_of([&] {
              Watcher w(AttemptSource{AttemptSource::Kind::directory_watch, dir, 0},
                        "salt", [](const std::vector<QuizAttempt>&) {});
          }) == ErrorCode::config_error);
}

TEST_CASE("single-file sources watch just that file") {
    auto dir = fresh_dir("watch-file");
    spit(dir / "one.jsonl", attempt_line("s1"));
    std::size_t delivered = 0;
    Watcher watcher(AttemptSource{AttemptSource::Kind::file, dir / "one.jsonl", 1}, "salt",
                    [&](const std::vector<QuizAttempt>& batch) { delivered += batch.size(); });
    CHECK(watcher.poll_once() == 1);
    spit(dir / "two.jsonl", attempt_line("s2"));  // not the watched file
    CHECK(watcher.poll_once() == 0);
    CHECK(delivered == 1);
}

TEST_CASE("fixture attempts import cleanly against the fixture quiz") {
    Quiz quiz = load_quiz(repo_path("fixtures/quiz.json"));
    auto attempts = import_attempts(repo_path("fixtures/attempts.jsonl"), "fixture-salt", &quiz);
    CHECK(attempts.size() == 5);
    std::set<std::string> pseudonyms;
    std::size_t answers = 0;
    for (const auto& a : attempts) {
        pseudonyms.insert(a.pseudonym);
        answers += a.answers.size();
        CHECK(a.module_id == "netsec");
        CHECK(a.week == 1);
    }
    CHECK(pseudonyms.size() == 5);  // all distinct
    CHECK(answers == 50);           // each question answered exactly once
}
