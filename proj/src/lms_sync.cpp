#include "ragfb/lms_sync.hpp"

#include "ragfb/errors.hpp"
#include "ragfb/hashing.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <tuple>

namespace ragfb {

using nlohmann::json;

std::string anonymize(const std::string& student_id, const std::string& salt) {
    if (salt.empty()) throw Error(ErrorCode::empty_salt, "anonymisation salt is empty");
    return hmac_sha256_hex(salt, student_id).substr(0, 16);
}

namespace {

std::string at(const std::string& path, std::size_t line_no) {
    return path + ":" + std::to_string(line_no) + ": ";
}

QuizAttempt parse_attempt_line(const json& j, const std::string& path, std::size_t line_no,
                               const std::string& salt, const Quiz* quiz) {
    for (const char* field : {"student_id", "module_id", "quiz_serial", "attempt_no", "week",
                              "answers"})
        if (!j.contains(field))
            throw Error(ErrorCode::missing_field,
                        at(path, line_no) + "missing field \"" + field + "\"");

    QuizAttempt attempt;
    try {
        attempt.pseudonym = anonymize(j.at("student_id").get<std::string>(), salt);
        attempt.module_id = j.at("module_id").get<std::string>();
        attempt.quiz_serial = j.at("quiz_serial").get<int>();
        attempt.attempt_no = j.at("attempt_no").get<int>();
        attempt.week = j.at("week").get<int>();
        for (const auto& [question_id, value] : j.at("answers").items()) {
            if (value.is_string())
                attempt.answers[question_id] = value.get<std::string>();
            else if (value.is_number_integer())
                attempt.answers[question_id] = value.get<int>();
            else
                throw Error(ErrorCode::malformed_line,
                            at(path, line_no) + "answer for \"" + question_id +
                                "\" must be text or an option index");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::malformed_line, at(path, line_no) + e.what());
    }

    if (attempt.attempt_no < 1)
        throw Error(ErrorCode::malformed_line, at(path, line_no) + "attempt_no must be >= 1");
    if (attempt.week < 1 || attempt.week > 6)
        throw Error(ErrorCode::malformed_line, at(path, line_no) + "week must be within 1..6");
    if (quiz)
        for (const auto& [question_id, _] : attempt.answers)
            if (!quiz->find(question_id))
                throw Error(ErrorCode::unknown_question,
                            at(path, line_no) + "question \"" + question_id +
                                "\" is not in the quiz definition");
    return attempt;
}

void sort_attempts(std::vector<QuizAttempt>& attempts) {
    std::sort(attempts.begin(), attempts.end(), [](const QuizAttempt& a, const QuizAttempt& b) {
        return std::tie(a.quiz_serial, a.attempt_no, a.pseudonym) <
               std::tie(b.quiz_serial, b.attempt_no, b.pseudonym);
    });
}

bool blank(const std::string& line) {
    return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace

std::vector<QuizAttempt> parse_attempts_text(const std::string& jsonl,
                                             const std::string& source_name,
                                             const std::string& salt, const Quiz* quiz) {
    std::vector<QuizAttempt> attempts;
    std::istringstream in(jsonl);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (blank(line)) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::malformed_line, at(source_name, line_no) + e.what());
        }
        attempts.push_back(parse_attempt_line(j, source_name, line_no, salt, quiz));
    }
    sort_attempts(attempts);
    return attempts;
}

std::vector<QuizAttempt> import_attempts(const std::filesystem::path& path,
                                         const std::string& salt, const Quiz* quiz) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_attempts_text(ss.str(), path.string(), salt, quiz);
}

Watcher::Watcher(AttemptSource source, std::string salt, AttemptHandler handler, const Quiz* quiz,
                 WatchErrorHandler on_error)
    : source_(std::move(source)),
      salt_(std::move(salt)),
      handler_(std::move(handler)),
      quiz_(quiz),
      on_error_(std::move(on_error)) {
    if (!handler_) throw Error(ErrorCode::config_error, "watcher needs a handler");
    if (!std::filesystem::exists(source_.kind == AttemptSource::Kind::directory_watch
                                     ? source_.path
                                     : source_.path.parent_path()))
        throw Error(ErrorCode::watch_path_missing, source_.path.string() + " does not exist");
    if (source_.poll_interval_secs < 1)
        throw Error(ErrorCode::config_error, "poll interval must be >= 1 second");
}

std::size_t Watcher::process_file(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) return 0;  // transient: file may be mid-rename
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string content = ss.str();

    std::string file_hash = sha256_hex(content);
    if (!seen_file_hashes_.insert(file_hash).second) return 0;

    // Only lines not seen in any content version are delivered, so a file
    // that grows redelivers just its new attempts.
    std::vector<QuizAttempt> fresh;
    std::istringstream lines(content);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (blank(line)) continue;
        if (!seen_line_hashes_.insert(sha256_hex(line)).second) continue;
        try {
            fresh.push_back(
                parse_attempt_line(json::parse(line), file.string(), line_no, salt_, quiz_));
        } catch (const json::exception& e) {
            if (on_error_) on_error_(at(file.string(), line_no) + e.what());
            else std::cerr << "watch: " << at(file.string(), line_no) << e.what() << "\n";
        } catch (const Error& e) {
            if (on_error_) on_error_(e.what());
            else std::cerr << "watch: " << e.what() << "\n";
        }
    }
    if (fresh.empty()) return 0;
    sort_attempts(fresh);
    handler_(fresh);
    return fresh.size();
}

std::size_t Watcher::poll_once() {
    std::size_t delivered = 0;
    if (source_.kind == AttemptSource::Kind::file) {
        if (std::filesystem::exists(source_.path)) delivered += process_file(source_.path);
        return delivered;
    }
    if (!std::filesystem::exists(source_.path))
        throw Error(ErrorCode::watch_path_missing, source_.path.string() + " disappeared");

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(source_.path))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) delivered += process_file(file);
    return delivered;
}

void Watcher::run(const std::atomic<bool>& stop) {
    while (!stop.load()) {
        poll_once();
        for (int i = 0; i < source_.poll_interval_secs * 10 && !stop.load(); ++i)
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
    }
}

}  // namespace ragfb
