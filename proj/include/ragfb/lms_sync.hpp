#pragma once

#include "ragfb/feedback_core.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace ragfb {

/// Keyed-hash pseudonym: 16 hex chars, stable per (student_id, salt), leaks
/// no bytes of the source id. Throws EmptySalt.
std::string anonymize(const std::string& student_id, const std::string& salt);

/// Reads a Moodle-webservice-shaped attempts JSONL file. Each line carries
/// student_id, module_id, quiz_serial, attempt_no, week and an answers map
/// (string for free text, option index for MCQ). Identities are anonymised
/// on the way in; the quiz, when given, is used to reject unknown question
/// ids. Result is sorted by (quiz_serial, attempt_no, pseudonym).
/// Errors carry path:line (MalformedLine, MissingField, UnknownQuestion).
std::vector<QuizAttempt> import_attempts(const std::filesystem::path& path,
                                         const std::string& salt, const Quiz* quiz = nullptr);

/// Same contract over in-memory JSONL text; source_name labels errors.
std::vector<QuizAttempt> parse_attempts_text(const std::string& jsonl,
                                             const std::string& source_name,
                                             const std::string& salt,
                                             const Quiz* quiz = nullptr);

struct AttemptSource {
    enum class Kind { file, directory_watch };
    Kind kind = Kind::directory_watch;
    std::filesystem::path path;
    int poll_interval_secs = 5;
};

using AttemptHandler = std::function<void(const std::vector<QuizAttempt>&)>;
using WatchErrorHandler = std::function<void(const std::string&)>;

/// Polls a directory (or single file) for attempts files. Each file content
/// version is imported once; when a file changes, only lines not seen before
/// are redelivered. Files are visited in name order and each delivery is
/// sorted, so processing order does not depend on filesystem enumeration.
class Watcher {
public:
    Watcher(AttemptSource source, std::string salt, AttemptHandler handler,
            const Quiz* quiz = nullptr, WatchErrorHandler on_error = nullptr);

    /// One scan; returns the number of attempts delivered.
    std::size_t poll_once();

    /// Polls until stop becomes true.
    void run(const std::atomic<bool>& stop);

private:
    std::size_t process_file(const std::filesystem::path& file);

    AttemptSource source_;
    std::string salt_;
    AttemptHandler handler_;
    const Quiz* quiz_;
    WatchErrorHandler on_error_;
    std::set<std::string> seen_file_hashes_;
    std::set<std::string> seen_line_hashes_;
};

}  // namespace ragfb
