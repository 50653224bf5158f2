#pragma once

#include <stdexcept>
#include <string>

namespace ragfb {

// Every failure mode the library can signal. Tests match on the code, not
// the message text.
enum class ErrorCode {
    // content_ingest
    empty_document,
    // embeddings
    empty_text,
    remote_unavailable,
    dimension_mismatch,
    // vector_index
    duplicate_id,
    empty_index,
    io_failure,
    corrupt_index,
    // retrieval
    empty_question,
    // prompt_kit
    missing_kind,
    malformed_exemplar,
    malformed_template,
    selection_not_in_options,
    // llm_gateway
    timeout,
    rate_limited,
    malformed_response,
    mock_miss,
    replay_miss,
    // feedback_core
    no_mark_line,
    no_classification,
    mark_out_of_range,
    no_result_line,
    // rubric_eval
    question_mismatch,
    not_mcq,
    empty_cohort,
    // lms_sync
    malformed_line,
    missing_field,
    unknown_question,
    empty_salt,
    watch_path_missing,
    // service_cli
    sink_unavailable,
    config_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ragfb
