#include "ragfb/errors.hpp"

namespace ragfb {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::empty_document: return "EmptyDocument";
        case ErrorCode::empty_text: return "EmptyText";
        case ErrorCode::remote_unavailable: return "RemoteUnavailable";
        case ErrorCode::dimension_mismatch: return "DimensionMismatch";
        case ErrorCode::duplicate_id: return "DuplicateId";
        case ErrorCode::empty_index: return "EmptyIndex";
        case ErrorCode::io_failure: return "IoFailure";
        case ErrorCode::corrupt_index: return "CorruptIndex";
        case ErrorCode::empty_question: return "EmptyQuestion";
        case ErrorCode::missing_kind: return "MissingKind";
        case ErrorCode::malformed_exemplar: return "MalformedExemplar";
        case ErrorCode::malformed_template: return "MalformedTemplate";
        case ErrorCode::selection_not_in_options: return "SelectionNotInOptions";
        case ErrorCode::timeout: return "Timeout";
        case ErrorCode::rate_limited: return "RateLimited";
        case ErrorCode::malformed_response: return "MalformedResponse";
        case ErrorCode::mock_miss: return "MockMiss";
        case ErrorCode::replay_miss: return "ReplayMiss";
        case ErrorCode::no_mark_line: return "NoMarkLine";
        case ErrorCode::no_classification: return "NoClassification";
        case ErrorCode::mark_out_of_range: return "MarkOutOfRange";
        case ErrorCode::no_result_line: return "NoResultLine";
        case ErrorCode::question_mismatch: return "QuestionMismatch";
        case ErrorCode::not_mcq: return "NotMcq";
        case ErrorCode::empty_cohort: return "EmptyCohort";
        case ErrorCode::malformed_line: return "MalformedLine";
        case ErrorCode::missing_field: return "MissingField";
        case ErrorCode::unknown_question: return "UnknownQuestion";
        case ErrorCode::empty_salt: return "EmptySalt";
        case ErrorCode::watch_path_missing: return "WatchPathMissing";
        case ErrorCode::sink_unavailable: return "SinkUnavailable";
        case ErrorCode::config_error: return "ConfigError";
    }
    return "UnknownError";
}

}  // namespace ragfb
