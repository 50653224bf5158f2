"""Course-grounded quiz feedback: ingest, retrieval, grading, dispatch."""

from ._ragfb import (
    CourseChunk,
    FeedbackRecord,
    PipelineError,
    SearchHit,
    Section,
    VectorIndex,
    __version__,
    anonymize,
    chunk_section,
    estimate_tokens,
    evaluate_run,
    ingest_course_export,
    local_embed,
    parse_free_text_feedback,
    parse_html,
    parse_mcq_feedback,
    run_feedback,
    split_sections,
)

__all__ = [
    "CourseChunk",
    "FeedbackRecord",
    "PipelineError",
    "SearchHit",
    "Section",
    "VectorIndex",
    "__version__",
    "anonymize",
    "chunk_section",
    "estimate_tokens",
    "evaluate_run",
    "ingest_course_export",
    "local_embed",
    "parse_free_text_feedback",
    "parse_html",
    "parse_mcq_feedback",
    "run_feedback",
    "split_sections",
]
