#pragma once

#include "ragfb/config.hpp"
#include "ragfb/feedback_core.hpp"
#include "ragfb/llm_gateway.hpp"
#include "ragfb/prompt_kit.hpp"
#include "ragfb/retrieval.hpp"
#include "ragfb/vector_index.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ragfb {

/// One course export document: {module_id, pages: [{week, title, html}]}.
std::vector<CoursePage> load_course_export(const std::filesystem::path& path);

struct IngestResult {
    std::vector<CourseChunk> chunks;
    std::set<std::string> section_ids;
    std::size_t pages = 0;
    std::size_t sections = 0;
    std::vector<std::string> notes;  // dropped tables/images etc.
};

/// Parses, sections and chunks a whole course. Chunk ids must stay unique
/// across pages; a collision (two pages sharing a section id) raises
/// DuplicateId rather than silently renaming.
IngestResult ingest_course(const std::vector<CoursePage>& pages, const ChunkPolicy& policy);

/// One JSON object per line; the format ChunkStore::load_jsonl reads back.
void save_chunks_jsonl(const std::filesystem::path& path,
                       const std::vector<CourseChunk>& chunks);

struct FeedbackEnvelope {
    std::string envelope_id;  // pseudonym-quiz-attempt-question, unique per run
    std::string pseudonym;
    std::string module_id;
    int quiz_serial = 0;
    int attempt_no = 0;
    std::string question_id;
    FeedbackRecord record;
    std::string created_at;  // UTC, monotone within a run
    std::string pipeline_version;
};

void to_json(nlohmann::json& j, const FeedbackEnvelope& e);
void from_json(const nlohmann::json& j, FeedbackEnvelope& e);

/// Delivery target. deliver() throws SinkUnavailable; the pipeline retries
/// once immediately and re-queues once more before recording a failure.
class Sink {
public:
    virtual ~Sink() = default;
    virtual std::string name() const = 0;
    virtual void deliver(const FeedbackEnvelope& envelope) = 0;
};

/// Writes <outbox>/<pseudonym>/<quiz_serial>_<attempt_no>_<question_id>.json
/// atomically (temp file + rename).
std::shared_ptr<Sink> make_file_sink(const std::filesystem::path& outbox);

/// POSTs envelope JSON; any non-2xx status is SinkUnavailable.
std::shared_ptr<Sink> make_webhook_sink(const std::string& url,
                                        std::shared_ptr<HttpTransport> transport = nullptr);

struct RunManifest {
    std::string config_hash;
    std::string pipeline_version;
    std::string started_at;
    std::size_t attempts = 0;
    std::size_t envelopes_produced = 0;
    std::size_t deliveries_succeeded = 0;
    std::size_t deliveries_failed = 0;
    std::vector<std::string> question_failures;   // "envelope_id: reason"
    std::vector<std::string> delivery_failures;   // "envelope_id -> sink: reason"
};

void to_json(nlohmann::json& j, const RunManifest& m);

/// Owns the full dataflow: ingest -> index -> retrieve -> prompt -> complete
/// -> parse -> dispatch. Configuration problems surface from the constructor,
/// before any completion call; per-question failures during run() are
/// recorded in the manifest and do not abort the batch.
class Pipeline {
public:
    /// webhook_transport, if given, is used for webhook sinks; gateway, if
    /// given, replaces the one the config describes. Both are test seams.
    explicit Pipeline(PipelineConfig config,
                      std::shared_ptr<HttpTransport> webhook_transport = nullptr,
                      std::shared_ptr<LlmGateway> gateway = nullptr);

    std::vector<FeedbackEnvelope> run(const std::vector<QuizAttempt>& attempts);

    const RunManifest& manifest() const { return manifest_; }
    const Quiz& quiz() const { return quiz_; }
    const VectorIndex& index() const { return *index_; }
    const ChunkStore& chunks() const { return *store_; }
    const std::set<std::string>& section_ids() const { return section_ids_; }
    std::string gateway_mode() const { return gateway_->mode(); }
    std::string salt() const;  // resolved from the configured env var

    /// Scores every free-text envelope from the given run against gold +
    /// judgments files (used by the service's /evaluate endpoint).
    nlohmann::json evaluate(const std::vector<FeedbackEnvelope>& envelopes,
                            const std::filesystem::path& gold_path,
                            const std::filesystem::path& judgments_path) const;

private:
    FeedbackEnvelope process_question(const QuizAttempt& attempt, const Question& question,
                                      const Answer& answer);
    void dispatch_all(const std::vector<FeedbackEnvelope>& envelopes);
    void write_manifest() const;

    PipelineConfig config_;
    Quiz quiz_;
    std::shared_ptr<ChunkStore> store_;
    std::set<std::string> section_ids_;
    std::shared_ptr<Embedder> embedder_;
    std::shared_ptr<VectorIndex> index_;
    std::unique_ptr<Retriever> retriever_;
    std::unique_ptr<PromptRenderer> renderer_;
    std::shared_ptr<LlmGateway> gateway_;
    std::vector<std::shared_ptr<Sink>> sinks_;
    RunManifest manifest_;
    std::int64_t run_start_ms_ = 0;
};

/// "2026-08-23T10:15:30.123Z" for a Unix epoch in milliseconds.
std::string format_utc_ms(std::int64_t epoch_ms);

}  // namespace ragfb
