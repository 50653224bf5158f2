#include "ragfb/pipeline.hpp"

#include "ragfb/errors.hpp"
#include "ragfb/hashing.hpp"
#include "ragfb/lms_sync.hpp"
#include "ragfb/rubric_eval.hpp"
#include "ragfb/version.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>

namespace ragfb {

using nlohmann::json;

std::vector<CoursePage> load_course_export(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open course export " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_error, path.string() + ": " + e.what());
    }
    std::vector<CoursePage> pages;
    try {
        std::string module_id = doc.at("module_id").get<std::string>();
        for (const auto& jp : doc.at("pages")) {
            CoursePage page;
            page.module_id = module_id;
            page.week = jp.at("week").get<int>();
            page.title = jp.at("title").get<std::string>();
            page.html = jp.at("html").get<std::string>();
            if (page.week < 1 || page.week > 6)
                throw Error(ErrorCode::config_error,
                            path.string() + ": page \"" + page.title + "\" week must be 1..6");
            pages.push_back(std::move(page));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_error, path.string() + ": " + e.what());
    }
    return pages;
}

IngestResult ingest_course(const std::vector<CoursePage>& pages, const ChunkPolicy& policy) {
    IngestResult result;
    std::set<std::string> chunk_ids;
    for (const CoursePage& page : pages) {
        ++result.pages;
        std::string text = parse_html(page.html, &result.notes);
        for (const Section& section : split_sections(text, page.module_id, page.week)) {
            ++result.sections;
            if (!result.section_ids.insert(section.section_id).second)
                throw Error(ErrorCode::duplicate_id,
                            "section id " + section.section_id + " appears on more than one page");
            for (CourseChunk& chunk : chunk_section(section, policy)) {
                if (!chunk_ids.insert(chunk.chunk_id).second)
                    throw Error(ErrorCode::duplicate_id, "chunk id collision: " + chunk.chunk_id);
                result.chunks.push_back(std::move(chunk));
            }
        }
    }
    return result;
}

void save_chunks_jsonl(const std::filesystem::path& path,
                       const std::vector<CourseChunk>& chunks) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::io_failure, "cannot write " + path.string());
    for (const CourseChunk& c : chunks) {
        json j{
            {"chunk_id", c.chunk_id},         {"text", c.text},
            {"section_ref", c.section_ref},   {"token_estimate", c.token_estimate},
            {"char_start", c.char_start},     {"char_end", c.char_end},
        };
        out << j.dump() << "\n";
    }
}

void to_json(json& j, const FeedbackEnvelope& e) {
    j = json{
        {"envelope_id", e.envelope_id},
        {"pseudonym", e.pseudonym},
        {"module_id", e.module_id},
        {"quiz_serial", e.quiz_serial},
        {"attempt_no", e.attempt_no},
        {"question_id", e.question_id},
        {"record", e.record},
        {"created_at", e.created_at},
        {"pipeline_version", e.pipeline_version},
    };
}

void from_json(const json& j, FeedbackEnvelope& e) {
    e.envelope_id = j.at("envelope_id").get<std::string>();
    e.pseudonym = j.at("pseudonym").get<std::string>();
    e.module_id = j.at("module_id").get<std::string>();
    e.quiz_serial = j.at("quiz_serial").get<int>();
    e.attempt_no = j.at("attempt_no").get<int>();
    e.question_id = j.at("question_id").get<std::string>();
    e.record = j.at("record").get<FeedbackRecord>();
    e.created_at = j.at("created_at").get<std::string>();
    e.pipeline_version = j.at("pipeline_version").get<std::string>();
}

void to_json(json& j, const RunManifest& m) {
    j = json{
        {"config_hash", m.config_hash},
        {"pipeline_version", m.pipeline_version},
        {"started_at", m.started_at},
        {"attempts", m.attempts},
        {"envelopes_produced", m.envelopes_produced},
        {"deliveries_succeeded", m.deliveries_succeeded},
        {"deliveries_failed", m.deliveries_failed},
        {"question_failures", m.question_failures},
        {"delivery_failures", m.delivery_failures},
    };
}

std::string format_utc_ms(std::int64_t epoch_ms) {
    std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000);
    int ms = static_cast<int>(epoch_ms % 1000);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[80];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
    return buf;
}

namespace {

class FileSink final : public Sink {
public:
    explicit FileSink(std::filesystem::path outbox) : outbox_(std::move(outbox)) {}

    std::string name() const override { return "file:" + outbox_.string(); }

    void deliver(const FeedbackEnvelope& envelope) override {
        std::error_code ec;
        std::filesystem::path dir = outbox_ / envelope.pseudonym;
        std::filesystem::create_directories(dir, ec);
        if (ec)
            throw Error(ErrorCode::sink_unavailable,
                        "cannot create " + dir.string() + ": " + ec.message());
        std::filesystem::path final_path =
            dir / (std::to_string(envelope.quiz_serial) + "_" +
                   std::to_string(envelope.attempt_no) + "_" + envelope.question_id + ".json");
        std::filesystem::path tmp = final_path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            if (!out) throw Error(ErrorCode::sink_unavailable, "cannot write " + tmp.string());
            out << json(envelope).dump(2) << "\n";
            if (!out.good())
                throw Error(ErrorCode::sink_unavailable, "short write to " + tmp.string());
        }
        std::filesystem::rename(tmp, final_path, ec);
        if (ec)
            throw Error(ErrorCode::sink_unavailable,
                        "cannot publish " + final_path.string() + ": " + ec.message());
    }

private:
    std::filesystem::path outbox_;
};

class WebhookSink final : public Sink {
public:
    WebhookSink(std::string url, std::shared_ptr<HttpTransport> transport)
        : url_(std::move(url)),
          transport_(transport ? std::move(transport) : make_httplib_transport()) {}

    std::string name() const override { return "webhook:" + url_; }

    void deliver(const FeedbackEnvelope& envelope) override {
        HttpResponse resp = transport_->post_json(url_, json(envelope).dump(), {});
        if (resp.status < 200 || resp.status >= 300)
            throw Error(ErrorCode::sink_unavailable,
                        "webhook returned HTTP " + std::to_string(resp.status));
    }

private:
    std::string url_;
    std::shared_ptr<HttpTransport> transport_;
};

}  // namespace

std::shared_ptr<Sink> make_file_sink(const std::filesystem::path& outbox) {
    return std::make_shared<FileSink>(outbox);
}

std::shared_ptr<Sink> make_webhook_sink(const std::string& url,
                                        std::shared_ptr<HttpTransport> transport) {
    return std::make_shared<WebhookSink>(url, std::move(transport));
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<HttpTransport> webhook_transport,
                   std::shared_ptr<LlmGateway> gateway)
    : config_(std::move(config)) {
    if (config_.quiz_path.empty())
        throw Error(ErrorCode::config_error, "config is missing the quiz path");
    quiz_ = load_quiz(config_.quiz_path);

    if (config_.course_export.empty())
        throw Error(ErrorCode::config_error, "config is missing the course export path");
    auto pages = load_course_export(config_.course_export);
    IngestResult ingest = ingest_course(pages, config_.chunking);
    section_ids_ = ingest.section_ids;

    embedder_ = make_embedder(config_.embedder);

    index_ = std::make_shared<VectorIndex>(config_.metric);
    bool loaded = false;
    if (!config_.index_path.empty() && std::filesystem::exists(config_.index_path)) {
        try {
            VectorIndex cached = VectorIndex::load(config_.index_path);
            // A cache is only reusable when it covers exactly this course
            // snapshot, in the same order, under the same metric.
            bool matches = cached.metric() == config_.metric &&
                           cached.size() == ingest.chunks.size();
            for (std::size_t i = 0; matches && i < ingest.chunks.size(); ++i)
                matches = cached.ids()[i] == ingest.chunks[i].chunk_id;
            if (matches) {
                *index_ = std::move(cached);
                loaded = true;
            }
        } catch (const Error&) {
            // unreadable cache counts as no cache; rebuilt below
        }
    }
    if (!loaded) {
        for (const CourseChunk& chunk : ingest.chunks)
            index_->add(chunk.chunk_id, embedder_->embed(chunk.text));
        if (!config_.index_path.empty()) {
            std::error_code ec;
            std::filesystem::create_directories(config_.index_path.parent_path(), ec);
            index_->save(config_.index_path);
        }
    }
    store_ = std::make_shared<ChunkStore>();
    for (CourseChunk& chunk : ingest.chunks) store_->put(std::move(chunk));

    retriever_ = std::make_unique<Retriever>(embedder_, index_, store_);

    if (config_.template_dir.empty() || config_.exemplar_bank.empty())
        throw Error(ErrorCode::config_error, "config needs prompts.template_dir and "
                                             "prompts.exemplar_bank");
    renderer_ = std::make_unique<PromptRenderer>(PromptTemplates::load_dir(config_.template_dir),
                                                 load_exemplars(config_.exemplar_bank));

    if (gateway) {
        gateway_ = std::move(gateway);
    } else if (config_.gateway_mode == "replay") {
        gateway_ = make_replay_gateway(config_.store_path);
    } else {
        auto live = make_http_gateway(config_.gateway);
        gateway_ = config_.gateway_mode == "record"
                       ? make_record_gateway(std::move(live), config_.store_path)
                       : std::move(live);
    }
    if (!config_.audit_path.empty()) gateway_ = make_audited_gateway(gateway_, config_.audit_path);

    for (const SinkConfig& sc : config_.sinks)
        sinks_.push_back(sc.kind == SinkConfig::Kind::file
                             ? make_file_sink(sc.target)
                             : make_webhook_sink(sc.target, webhook_transport));

    manifest_.config_hash = config_.config_hash;
    manifest_.pipeline_version = kPipelineVersion;
}

std::string Pipeline::salt() const {
    const char* salt = std::getenv(config_.salt_env.c_str());
    if (!salt || !*salt)
        throw Error(ErrorCode::empty_salt,
                    "environment variable " + config_.salt_env + " is not set");
    return salt;
}

FeedbackEnvelope Pipeline::process_question(const QuizAttempt& attempt, const Question& question,
                                            const Answer& answer) {
    FeedbackEnvelope envelope;
    envelope.pseudonym = attempt.pseudonym;
    envelope.module_id = attempt.module_id;
    envelope.quiz_serial = attempt.quiz_serial;
    envelope.attempt_no = attempt.attempt_no;
    envelope.question_id = question.question_id;
    envelope.envelope_id = attempt.pseudonym + "-" + std::to_string(attempt.quiz_serial) + "-" +
                           std::to_string(attempt.attempt_no) + "-" + question.question_id;
    envelope.pipeline_version = kPipelineVersion;

    RenderedPrompt prompt;
    int marks_max = question.marks_max;
    if (question.kind == QuestionKind::free_text) {
        const std::string* text = std::get_if<std::string>(&answer);
        if (!text)
            throw Error(ErrorCode::malformed_line,
                        "free-text question answered with an option index");
        // The student's answer is part of the retrieval query so the context
        // follows their gaps, not just the question topic.
        ContextBundle context = retriever_->retrieve_context(
            build_query(question.text, *text), config_.retrieval_k, config_.token_budget);
        prompt = renderer_->render_free_text(question.text, *text, marks_max, context);
    } else {
        const int* idx = std::get_if<int>(&answer);
        if (!idx)
            throw Error(ErrorCode::malformed_line, "mcq question answered with text");
        if (*idx < 0 || *idx >= static_cast<int>(question.options.size()))
            throw Error(ErrorCode::selection_not_in_options,
                        "selected option " + std::to_string(*idx) + " is out of range");
        ContextBundle context = retriever_->retrieve_context(
            build_query(question.text, std::nullopt), config_.retrieval_k, config_.token_budget);
        prompt = renderer_->render_mcq(question.text, question.options,
                                       question.options[static_cast<std::size_t>(*idx)], context);
    }

    CompletionRequest request;
    request.system_text = prompt.system_text;
    request.user_text = prompt.user_text;
    request.temperature = config_.temperature;
    request.model_name = config_.gateway.model_name;
    std::string completion = gateway_->complete(request);

    envelope.record = question.kind == QuestionKind::free_text
                          ? parse_free_text_feedback(completion, marks_max)
                          : parse_mcq_feedback(completion);
    envelope.record.question_id = question.question_id;
    for (const Issue& issue : validate_record(envelope.record, question, section_ids_))
        envelope.record.warnings.push_back(std::string(to_string(issue.kind)) + ": " +
                                           issue.message);
    return envelope;
}

std::vector<FeedbackEnvelope> Pipeline::run(const std::vector<QuizAttempt>& attempts) {
    run_start_ms_ = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::system_clock::now().time_since_epoch())
                        .count();
    manifest_.started_at = format_utc_ms(run_start_ms_);
    manifest_.attempts = attempts.size();
    manifest_.envelopes_produced = 0;
    manifest_.deliveries_succeeded = 0;
    manifest_.deliveries_failed = 0;
    manifest_.question_failures.clear();
    manifest_.delivery_failures.clear();

    std::vector<FeedbackEnvelope> envelopes;
    for (const QuizAttempt& attempt : attempts) {
        for (const auto& [question_id, answer] : attempt.answers) {
            const Question* question = quiz_.find(question_id);
            std::string envelope_id = attempt.pseudonym + "-" +
                                      std::to_string(attempt.quiz_serial) + "-" +
                                      std::to_string(attempt.attempt_no) + "-" + question_id;
            if (!question) {
                manifest_.question_failures.push_back(envelope_id +
                                                      ": question not in quiz definition");
                continue;
            }
            try {
                FeedbackEnvelope envelope = process_question(attempt, *question, answer);
                // Timestamps advance by one millisecond per envelope so a
                // run log orders identically however fast the batch ran.
                envelope.created_at = format_utc_ms(
                    run_start_ms_ + static_cast<std::int64_t>(envelopes.size()));
                envelopes.push_back(std::move(envelope));
            } catch (const Error& e) {
                manifest_.question_failures.push_back(envelope_id + ": " + e.what());
            }
        }
    }
    manifest_.envelopes_produced = envelopes.size();

    dispatch_all(envelopes);
    if (!config_.manifest_path.empty()) write_manifest();
    return envelopes;
}

void Pipeline::dispatch_all(const std::vector<FeedbackEnvelope>& envelopes) {
    struct Retry {
        const FeedbackEnvelope* envelope;
        Sink* sink;
    };
    std::vector<Retry> requeue;

    for (const FeedbackEnvelope& envelope : envelopes) {
        for (const auto& sink : sinks_) {
            bool delivered = false;
            // One immediate retry, then a single re-queue after the batch.
            for (int attempt = 0; attempt < 2 && !delivered; ++attempt) {
                try {
                    sink->deliver(envelope);
                    delivered = true;
                } catch (const Error&) {
                }
            }
            if (delivered)
                ++manifest_.deliveries_succeeded;
            else
                requeue.push_back({&envelope, sink.get()});
        }
    }
    for (const Retry& r : requeue) {
        try {
            r.sink->deliver(*r.envelope);
            ++manifest_.deliveries_succeeded;
        } catch (const Error& e) {
            ++manifest_.deliveries_failed;
            manifest_.delivery_failures.push_back(r.envelope->envelope_id + " -> " +
                                                  r.sink->name() + ": " + e.what());
        }
    }
}

void Pipeline::write_manifest() const {
    std::error_code ec;
    std::filesystem::create_directories(config_.manifest_path.parent_path(), ec);
    std::ofstream out(config_.manifest_path, std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::io_failure, "cannot write " + config_.manifest_path.string());
    out << json(manifest_).dump(2) << "\n";
}

nlohmann::json Pipeline::evaluate(const std::vector<FeedbackEnvelope>& envelopes,
                                  const std::filesystem::path& gold_path,
                                  const std::filesystem::path& judgments_path) const {
    auto gold = load_gold(gold_path);
    auto judgments = load_adjudications(judgments_path);

    std::map<std::string, const GoldAnswer*> gold_by_id;
    for (const auto& g : gold) gold_by_id[g.question_id] = &g;
    std::map<std::string, const Adjudication*> judgment_by_id;
    for (const auto& a : judgments) judgment_by_id[a.question_id] = &a;

    std::vector<EfficacyScore> scores;
    std::vector<std::string> skipped;
    for (const FeedbackEnvelope& envelope : envelopes) {
        if (envelope.record.mcq_result.has_value()) continue;  // rubric is free-text only
        auto g = gold_by_id.find(envelope.question_id);
        auto a = judgment_by_id.find(envelope.question_id);
        if (g == gold_by_id.end() || a == judgment_by_id.end()) {
            skipped.push_back(envelope.question_id);
            continue;
        }
        scores.push_back(score_free_text(envelope.record, *g->second, *a->second));
    }
    json out;
    out["scores"] = scores;
    out["skipped"] = skipped;
    out["report"] = cohort_report(scores);
    return out;
}

}  // namespace ragfb
