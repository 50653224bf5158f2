#include "ragfb/config.hpp"
#include "ragfb/content_ingest.hpp"
#include "ragfb/embeddings.hpp"
#include "ragfb/errors.hpp"
#include "ragfb/feedback_core.hpp"
#include "ragfb/lms_sync.hpp"
#include "ragfb/pipeline.hpp"
#include "ragfb/retrieval.hpp"
#include "ragfb/rubric_eval.hpp"
#include "ragfb/service.hpp"
#include "ragfb/vector_index.hpp"
#include "ragfb/version.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <thread>

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

// Every config value is overridable by a flag of the same dotted name; the
// flags below just funnel into key=value overrides applied in order.
void add_config_options(CLI::App* cmd, std::string& config_path,
                        std::vector<std::string>& overrides) {
    cmd->add_option("--config", config_path, "pipeline config JSON file")->required();
    cmd->add_option("--set", overrides, "override a config value, e.g. --set retrieval.k=8");
    static const char* dotted[] = {
        "course_export", "quiz", "chunking.target_chars", "chunking.overlap_chars",
        "embedder.provider", "embedder.dim", "embedder.endpoint_url", "embedder.model_name",
        "embedder.api_key_env", "embedder.normalize", "embedder.max_batch", "index.path",
        "index.metric", "retrieval.k", "retrieval.token_budget", "prompts.template_dir",
        "prompts.exemplar_bank", "gateway.mode", "gateway.endpoint_url", "gateway.model_name",
        "gateway.api_key_env", "gateway.temperature", "gateway.store_path", "gateway.audit_path",
        "salt_env", "manifest_path",
    };
    for (const char* key : dotted) {
        cmd->add_option_function<std::string>(
            std::string("--") + key,
            [&overrides, key](const std::string& value) {
                overrides.push_back(std::string(key) + "=" + value);
            },
            std::string("override ") + key);
    }
}

std::string resolve_salt(const std::string& env_name) {
    const char* salt = std::getenv(env_name.c_str());
    if (!salt || !*salt)
        throw ragfb::Error(ragfb::ErrorCode::empty_salt,
                           "environment variable " + env_name + " is not set");
    return salt;
}

int cmd_ingest(const std::string& course, const std::string& out, std::size_t target,
               std::size_t overlap) {
    auto pages = ragfb::load_course_export(course);
    ragfb::ChunkPolicy policy{target, overlap};
    ragfb::IngestResult result = ragfb::ingest_course(pages, policy);
    ragfb::save_chunks_jsonl(out, result.chunks);
    for (const std::string& note : result.notes) std::cerr << "note: " << note << "\n";
    std::cout << "ingested " << result.pages << " pages, " << result.sections << " sections, "
              << result.chunks.size() << " chunks -> " << out << "\n";
    return kExitOk;
}

int cmd_index_build(const std::string& chunks_path, const std::string& out, std::size_t dim,
                    const std::string& metric_name) {
    auto chunks = ragfb::load_chunks_jsonl(chunks_path);
    auto embedder = ragfb::make_local_embedder(dim);
    ragfb::VectorIndex index(ragfb::metric_from_string(metric_name));
    for (const auto& chunk : chunks) index.add(chunk.chunk_id, embedder->embed(chunk.text));
    index.save(out);
    std::cout << "indexed " << index.size() << " chunks (dim " << index.dim() << ", "
              << ragfb::to_string(index.metric()) << ") -> " << out << "\n";
    return kExitOk;
}

int cmd_index_query(const std::string& idx_path, const std::string& text, int k,
                    const std::string& chunks_path) {
    ragfb::VectorIndex index = ragfb::VectorIndex::load(idx_path);
    auto embedder = ragfb::make_local_embedder(index.dim());
    auto hits = index.search(embedder->embed(text), k);

    ragfb::ChunkStore store;
    if (!chunks_path.empty()) store = ragfb::ChunkStore::load_jsonl(chunks_path);

    json out = json::array();
    for (const auto& hit : hits) {
        json j{{"rank", hit.rank}, {"chunk_id", hit.chunk_id}, {"score", hit.score}};
        if (store.contains(hit.chunk_id)) {
            j["section_ref"] = store.get(hit.chunk_id).section_ref;
            j["text"] = store.get(hit.chunk_id).text;
        }
        out.push_back(std::move(j));
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_feedback_run(const std::string& config_path, const std::vector<std::string>& overrides,
                     const std::string& attempts_path) {
    ragfb::PipelineConfig config = ragfb::load_config(config_path, overrides);
    ragfb::Pipeline pipeline(config);
    auto attempts = ragfb::import_attempts(attempts_path, resolve_salt(config.salt_env),
                                           &pipeline.quiz());
    auto envelopes = pipeline.run(attempts);

    const ragfb::RunManifest& manifest = pipeline.manifest();
    std::cout << "attempts " << manifest.attempts << ", envelopes "
              << manifest.envelopes_produced << ", deliveries "
              << manifest.deliveries_succeeded << " ok / " << manifest.deliveries_failed
              << " failed\n";
    for (const auto& f : manifest.question_failures) std::cerr << "question failed: " << f << "\n";
    for (const auto& f : manifest.delivery_failures) std::cerr << "delivery failed: " << f << "\n";

    bool partial = !manifest.question_failures.empty() || manifest.deliveries_failed > 0;
    return partial ? kExitPartial : kExitOk;
}

int cmd_evaluate(const std::string& records_path, const std::string& gold_path,
                 const std::string& judgments_path, const std::string& report_dir) {
    std::ifstream in(records_path);
    if (!in)
        throw ragfb::Error(ragfb::ErrorCode::io_failure, "cannot open " + records_path);

    std::map<std::string, ragfb::FeedbackRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto record = json::parse(line).get<ragfb::FeedbackRecord>();
            records[record.question_id] = std::move(record);
        } catch (const json::exception& e) {
            throw ragfb::Error(ragfb::ErrorCode::malformed_line,
                               records_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }

    auto gold = ragfb::load_gold(gold_path);
    auto judgments = ragfb::load_adjudications(judgments_path);
    std::map<std::string, const ragfb::Adjudication*> judgment_by_id;
    for (const auto& a : judgments) judgment_by_id[a.question_id] = &a;

    std::vector<ragfb::EfficacyScore> scores;
    std::vector<std::string> skipped;
    for (const auto& g : gold) {
        auto r = records.find(g.question_id);
        auto a = judgment_by_id.find(g.question_id);
        if (r == records.end() || a == judgment_by_id.end()) {
            skipped.push_back(g.question_id);
            continue;
        }
        scores.push_back(ragfb::score_free_text(r->second, g, *a->second));
    }
    ragfb::CohortReport report = ragfb::cohort_report(scores);

    std::filesystem::create_directories(report_dir);
    {
        json doc{{"report", report}, {"scores", scores}, {"skipped", skipped}};
        std::ofstream out(std::filesystem::path(report_dir) / "report.json");
        out << doc.dump(2) << "\n";
    }
    {
        std::ofstream out(std::filesystem::path(report_dir) / "report.txt");
        out << ragfb::render_report_text(report);
    }
    std::cout << ragfb::render_report_text(report);
    if (!skipped.empty()) {
        std::cerr << "skipped (no record or judgment):";
        for (const auto& id : skipped) std::cerr << " " << id;
        std::cerr << "\n";
        return kExitPartial;
    }
    return kExitOk;
}

int cmd_serve(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& host, int port) {
    ragfb::PipelineConfig config = ragfb::load_config(config_path, overrides);
    auto pipeline = std::make_shared<ragfb::Pipeline>(config);
    ragfb::FeedbackService service(pipeline);
    int bound = service.start(host, port);
    std::cout << "listening on " << host << ":" << bound << " (index "
              << pipeline->index().size() << " chunks, gateway " << pipeline->gateway_mode()
              << ")\n";
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    service.stop();
    return kExitOk;
}

int cmd_watch(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& dir, int interval) {
    ragfb::PipelineConfig config = ragfb::load_config(config_path, overrides);
    auto pipeline = std::make_shared<ragfb::Pipeline>(config);
    std::string salt = resolve_salt(config.salt_env);

    ragfb::AttemptSource source;
    source.kind = ragfb::AttemptSource::Kind::directory_watch;
    source.path = dir;
    source.poll_interval_secs = interval;

    ragfb::Watcher watcher(
        source, salt,
        [&pipeline](const std::vector<ragfb::QuizAttempt>& attempts) {
            auto envelopes = pipeline->run(attempts);
            std::cout << "processed " << attempts.size() << " attempts -> "
                      << envelopes.size() << " envelopes\n";
            for (const auto& f : pipeline->manifest().question_failures)
                std::cerr << "question failed: " << f << "\n";
        },
        &pipeline->quiz());

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "watching " << dir << " every " << interval << "s\n";
    watcher.run(g_stop);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"course feedback pipeline"};
    app.set_version_flag("--version", ragfb::kPipelineVersion);
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse a course export into chunks");
    std::string ingest_course_path, ingest_out;
    std::size_t ingest_target = 800, ingest_overlap = 200;
    ingest->add_option("--course", ingest_course_path, "course export JSON")->required();
    ingest->add_option("--out", ingest_out, "output chunks JSONL")->required();
    ingest->add_option("--target-chars", ingest_target, "chunk size target");
    ingest->add_option("--overlap-chars", ingest_overlap, "overlap between chunks");

    // index build / query
    auto* index = app.add_subcommand("index", "vector index operations");
    index->require_subcommand(1);
    auto* build = index->add_subcommand("build", "embed chunks and build an index");
    std::string build_chunks, build_out, build_metric = "euclidean";
    std::size_t build_dim = 256;
    build->add_option("--chunks", build_chunks, "chunks JSONL")->required();
    build->add_option("--out", build_out, "output index file")->required();
    build->add_option("--dim", build_dim, "embedding dimension");
    build->add_option("--metric", build_metric, "euclidean or inner_product");

    auto* query = index->add_subcommand("query", "search an index");
    std::string query_idx, query_text, query_chunks;
    int query_k = 4;
    query->add_option("--idx", query_idx, "index file")->required();
    query->add_option("--text", query_text, "query text")->required();
    query->add_option("--k", query_k, "hits to return");
    query->add_option("--chunks", query_chunks, "chunks JSONL to show hit texts");

    // feedback run
    auto* feedback = app.add_subcommand("feedback", "feedback pipeline");
    feedback->require_subcommand(1);
    auto* run = feedback->add_subcommand("run", "run the pipeline over an attempts file");
    std::string run_config, run_attempts;
    std::vector<std::string> run_overrides;
    add_config_options(run, run_config, run_overrides);
    run->add_option("--attempts", run_attempts, "attempts JSONL")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score records against gold + judgments");
    std::string eval_records, eval_gold, eval_judgments, eval_report;
    evaluate->add_option("--records", eval_records, "feedback records JSONL")->required();
    evaluate->add_option("--gold", eval_gold, "gold answers JSONL")->required();
    evaluate->add_option("--judgments", eval_judgments, "adjudications JSONL")->required();
    evaluate->add_option("--report", eval_report, "report output directory")->required();

    // serve
    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    std::string serve_config, serve_host = "127.0.0.1";
    std::vector<std::string> serve_overrides;
    int serve_port = 8080;
    add_config_options(serve, serve_config, serve_overrides);
    serve->add_option("--host", serve_host, "bind address");
    serve->add_option("--port", serve_port, "port (0 picks a free one)");

    // watch
    auto* watch = app.add_subcommand("watch", "poll a directory for attempts files");
    std::string watch_config, watch_dir;
    std::vector<std::string> watch_overrides;
    int watch_interval = 5;
    add_config_options(watch, watch_config, watch_overrides);
    watch->add_option("--dir", watch_dir, "directory to poll")->required();
    watch->add_option("--interval", watch_interval, "poll interval, seconds");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest)
            return cmd_ingest(ingest_course_path, ingest_out, ingest_target, ingest_overlap);
        if (*build) return cmd_index_build(build_chunks, build_out, build_dim, build_metric);
        if (*query) return cmd_index_query(query_idx, query_text, query_k, query_chunks);
        if (*run) return cmd_feedback_run(run_config, run_overrides, run_attempts);
        if (*evaluate) return cmd_evaluate(eval_records, eval_gold, eval_judgments, eval_report);
        if (*serve) return cmd_serve(serve_config, serve_overrides, serve_host, serve_port);
        if (*watch) return cmd_watch(watch_config, watch_overrides, watch_dir, watch_interval);
    } catch (const ragfb::Error& e) {
        std::cerr << "error [" << ragfb::to_string(e.code()) << "]: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return kExitConfig;
}
