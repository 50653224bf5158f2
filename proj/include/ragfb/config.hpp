#pragma once

#include "ragfb/content_ingest.hpp"
#include "ragfb/embeddings.hpp"
#include "ragfb/llm_gateway.hpp"
#include "ragfb/vector_index.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ragfb {

struct SinkConfig {
    enum class Kind { file, webhook };
    Kind kind = Kind::file;
    std::string target;  // outbox directory or webhook URL
};

struct PipelineConfig {
    std::filesystem::path course_export;
    std::filesystem::path quiz_path;
    ChunkPolicy chunking;
    EmbedderConfig embedder;
    std::filesystem::path index_path;  // optional cache; empty = build in memory
    Metric metric = Metric::euclidean;
    int retrieval_k = 4;
    int token_budget = 1500;
    std::filesystem::path template_dir;
    std::filesystem::path exemplar_bank;

    std::string gateway_mode = "replay";  // live | record | replay
    GatewayConfig gateway;
    double temperature = 0.0;
    std::filesystem::path store_path;  // record/replay store
    std::filesystem::path audit_path;  // optional audit JSONL

    std::vector<SinkConfig> sinks;
    std::string salt_env = "RAGFB_SALT";
    std::filesystem::path manifest_path;

    // SHA-256 of the effective JSON document (file plus overrides); ties a
    // manifest to the exact configuration that produced it.
    std::string config_hash;
};

/// Sets a dotted path inside a JSON document, e.g. "retrieval.k" = "8" or
/// "sinks.0.outbox" = "out". Values parse as JSON when possible, otherwise
/// as strings. Throws ConfigError for unreachable paths.
void apply_override(nlohmann::json& doc, const std::string& dotted, const std::string& value);

/// Loads the config file, applies dotted overrides in order and validates:
/// record/replay gateway modes need a store path, live mode needs endpoint
/// and model, and at least one sink must be configured.
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides = {});

/// Same validation applied to an in-memory document (tests, service).
PipelineConfig config_from_json(const nlohmann::json& doc,
                                const std::filesystem::path& base_dir = {});

}  // namespace ragfb
