#include "ragfb/config.hpp"

#include "ragfb/errors.hpp"
#include "ragfb/hashing.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <fstream>

namespace ragfb {

using nlohmann::json;

namespace {

std::vector<std::string> split_dotted(const std::string& dotted) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : dotted) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    for (const auto& p : parts)
        if (p.empty())
            throw Error(ErrorCode::config_error, "bad override key \"" + dotted + "\"");
    return parts;
}

bool is_number(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

void apply_override(json& doc, const std::string& dotted, const std::string& value) {
    auto parts = split_dotted(dotted);
    json* node = &doc;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        const std::string& part = parts[i];
        if (node->is_array()) {
            if (!is_number(part))
                throw Error(ErrorCode::config_error,
                            "\"" + dotted + "\": \"" + part + "\" must index an array");
            std::size_t idx = std::stoul(part);
            if (idx >= node->size())
                throw Error(ErrorCode::config_error,
                            "\"" + dotted + "\": index " + part + " is out of range");
            node = &(*node)[idx];
        } else {
            if (!node->is_object()) *node = json::object();
            node = &(*node)[part];
        }
    }
    // Values that parse as JSON keep their type (numbers, booleans, arrays);
    // bare words become strings.
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::exception&) {
        parsed = value;
    }
    const std::string& leaf = parts.back();
    if (node->is_array()) {
        if (!is_number(leaf))
            throw Error(ErrorCode::config_error,
                        "\"" + dotted + "\": \"" + leaf + "\" must index an array");
        std::size_t idx = std::stoul(leaf);
        if (idx >= node->size())
            throw Error(ErrorCode::config_error,
                        "\"" + dotted + "\": index " + leaf + " is out of range");
        (*node)[idx] = parsed;
    } else {
        if (!node->is_object()) *node = json::object();
        (*node)[leaf] = parsed;
    }
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    if (path.is_absolute() || base.empty()) return path;
    return base / path;
}

}  // namespace

PipelineConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
    PipelineConfig cfg;
    try {
        cfg.course_export = resolve(base_dir, doc.value("course_export", std::string{}));
        cfg.quiz_path = resolve(base_dir, doc.value("quiz", std::string{}));
        if (cfg.course_export.empty())
            throw Error(ErrorCode::config_error, "course_export is required");

        if (doc.contains("chunking")) {
            const json& c = doc.at("chunking");
            cfg.chunking.target_chars = c.value("target_chars", cfg.chunking.target_chars);
            cfg.chunking.overlap_chars = c.value("overlap_chars", cfg.chunking.overlap_chars);
        }
        if (!cfg.chunking.valid())
            throw Error(ErrorCode::config_error,
                        "chunking requires 0 <= overlap_chars < target_chars");

        if (doc.contains("embedder")) {
            const json& e = doc.at("embedder");
            std::string provider = e.value("provider", std::string("local"));
            if (provider == "local") cfg.embedder.provider = EmbedderProvider::local;
            else if (provider == "remote") cfg.embedder.provider = EmbedderProvider::remote;
            else throw Error(ErrorCode::config_error, "embedder.provider must be local or remote");
            cfg.embedder.endpoint_url = e.value("endpoint_url", cfg.embedder.endpoint_url);
            cfg.embedder.model_name = e.value("model_name", cfg.embedder.model_name);
            cfg.embedder.api_key_env = e.value("api_key_env", cfg.embedder.api_key_env);
            cfg.embedder.dim = e.value("dim", cfg.embedder.dim);
            cfg.embedder.normalize = e.value("normalize", cfg.embedder.normalize);
            cfg.embedder.max_batch = e.value("max_batch", cfg.embedder.max_batch);
        }

        if (doc.contains("index")) {
            const json& ix = doc.at("index");
            cfg.index_path = resolve(base_dir, ix.value("path", std::string{}));
            cfg.metric = metric_from_string(ix.value("metric", std::string("euclidean")));
        }

        if (doc.contains("retrieval")) {
            const json& r = doc.at("retrieval");
            cfg.retrieval_k = r.value("k", cfg.retrieval_k);
            cfg.token_budget = r.value("token_budget", cfg.token_budget);
        }
        if (cfg.retrieval_k < 1)
            throw Error(ErrorCode::config_error, "retrieval.k must be >= 1");
        if (cfg.token_budget < 0)
            throw Error(ErrorCode::config_error, "retrieval.token_budget must be >= 0");

        if (doc.contains("prompts")) {
            const json& p = doc.at("prompts");
            cfg.template_dir = resolve(base_dir, p.value("template_dir", std::string{}));
            cfg.exemplar_bank = resolve(base_dir, p.value("exemplar_bank", std::string{}));
        }

        if (doc.contains("gateway")) {
            const json& g = doc.at("gateway");
            cfg.gateway_mode = g.value("mode", cfg.gateway_mode);
            cfg.gateway.endpoint_url = g.value("endpoint_url", std::string{});
            cfg.gateway.model_name = g.value("model_name", std::string{});
            cfg.gateway.api_key_env = g.value("api_key_env", cfg.gateway.api_key_env);
            cfg.temperature = g.value("temperature", cfg.temperature);
            cfg.store_path = resolve(base_dir, g.value("store_path", std::string{}));
            cfg.audit_path = resolve(base_dir, g.value("audit_path", std::string{}));
        }
        if (cfg.gateway_mode != "live" && cfg.gateway_mode != "record" &&
            cfg.gateway_mode != "replay")
            throw Error(ErrorCode::config_error,
                        "gateway.mode must be live, record or replay (got \"" +
                            cfg.gateway_mode + "\")");
        if ((cfg.gateway_mode == "record" || cfg.gateway_mode == "replay") &&
            cfg.store_path.empty())
            throw Error(ErrorCode::config_error,
                        cfg.gateway_mode + " mode requires gateway.store_path");
        if ((cfg.gateway_mode == "live" || cfg.gateway_mode == "record") &&
            (cfg.gateway.endpoint_url.empty() || cfg.gateway.model_name.empty()))
            throw Error(ErrorCode::config_error,
                        cfg.gateway_mode +
                            " mode requires gateway.endpoint_url and gateway.model_name");

        if (doc.contains("sinks")) {
            for (const json& s : doc.at("sinks")) {
                SinkConfig sink;
                std::string kind = s.value("kind", std::string{});
                if (kind == "file") {
                    sink.kind = SinkConfig::Kind::file;
                    sink.target = resolve(base_dir, s.value("outbox", std::string{})).string();
                } else if (kind == "webhook") {
                    sink.kind = SinkConfig::Kind::webhook;
                    sink.target = s.value("url", std::string{});
                } else {
                    throw Error(ErrorCode::config_error,
                                "sink kind must be file or webhook (got \"" + kind + "\")");
                }
                if (sink.target.empty())
                    throw Error(ErrorCode::config_error, "sink has no target");
                cfg.sinks.push_back(std::move(sink));
            }
        }
        if (cfg.sinks.empty())
            throw Error(ErrorCode::config_error, "at least one sink must be configured");

        cfg.salt_env = doc.value("salt_env", cfg.salt_env);
        cfg.manifest_path = resolve(base_dir, doc.value("manifest_path", std::string{}));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_error, e.what());
    }

    cfg.config_hash = sha256_hex(doc.dump());
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config_error, "cannot open config " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_error, path.string() + ": " + e.what());
    }
    for (const std::string& kv : overrides) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error(ErrorCode::config_error, "override must look like key=value: " + kv);
        apply_override(doc, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return config_from_json(doc, path.parent_path());
}

}  // namespace ragfb
