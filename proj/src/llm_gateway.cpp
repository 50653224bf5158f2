#include "ragfb/llm_gateway.hpp"

#include "ragfb/errors.hpp"
#include "ragfb/hashing.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

namespace ragfb {

using nlohmann::json;

namespace {

class HttpGateway final : public LlmGateway {
public:
    HttpGateway(GatewayConfig config, std::shared_ptr<HttpTransport> transport)
        : config_(std::move(config)),
          transport_(transport ? std::move(transport) : make_httplib_transport()),
          rng_(config_.jitter_seed ? *config_.jitter_seed : std::random_device{}()) {
        if (config_.endpoint_url.empty())
            throw Error(ErrorCode::config_error, "gateway endpoint_url is empty");
        if (config_.model_name.empty())
            throw Error(ErrorCode::config_error, "gateway model_name is empty");
    }

    std::string complete(const CompletionRequest& request) override {
        if (request.temperature < 0.0 || request.temperature > 2.0)
            throw Error(ErrorCode::config_error, "temperature must be within [0, 2]");

        json body{
            {"model", request.model_name.empty() ? config_.model_name : request.model_name},
            {"temperature", request.temperature},
            {"max_tokens", request.max_output_tokens},
            {"messages",
             json::array({json{{"role", "system"}, {"content", request.system_text}},
                          json{{"role", "user"}, {"content", request.user_text}}})},
        };
        std::vector<Header> headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
            headers.emplace_back("Authorization", std::string("Bearer ") + key);

        HttpResponse resp;
        for (int attempt = 1;; ++attempt) {
            resp = transport_->post_json(config_.endpoint_url, body.dump(), headers);
            bool retryable = resp.status == 0 || resp.status == 429 || resp.status >= 500;
            if (!retryable || attempt >= config_.retry_attempts) break;
            backoff(attempt);
        }
        if (resp.status == 0)
            throw Error(ErrorCode::timeout, "completion request never completed after " +
                                                std::to_string(config_.retry_attempts) +
                                                " attempts");
        if (resp.status == 429)
            throw Error(ErrorCode::rate_limited, "rate limited after " +
                                                     std::to_string(config_.retry_attempts) +
                                                     " attempts");
        if (resp.status < 200 || resp.status >= 300)
            throw Error(ErrorCode::remote_unavailable,
                        "completion endpoint returned HTTP " + std::to_string(resp.status));

        try {
            json doc = json::parse(resp.body);
            const json& choices = doc.at("choices");
            if (!choices.is_array() || choices.empty())
                throw Error(ErrorCode::malformed_response, "response has no choices");
            return choices.at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::malformed_response, e.what());
        }
    }

    std::string mode() const override { return "live"; }

private:
    void backoff(int attempt) {
        long delay = static_cast<long>(config_.retry_base_ms) << (attempt - 1);
        std::uniform_int_distribution<long> jitter(0, std::max(1L, delay / 2));
        std::this_thread::sleep_for(std::chrono::milliseconds(delay + jitter(rng_)));
    }

    GatewayConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    std::mt19937 rng_;
};

}  // namespace

std::shared_ptr<LlmGateway> make_http_gateway(GatewayConfig config,
                                              std::shared_ptr<HttpTransport> transport) {
    return std::make_shared<HttpGateway>(std::move(config), std::move(transport));
}

void MockGateway::add(const std::string& fingerprint, std::string response) {
    canned_[fingerprint] = std::move(response);
}

void MockGateway::add_for_text(const std::string& user_text, std::string response) {
    add(prompt_fingerprint(user_text), std::move(response));
}

std::string MockGateway::complete(const CompletionRequest& request) {
    auto it = canned_.find(prompt_fingerprint(request.user_text));
    if (it != canned_.end()) return it->second;
    if (default_) return *default_;
    throw Error(ErrorCode::mock_miss, "no canned response for this prompt");
}

namespace {

std::map<std::string, std::string> load_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open replay store " + path.string());
    std::map<std::string, std::string> store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            store[j.at("fingerprint").get<std::string>()] = j.at("response").get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::malformed_line,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

void append_store_entry(const std::filesystem::path& path, const std::string& fingerprint,
                        const std::string& response) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error(ErrorCode::io_failure, "cannot append to " + path.string());
    out << json{{"fingerprint", fingerprint}, {"response", response}}.dump() << "\n";
}

class RecordGateway final : public LlmGateway {
public:
    RecordGateway(std::shared_ptr<LlmGateway> inner, std::filesystem::path store_path)
        : inner_(std::move(inner)), store_path_(std::move(store_path)) {
        if (std::filesystem::exists(store_path_)) recorded_ = load_store(store_path_);
    }

    std::string complete(const CompletionRequest& request) override {
        std::string text = inner_->complete(request);
        std::string fp = prompt_fingerprint(request.user_text);
        auto it = recorded_.find(fp);
        if (it == recorded_.end() || it->second != text) {
            append_store_entry(store_path_, fp, text);
            recorded_[fp] = text;
        }
        return text;
    }

    std::string mode() const override { return "record"; }

private:
    std::shared_ptr<LlmGateway> inner_;
    std::filesystem::path store_path_;
    std::map<std::string, std::string> recorded_;
};

class ReplayGateway final : public LlmGateway {
public:
    explicit ReplayGateway(const std::filesystem::path& store_path)
        : store_(load_store(store_path)) {}

    std::string complete(const CompletionRequest& request) override {
        auto it = store_.find(prompt_fingerprint(request.user_text));
        if (it == store_.end())
            throw Error(ErrorCode::replay_miss,
                        "no recorded response for fingerprint " +
                            prompt_fingerprint(request.user_text).substr(0, 12));
        return it->second;
    }

    std::string mode() const override { return "replay"; }

private:
    std::map<std::string, std::string> store_;
};

class AuditedGateway final : public LlmGateway {
public:
    AuditedGateway(std::shared_ptr<LlmGateway> inner, std::filesystem::path audit_path)
        : inner_(std::move(inner)), audit_path_(std::move(audit_path)) {}

    std::string complete(const CompletionRequest& request) override {
        std::string text = inner_->complete(request);
        json record{
            {"fingerprint", prompt_fingerprint(request.user_text)},
            {"model", request.model_name},
            {"temperature", request.temperature},
            {"system_text", request.system_text},
            {"user_text", request.user_text},
            {"response", text},
        };
        std::ofstream out(audit_path_, std::ios::app);
        if (!out) throw Error(ErrorCode::io_failure, "cannot append to " + audit_path_.string());
        out << record.dump() << "\n";
        return text;
    }

    std::string mode() const override { return inner_->mode(); }

private:
    std::shared_ptr<LlmGateway> inner_;
    std::filesystem::path audit_path_;
};

}  // namespace

std::shared_ptr<LlmGateway> make_record_gateway(std::shared_ptr<LlmGateway> inner,
                                                const std::filesystem::path& store_path) {
    return std::make_shared<RecordGateway>(std::move(inner), store_path);
}

std::shared_ptr<LlmGateway> make_replay_gateway(const std::filesystem::path& store_path) {
    return std::make_shared<ReplayGateway>(store_path);
}

std::shared_ptr<LlmGateway> make_audited_gateway(std::shared_ptr<LlmGateway> inner,
                                                 const std::filesystem::path& audit_path) {
    return std::make_shared<AuditedGateway>(std::move(inner), audit_path);
}

}  // namespace ragfb
