#pragma once

#include "ragfb/http_transport.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace ragfb {

struct CompletionRequest {
    std::string system_text;
    std::string user_text;
    double temperature = 0.0;
    int max_output_tokens = 1024;
    std::string model_name;
};

/// Anything that can turn a prompt into completion text. mode() feeds the
/// health endpoint ("live", "mock", "record", "replay").
class LlmGateway {
public:
    virtual ~LlmGateway() = default;
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual std::string mode() const = 0;
};

struct GatewayConfig {
    std::string endpoint_url;
    std::string model_name;  // deliberately no default; must come from config
    std::string api_key_env = "OPENAI_API_KEY";
    int retry_attempts = 3;  // total attempts on timeout / 429 / 5xx
    int retry_base_ms = 500;
    std::optional<unsigned> jitter_seed;  // fixed seed for tests
};

/// Chat-completions client: POST {model, temperature, messages:[...]} and
/// return choices[0].message.content verbatim.
std::shared_ptr<LlmGateway> make_http_gateway(GatewayConfig config,
                                              std::shared_ptr<HttpTransport> transport = nullptr);

/// Scripted offline gateway keyed by prompt fingerprint.
class MockGateway : public LlmGateway {
public:
    void add(const std::string& fingerprint, std::string response);
    /// Convenience: fingerprints the text itself.
    void add_for_text(const std::string& user_text, std::string response);
    void set_default(std::string response) { default_ = std::move(response); }

    std::string complete(const CompletionRequest& request) override;
    std::string mode() const override { return "mock"; }

private:
    std::map<std::string, std::string> canned_;
    std::optional<std::string> default_;
};

/// Wraps a gateway and appends every (fingerprint, response) pair to a JSONL
/// store as calls succeed. Re-recording a fingerprint appends again; replay
/// loads take the last entry.
std::shared_ptr<LlmGateway> make_record_gateway(std::shared_ptr<LlmGateway> inner,
                                                const std::filesystem::path& store_path);

/// Serves completions from a previously recorded store. Performs no network
/// activity at all; unknown fingerprints raise ReplayMiss.
std::shared_ptr<LlmGateway> make_replay_gateway(const std::filesystem::path& store_path);

/// Wraps a gateway and writes one audit JSONL record per successful
/// completion: request parameters, fingerprint and response text.
std::shared_ptr<LlmGateway> make_audited_gateway(std::shared_ptr<LlmGateway> inner,
                                                 const std::filesystem::path& audit_path);

}  // namespace ragfb
