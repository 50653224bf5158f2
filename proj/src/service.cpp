#include "ragfb/service.hpp"

#include "ragfb/errors.hpp"
#include "ragfb/lms_sync.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <condition_variable>
#include <map>
#include <mutex>
#include <thread>

namespace ragfb {

using nlohmann::json;

namespace {

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply_json(res, status, json{{"error", message}});
}

bool is_gateway_outage(ErrorCode code) {
    return code == ErrorCode::timeout || code == ErrorCode::rate_limited ||
           code == ErrorCode::remote_unavailable;
}

}  // namespace

struct FeedbackService::Impl {
    std::shared_ptr<Pipeline> pipeline;
    httplib::Server server;
    std::thread worker;

    std::mutex mutex;  // guards pipeline runs and the envelope log
    std::map<std::string, FeedbackEnvelope> by_id;
    std::vector<FeedbackEnvelope> all;

    explicit Impl(std::shared_ptr<Pipeline> p) : pipeline(std::move(p)) { setup(); }

    void setup() {
        server.Post("/attempts", [this](const httplib::Request& req, httplib::Response& res) {
            handle_attempts(req, res);
        });
        server.Get(R"(/feedback/(.+))", [this](const httplib::Request& req,
                                               httplib::Response& res) {
            std::lock_guard<std::mutex> lock(mutex);
            auto it = by_id.find(req.matches[1].str());
            if (it == by_id.end()) {
                reply_error(res, 404, "unknown envelope id");
                return;
            }
            reply_json(res, 200, json(it->second));
        });
        server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard<std::mutex> lock(mutex);
            reply_json(res, 200,
                       json{{"index_size", pipeline->index().size()},
                            {"gateway_mode", pipeline->gateway_mode()},
                            {"pipeline_version", manifest_version()}});
        });
        server.Post("/evaluate", [this](const httplib::Request& req, httplib::Response& res) {
            handle_evaluate(req, res);
        });
    }

    std::string manifest_version() const { return pipeline->manifest().pipeline_version; }

    void handle_attempts(const httplib::Request& req, httplib::Response& res) {
        std::string salt;
        try {
            salt = pipeline->salt();
        } catch (const Error& e) {
            reply_error(res, 503, e.what());
            return;
        }

        // Accept either a JSON array of attempt objects or raw JSONL.
        std::string jsonl = req.body;
        try {
            json doc = json::parse(req.body);
            if (doc.is_array()) {
                jsonl.clear();
                for (const auto& item : doc) jsonl += item.dump() + "\n";
            }
        } catch (const json::exception&) {
            // Not a single JSON document; treat the body as JSONL.
        }

        std::vector<QuizAttempt> attempts;
        try {
            attempts = parse_attempts_text(jsonl, "request body", salt, &pipeline->quiz());
        } catch (const Error& e) {
            reply_error(res, 400, e.what());
            return;
        }
        if (attempts.empty()) {
            reply_error(res, 400, "no attempts in request body");
            return;
        }

        std::lock_guard<std::mutex> lock(mutex);
        std::vector<FeedbackEnvelope> envelopes;
        try {
            envelopes = pipeline->run(attempts);
        } catch (const Error& e) {
            reply_error(res, is_gateway_outage(e.code()) ? 503 : 400, e.what());
            return;
        }

        const RunManifest& manifest = pipeline->manifest();
        if (envelopes.empty() && !manifest.question_failures.empty() &&
            pipeline->gateway_mode() == "live") {
            reply_error(res, 503, "gateway unavailable: " + manifest.question_failures.front());
            return;
        }

        json ids = json::array();
        for (FeedbackEnvelope& envelope : envelopes) {
            ids.push_back(envelope.envelope_id);
            by_id[envelope.envelope_id] = envelope;
            all.push_back(std::move(envelope));
        }
        reply_json(res, 200, json{{"envelope_ids", ids},
                                  {"failures", manifest.question_failures}});
    }

    void handle_evaluate(const httplib::Request& req, httplib::Response& res) {
        std::filesystem::path gold_path, judgments_path;
        try {
            json doc = json::parse(req.body);
            gold_path = doc.at("gold").get<std::string>();
            judgments_path = doc.at("judgments").get<std::string>();
        } catch (const json::exception& e) {
            reply_error(res, 400, std::string("body must be {\"gold\", \"judgments\"}: ") +
                                      e.what());
            return;
        }
        std::lock_guard<std::mutex> lock(mutex);
        try {
            reply_json(res, 200, pipeline->evaluate(all, gold_path, judgments_path));
        } catch (const Error& e) {
            reply_error(res, 400, e.what());
        }
    }
};

FeedbackService::FeedbackService(std::shared_ptr<Pipeline> pipeline)
    : impl_(std::make_unique<Impl>(std::move(pipeline))) {}

FeedbackService::~FeedbackService() { stop(); }

int FeedbackService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) throw Error(ErrorCode::config_error, "cannot bind " + host);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw Error(ErrorCode::config_error,
                        "cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void FeedbackService::wait() {
    if (impl_->worker.joinable()) impl_->worker.join();
}

void FeedbackService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace ragfb
