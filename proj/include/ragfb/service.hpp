#pragma once

#include "ragfb/pipeline.hpp"

#include <memory>
#include <string>

namespace ragfb {

/// Small HTTP front for the pipeline.
///
///   POST /attempts          body: attempts JSONL or a JSON array of the
///                           same objects; runs the pipeline and returns
///                           {"envelope_ids": [...], "failures": [...]}
///   GET  /feedback/{id}     one envelope as JSON, 404 if unknown
///   GET  /healthz           {"index_size", "gateway_mode", "pipeline_version"}
///   POST /evaluate          body: {"gold": path, "judgments": path};
///                           scores stored free-text envelopes
///
/// 400 on malformed bodies, 503 when the live gateway is unreachable.
class FeedbackService {
public:
    explicit FeedbackService(std::shared_ptr<Pipeline> pipeline);
    ~FeedbackService();

    FeedbackService(const FeedbackService&) = delete;
    FeedbackService& operator=(const FeedbackService&) = delete;

    /// Binds and serves on a background thread. port 0 picks a free port.
    /// Returns the bound port.
    int start(const std::string& host, int port);

    /// Blocks until stop() is called (service loop runs in the background).
    void wait();

    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace ragfb
