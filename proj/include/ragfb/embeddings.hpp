#pragma once

#include "ragfb/http_transport.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ragfb {

struct EmbeddingVector {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }
};

float dot(const EmbeddingVector& a, const EmbeddingVector& b);
float squared_l2(const EmbeddingVector& a, const EmbeddingVector& b);
float cosine(const EmbeddingVector& a, const EmbeddingVector& b);

enum class EmbedderProvider { local, remote };

struct EmbedderConfig {
    EmbedderProvider provider = EmbedderProvider::local;
    std::string endpoint_url;           // remote only
    std::string model_name;             // remote only
    std::string api_key_env = "OPENAI_API_KEY";
    std::size_t dim = 256;              // local only; remote dim is discovered
    bool normalize = true;
    int max_batch = 64;                 // texts per remote request
    int max_in_flight = 4;
    int retry_attempts = 3;
    int retry_base_ms = 500;
};

/// Common surface for the local hashing embedder and the remote endpoint
/// client. All implementations are safe to share across threads.
class Embedder {
public:
    virtual ~Embedder() = default;

    /// Throws Error(empty_text) when `text` trims to nothing.
    virtual EmbeddingVector embed(const std::string& text) = 0;

    /// Order-preserving; element i equals embed(texts[i]). An element error
    /// propagates annotated with its index.
    virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);

    virtual std::size_t dim() const = 0;
};

/// Deterministic feature-hashing embedding: lowercase word character 3-grams
/// hashed into `dim` signed buckets, then L2-normalised. A pure function of
/// (text, dim); needs no network and no model files.
EmbeddingVector local_embed(const std::string& text, std::size_t dim);

std::shared_ptr<Embedder> make_local_embedder(std::size_t dim);

/// Client for the common embeddings JSON convention:
/// POST {model, input: [strings]} -> {data: [{index, embedding: [floats]}]}.
/// Retries timeouts and 5xx with exponential backoff; the first response pins
/// the dimension.
std::shared_ptr<Embedder> make_remote_embedder(const EmbedderConfig& config,
                                               std::shared_ptr<HttpTransport> transport = nullptr);

std::shared_ptr<Embedder> make_embedder(const EmbedderConfig& config,
                                        std::shared_ptr<HttpTransport> transport = nullptr);

}  // namespace ragfb
