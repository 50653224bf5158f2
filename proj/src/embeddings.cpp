#include "ragfb/embeddings.hpp"

#include "ragfb/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace ragfb {

using nlohmann::json;

float dot(const EmbeddingVector& a, const EmbeddingVector& b) {
    float acc = 0.f;
    for (std::size_t i = 0; i < a.values.size(); ++i) acc += a.values[i] * b.values[i];
    return acc;
}

float squared_l2(const EmbeddingVector& a, const EmbeddingVector& b) {
    float acc = 0.f;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        float d = a.values[i] - b.values[i];
        acc += d * d;
    }
    return acc;
}

float cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    float na = std::sqrt(dot(a, a));
    float nb = std::sqrt(dot(b, b));
    if (na == 0.f || nb == 0.f) return 0.f;
    return dot(a, b) / (na * nb);
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        try {
            out.push_back(embed(texts[i]));
        } catch (const Error& e) {
            throw Error(e.code(), "batch element " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

EmbeddingVector local_embed(const std::string& text, std::size_t dim) {
    std::string t = trim(text);
    if (t.empty()) throw Error(ErrorCode::empty_text, "cannot embed empty text");

    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });

    EmbeddingVector v;
    v.values.assign(dim, 0.f);

    auto add_gram = [&](std::string_view gram) {
        std::uint64_t h = fnv1a64(gram);
        std::size_t bucket = static_cast<std::size_t>(h % dim);
        float sign = ((h >> 32) & 1u) ? 1.f : -1.f;
        v.values[bucket] += sign;
    };

    std::size_t i = 0;
    while (i < t.size()) {
        while (i < t.size() && !std::isalnum(static_cast<unsigned char>(t[i]))) ++i;
        std::size_t j = i;
        while (j < t.size() && std::isalnum(static_cast<unsigned char>(t[j]))) ++j;
        if (j > i) {
            std::string_view word(t.data() + i, j - i);
            if (word.size() < 3) {
                add_gram(word);
            } else {
                for (std::size_t k = 0; k + 3 <= word.size(); ++k) add_gram(word.substr(k, 3));
            }
        }
        i = j;
    }

    float norm_sq = 0.f;
    for (float x : v.values) norm_sq += x * x;
    if (norm_sq == 0.f) {
        // All grams cancelled; fall back to a single deterministic bucket so
        // the vector still has unit norm.
        v.values[fnv1a64(t) % dim] = 1.f;
        norm_sq = 1.f;
    }
    float inv = 1.f / std::sqrt(norm_sq);
    for (float& x : v.values) x *= inv;
    return v;
}

namespace {

class LocalEmbedder : public Embedder {
public:
    explicit LocalEmbedder(std::size_t dim) : dim_(dim) {
        if (dim < 8) throw Error(ErrorCode::dimension_mismatch, "local dim must be >= 8");
    }

    EmbeddingVector embed(const std::string& text) override { return local_embed(text, dim_); }

    std::size_t dim() const override { return dim_; }

private:
    std::size_t dim_;
};

class RemoteEmbedder : public Embedder {
public:
    RemoteEmbedder(EmbedderConfig config, std::shared_ptr<HttpTransport> transport)
        : config_(std::move(config)), transport_(std::move(transport)) {
        if (!transport_) transport_ = make_httplib_transport();
        if (config_.endpoint_url.empty())
            throw Error(ErrorCode::remote_unavailable, "remote embedder needs endpoint_url");
    }

    EmbeddingVector embed(const std::string& text) override {
        std::string texts[] = {text};
        return embed_batch(texts).front();
    }

    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) override {
        for (std::size_t i = 0; i < texts.size(); ++i) {
            if (trim(texts[i]).empty())
                throw Error(ErrorCode::empty_text,
                            "batch element " + std::to_string(i) + ": cannot embed empty text");
        }
        std::vector<EmbeddingVector> out(texts.size());
        std::size_t batch = static_cast<std::size_t>(std::max(1, config_.max_batch));
        for (std::size_t begin = 0; begin < texts.size(); begin += batch) {
            std::size_t end = std::min(begin + batch, texts.size());
            request_range(texts, begin, end, out);
        }
        return out;
    }

    std::size_t dim() const override {
        std::lock_guard lock(mutex_);
        return pinned_dim_;
    }

private:
    void request_range(std::span<const std::string> texts, std::size_t begin, std::size_t end,
                       std::vector<EmbeddingVector>& out) {
        json body{{"model", config_.model_name}, {"input", json::array()}};
        for (std::size_t i = begin; i < end; ++i) body["input"].push_back(texts[i]);

        std::vector<Header> headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
            headers.emplace_back("Authorization", std::string("Bearer ") + key);

        HttpResponse res = post_with_retry(body.dump(), headers);
        json parsed;
        try {
            parsed = json::parse(res.body);
        } catch (const json::exception&) {
            throw Error(ErrorCode::remote_unavailable, "unparseable embeddings response");
        }
        if (!parsed.contains("data") || !parsed["data"].is_array() ||
            parsed["data"].size() != end - begin)
            throw Error(ErrorCode::remote_unavailable, "embeddings response shape mismatch");

        for (const auto& item : parsed["data"]) {
            std::size_t idx = item.at("index").get<std::size_t>();
            if (idx >= end - begin)
                throw Error(ErrorCode::remote_unavailable, "embedding index out of range");
            EmbeddingVector v;
            v.values = item.at("embedding").get<std::vector<float>>();
            check_dim(v.dim());
            if (config_.normalize) normalize(v);
            out[begin + idx] = std::move(v);
        }
    }

    HttpResponse post_with_retry(const std::string& body, const std::vector<Header>& headers) {
        int attempts = std::max(1, config_.retry_attempts);
        int delay_ms = config_.retry_base_ms;
        for (int attempt = 1;; ++attempt) {
            HttpResponse res = transport_->post_json(config_.endpoint_url, body, headers);
            if (res.status >= 200 && res.status < 300) return res;
            bool retryable = (res.status == 0 || res.status >= 500);
            if (!retryable || attempt >= attempts) {
                throw Error(ErrorCode::remote_unavailable,
                            "embeddings endpoint failed with status " +
                                std::to_string(res.status) + " after " +
                                std::to_string(attempt) + " attempt(s)");
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
    }

    void check_dim(std::size_t got) {
        std::lock_guard lock(mutex_);
        if (pinned_dim_ == 0) {
            pinned_dim_ = got;
        } else if (got != pinned_dim_) {
            throw Error(ErrorCode::dimension_mismatch,
                        "endpoint returned dim " + std::to_string(got) + ", pinned " +
                            std::to_string(pinned_dim_));
        }
    }

    static void normalize(EmbeddingVector& v) {
        float norm_sq = 0.f;
        for (float x : v.values) norm_sq += x * x;
        if (norm_sq == 0.f) return;
        float inv = 1.f / std::sqrt(norm_sq);
        for (float& x : v.values) x *= inv;
    }

    EmbedderConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    mutable std::mutex mutex_;
    std::size_t pinned_dim_ = 0;
};

}  // namespace

std::shared_ptr<Embedder> make_local_embedder(std::size_t dim) {
    return std::make_shared<LocalEmbedder>(dim);
}

std::shared_ptr<Embedder> make_remote_embedder(const EmbedderConfig& config,
                                               std::shared_ptr<HttpTransport> transport) {
    return std::make_shared<RemoteEmbedder>(config, std::move(transport));
}

std::shared_ptr<Embedder> make_embedder(const EmbedderConfig& config,
                                        std::shared_ptr<HttpTransport> transport) {
    if (config.provider == EmbedderProvider::local) return make_local_embedder(config.dim);
    return make_remote_embedder(config, std::move(transport));
}

}  // namespace ragfb
