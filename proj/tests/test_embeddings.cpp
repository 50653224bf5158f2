#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragfb/embeddings.hpp"
#include "support.hpp"

using namespace ragfb;
using nlohmann::json;
using testutil::error_code_of;

namespace {

double norm(const EmbeddingVector& v) {
    double s = 0;
    for (float x : v.values) s += double(x) * double(x);
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("local embedder is a pure function of text and dim") {
    auto a = local_embed("abc", 16);
    auto b = local_embed("abc", 16);
    CHECK(a.values == b.values);  // bitwise
    CHECK(a.dim() == 16);

    auto e = make_local_embedder(256);
    CHECK(e->embed("network security").values == e->embed("network security").values);
    CHECK(e->dim() == 256);
}

TEST_CASE("local embeddings are unit length") {
    for (const char* text : {"a", "confidentiality", "a much longer sentence about security."}) {
        CHECK(std::abs(norm(local_embed(text, 64)) - 1.0) < 1e-6);
        CHECK(std::abs(norm(local_embed(text, 256)) - 1.0) < 1e-6);
    }
}

TEST_CASE("different words land on different vectors") {
    auto a = local_embed("confidentiality", 256);
    auto b = local_embed("availability", 256);
    CHECK(a.values != b.values);
}

TEST_CASE("lexically close texts score closer than unrelated ones") {
    auto basics = local_embed("network security basics", 256);
    auto fundamentals = local_embed("network security fundamentals", 256);
    auto poetry = local_embed("poetry of the romantic era", 256);
    CHECK(cosine(basics, fundamentals) > cosine(basics, poetry));
}

TEST_CASE("embedding requires non-empty text") {
    auto e = make_local_embedder(64);
    CHECK(error_code_of([&] { e->embed(""); }) == ErrorCode::empty_text);
    CHECK(error_code_of([&] { e->embed("   \n\t "); }) == ErrorCode::empty_text);
}

TEST_CASE("embed_batch equals per-text calls") {
    auto e = make_local_embedder(64);
    std::vector<std::string> texts = {"one", "two", "three"};
    auto batch = e->embed_batch(texts);
    REQUIRE(batch.size() == 3);
    for (std::size_t i = 0; i < texts.size(); ++i)
        CHECK(batch[i].values == e->embed(texts[i]).values);

    CHECK(e->embed_batch({}).empty());
}

namespace {

// Answers any embeddings request with deterministic dim-8 vectors derived
// from the input index, echoing the wire convention.
HttpResponse canned_embeddings(const std::string& body) {
    json req = json::parse(body);
    json data = json::array();
    int i = 0;
    for (const auto& text : req.at("input")) {
        std::vector<double> vec(8, 0.0);
        vec[0] = 1.0 + i + text.get<std::string>().size() % 7;
        data.push_back({{"index", i}, {"embedding", vec}});
        ++i;
    }
    return {200, json{{"data", data}}.dump()};
}

}  // namespace

TEST_CASE("remote embedder batches at max_batch") {
    auto transport = std::make_shared<FunctionTransport>(
        [](const std::string&, const std::string& body) { return canned_embeddings(body); });
    EmbedderConfig cfg;
    cfg.provider = EmbedderProvider::remote;
    cfg.endpoint_url = "http://embed.invalid/v1/embeddings";
    cfg.model_name = "test-embed";
    cfg.max_batch = 64;
    auto e = make_remote_embedder(cfg, transport);

    std::vector<std::string> texts(512, "text");
    for (std::size_t i = 0; i < texts.size(); ++i) texts[i] += std::to_string(i);
    auto out = e->embed_batch(texts);
    CHECK(out.size() == 512);
    CHECK(transport->calls() == 8);  // ceil(512 / 64)
    CHECK(e->dim() == 8);            // pinned by the first response
}

TEST_CASE("remote embedder retries transient failures then succeeds") {
    int attempts = 0;
    auto transport = std::make_shared<FunctionTransport>(
        [&](const std::string&, const std::string& body) -> HttpResponse {
            if (++attempts < 3) return {500, "upstream sad"};
            return canned_embeddings(body);
        });
    EmbedderConfig cfg;
    cfg.provider = EmbedderProvider::remote;
    cfg.endpoint_url = "http://embed.invalid/v1/embeddings";
    cfg.model_name = "test-embed";
    cfg.retry_attempts = 3;
    cfg.retry_base_ms = 1;
    auto e = make_remote_embedder(cfg, transport);
    CHECK(e->embed("hello").dim() == 8);
    CHECK(attempts == 3);
}

TEST_CASE("remote embedder surfaces permanent failure as RemoteUnavailable") {
    auto transport = std::make_shared<FunctionTransport>(
        [](const std::string&, const std::string&) { return HttpResponse{503, "down"}; });
    EmbedderConfig cfg;
    cfg.provider = EmbedderProvider::remote;
    cfg.endpoint_url = "http://embed.invalid/v1/embeddings";
    cfg.model_name = "test-embed";
    cfg.retry_attempts = 2;
    cfg.retry_base_ms = 1;
    auto e = make_remote_embedder(cfg, transport);
    CHECK(error_code_of([&] { e->embed("hello"); }) == ErrorCode::remote_unavailable);
    CHECK(transport->calls() == 2);
}
