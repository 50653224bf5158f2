#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ragfb/vector_index.hpp"
#include "support.hpp"

using namespace ragfb;
using testutil::error_code_of;
using testutil::fresh_dir;
using testutil::slurp;
using testutil::spit;

namespace {

EmbeddingVector random_vec(std::mt19937& rng, std::size_t dim) {
    std::normal_distribution<float> dist(0.f, 1.f);
    EmbeddingVector v;
    v.values.resize(dim);
    for (auto& x : v.values) x = dist(rng);
    return v;
}

// Independent exhaustive scan; stable sort keeps insertion order on ties,
// matching the index's documented tie rule.
std::vector<SearchHit> brute_force(const std::vector<EmbeddingVector>& entries,
                                   const std::vector<std::string>& ids,
                                   const EmbeddingVector& query, int k, Metric metric) {
    std::vector<std::pair<float, std::size_t>> scored;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        float s = metric == Metric::euclidean ? squared_l2(entries[i], query)
                                              : dot(entries[i], query);
        scored.emplace_back(s, i);
    }
    std::stable_sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
        return metric == Metric::euclidean ? a.first < b.first : a.first > b.first;
    });
    std::vector<SearchHit> hits;
    for (std::size_t i = 0; i < scored.size() && int(i) < k; ++i)
        hits.push_back({ids[scored[i].second], scored[i].first, int(i) + 1});
    return hits;
}

}  // namespace

TEST_CASE("index add fixes size dimension and id uniqueness") {
    VectorIndex idx;
    CHECK(idx.size() == 0);
    idx.add("a", {{1.f, 2.f}});
    CHECK(idx.size() == 1);
    CHECK(idx.dim() == 2);
    CHECK(error_code_of([&] { idx.add("a", {{3.f, 4.f}}); }) == ErrorCode::duplicate_id);
    CHECK(error_code_of([&] { idx.add("b", {{1.f, 2.f, 3.f}}); }) ==
          ErrorCode::dimension_mismatch);
}

TEST_CASE("searching the only stored vector returns it at distance zero") {
    VectorIndex idx(Metric::euclidean);
    EmbeddingVector v{{0.5f, -1.25f, 3.f}};
    idx.add("only", v);
    auto hits = idx.search(v, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].chunk_id == "only");
    CHECK(hits[0].score == 0.0f);
    CHECK(hits[0].rank == 1);
}

TEST_CASE("search clamps k to the index size") {
    VectorIndex idx;
    idx.add("a", {{1.f}});
    idx.add("b", {{2.f}});
    idx.add("c", {{3.f}});
    CHECK(idx.search({{0.f}}, 10).size() == 3);
}

TEST_CASE("search on an empty index fails") {
    VectorIndex idx;
    CHECK(error_code_of([&] { idx.search({{1.f}}, 1); }) == ErrorCode::empty_index);
}

TEST_CASE("search matches the brute-force oracle on both metrics") {
    std::mt19937 rng(42);
    const std::size_t dim = 64;
    std::vector<EmbeddingVector> entries;
    std::vector<std::string> ids;
    for (int i = 0; i < 1000; ++i) {
        entries.push_back(random_vec(rng, dim));
        ids.push_back("v" + std::to_string(i));
    }

    for (Metric metric : {Metric::euclidean, Metric::inner_product}) {
        VectorIndex idx(metric);
        for (std::size_t i = 0; i < entries.size(); ++i) idx.add(ids[i], entries[i]);
        for (int q = 0; q < 100; ++q) {
            auto query = random_vec(rng, dim);
            for (int k : {1, 5, 10}) {
                auto got = idx.search(query, k);
                auto want = brute_force(entries, ids, query, k, metric);
                REQUIRE(got.size() == want.size());
                for (std::size_t i = 0; i < got.size(); ++i) {
                    CHECK(got[i].chunk_id == want[i].chunk_id);
                    CHECK(got[i].rank == want[i].rank);
                    CHECK(std::abs(got[i].score - want[i].score) < 1e-6f);
                }
            }
        }
    }
}

TEST_CASE("equal scores resolve by insertion order") {
    VectorIndex idx(Metric::euclidean);
    idx.add("first", {{1.f, 0.f}});
    idx.add("second", {{1.f, 0.f}});  // identical vector, later insertion
    auto hits = idx.search({{1.f, 0.f}}, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].chunk_id == "first");
    CHECK(hits[1].chunk_id == "second");
}

TEST_CASE("search_batch equals repeated single searches") {
    std::mt19937 rng(3);
    VectorIndex idx(Metric::inner_product);
    for (int i = 0; i < 50; ++i) idx.add("v" + std::to_string(i), random_vec(rng, 16));

    std::vector<EmbeddingVector> queries;
    for (int i = 0; i < 100; ++i) queries.push_back(random_vec(rng, 16));
    auto batch = idx.search_batch(queries, 5);
    REQUIRE(batch.size() == queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        auto single = idx.search(queries[i], 5);
        REQUIRE(batch[i].size() == single.size());
        for (std::size_t j = 0; j < single.size(); ++j) {
            CHECK(batch[i][j].chunk_id == single[j].chunk_id);
            CHECK(batch[i][j].score == single[j].score);
        }
    }
    CHECK(idx.search_batch({}, 5).empty());
}

TEST_CASE("save and load round-trip preserves every search result") {
    auto dir = fresh_dir("vfix-roundtrip");
    std::mt19937 rng(9);
    VectorIndex idx(Metric::inner_product);
    for (int i = 0; i < 200; ++i) idx.add("c" + std::to_string(i), random_vec(rng, 32));
    idx.save(dir / "index.vfix");

    VectorIndex loaded = VectorIndex::load(dir / "index.vfix");
    CHECK(loaded.size() == idx.size());
    CHECK(loaded.dim() == idx.dim());
    CHECK(loaded.metric() == idx.metric());
    CHECK(loaded.ids() == idx.ids());
    for (int q = 0; q < 20; ++q) {
        auto query = random_vec(rng, 32);
        auto a = idx.search(query, 7);
        auto b = loaded.search(query, 7);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].chunk_id == b[i].chunk_id);
            CHECK(a[i].score == b[i].score);  // bit-exact, not approximate
        }
    }
}

TEST_CASE("re-saving a loaded index reproduces the file byte for byte") {
    auto dir = fresh_dir("vfix-identical");
    std::mt19937 rng(123);
    VectorIndex idx;
    for (int i = 0; i < 10000; ++i) idx.add("c" + std::to_string(i), random_vec(rng, 8));
    idx.save(dir / "a.vfix");
    VectorIndex::load(dir / "a.vfix").save(dir / "b.vfix");
    CHECK(slurp(dir / "a.vfix") == slurp(dir / "b.vfix"));
}

TEST_CASE("corrupted index files are rejected") {
    auto dir = fresh_dir("vfix-corrupt");
    VectorIndex idx;
    idx.add("a", {{1.f, 2.f}});
    idx.add("b", {{3.f, 4.f}});
    idx.save(dir / "good.vfix");
    std::string bytes = slurp(dir / "good.vfix");

    SUBCASE("truncation") {
        spit(dir / "bad.vfix", bytes.substr(0, bytes.size() / 2));
        CHECK(error_code_of([&] { VectorIndex::load(dir / "bad.vfix"); }) ==
              ErrorCode::corrupt_index);
    }
    SUBCASE("bad magic") {
        std::string mangled = bytes;
        mangled[0] = 'X';
        spit(dir / "bad.vfix", mangled);
        CHECK(error_code_of([&] { VectorIndex::load(dir / "bad.vfix"); }) ==
              ErrorCode::corrupt_index);
    }
    SUBCASE("flipped payload byte breaks the checksum") {
        std::string mangled = bytes;
        mangled[mangled.size() - 5] ^= 0x01;
        spit(dir / "bad.vfix", mangled);
        CHECK(error_code_of([&] { VectorIndex::load(dir / "bad.vfix"); }) ==
              ErrorCode::corrupt_index);
    }
    SUBCASE("missing file is io_failure, not corruption") {
        CHECK(error_code_of([&] { VectorIndex::load(dir / "absent.vfix"); }) ==
              ErrorCode::io_failure);
    }
}
