#pragma once

#include "ragfb/content_ingest.hpp"
#include "ragfb/embeddings.hpp"
#include "ragfb/vector_index.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ragfb {

/// Reads a chunks.jsonl file (as written by the ingest command) preserving
/// file order, which fixes index insertion order and so tie-breaking.
std::vector<CourseChunk> load_chunks_jsonl(const std::filesystem::path& path);

/// Chunks keyed by id, with the section ids of the course they came from.
class ChunkStore {
public:
    void put(CourseChunk chunk);

    const CourseChunk& get(const std::string& chunk_id) const;
    bool contains(const std::string& chunk_id) const;
    std::size_t size() const { return chunks_.size(); }

    /// Every distinct section_ref in the store.
    std::vector<std::string> section_ids() const;

    /// Reads a chunks.jsonl file as written by the ingest command.
    static ChunkStore load_jsonl(const std::filesystem::path& path);

    const std::unordered_map<std::string, CourseChunk>& all() const { return chunks_; }

private:
    std::unordered_map<std::string, CourseChunk> chunks_;
};

struct ContextBundle {
    std::vector<CourseChunk> chunks;  // retrieval rank order
    int total_tokens = 0;
    std::string query_text;
};

struct RetrievalParams {
    int k = 4;
    int token_budget = 1500;
};

/// Question text plus the student answer (when given), joined by a single
/// separator line. Throws Error(empty_question).
std::string build_query(const std::string& question_text,
                        const std::optional<std::string>& student_answer);

/// Ties the embedder, index and chunk store together. Pure given a frozen
/// index, so one instance serves any number of workers.
class Retriever {
public:
    Retriever(std::shared_ptr<Embedder> embedder, std::shared_ptr<const VectorIndex> index,
              std::shared_ptr<const ChunkStore> store)
        : embedder_(std::move(embedder)), index_(std::move(index)), store_(std::move(store)) {}

    /// Walks hits best-first, adding whole chunks while they fit the budget;
    /// stops at the first chunk that does not fit, or after k chunks.
    ContextBundle retrieve_context(const std::string& query, int k, int token_budget) const;

    ContextBundle retrieve_context(const std::string& query, const RetrievalParams& params) const {
        return retrieve_context(query, params.k, params.token_budget);
    }

    const ChunkStore& store() const { return *store_; }
    const VectorIndex& index() const { return *index_; }

private:
    std::shared_ptr<Embedder> embedder_;
    std::shared_ptr<const VectorIndex> index_;
    std::shared_ptr<const ChunkStore> store_;
};

}  // namespace ragfb
