#include "ragfb/retrieval.hpp"

#include "ragfb/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace ragfb {

using nlohmann::json;

void ChunkStore::put(CourseChunk chunk) {
    std::string id = chunk.chunk_id;
    chunks_[std::move(id)] = std::move(chunk);
}

const CourseChunk& ChunkStore::get(const std::string& chunk_id) const {
    auto it = chunks_.find(chunk_id);
    if (it == chunks_.end())
        throw Error(ErrorCode::io_failure, "chunk '" + chunk_id + "' not in store");
    return it->second;
}

bool ChunkStore::contains(const std::string& chunk_id) const {
    return chunks_.count(chunk_id) > 0;
}

std::vector<std::string> ChunkStore::section_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, chunk] : chunks_) out.push_back(chunk.section_ref);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<CourseChunk> load_chunks_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    std::vector<CourseChunk> chunks;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            CourseChunk chunk;
            chunk.chunk_id = j.at("chunk_id").get<std::string>();
            chunk.text = j.at("text").get<std::string>();
            chunk.section_ref = j.at("section_ref").get<std::string>();
            chunk.token_estimate = j.at("token_estimate").get<int>();
            chunk.char_start = j.value("char_start", std::size_t{0});
            chunk.char_end = j.value("char_end", std::size_t{0});
            chunks.push_back(std::move(chunk));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::malformed_line,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return chunks;
}

ChunkStore ChunkStore::load_jsonl(const std::filesystem::path& path) {
    ChunkStore store;
    for (CourseChunk& chunk : load_chunks_jsonl(path)) store.put(std::move(chunk));
    return store;
}

std::string build_query(const std::string& question_text,
                        const std::optional<std::string>& student_answer) {
    if (question_text.empty())
        throw Error(ErrorCode::empty_question, "question text is empty");
    if (!student_answer || student_answer->empty()) return question_text;
    return question_text + "\n---\n" + *student_answer;
}

ContextBundle Retriever::retrieve_context(const std::string& query, int k,
                                          int token_budget) const {
    if (query.empty()) throw Error(ErrorCode::empty_question, "empty retrieval query");
    if (k < 1) throw Error(ErrorCode::config_error, "retrieval k must be >= 1");
    if (token_budget < 0) throw Error(ErrorCode::config_error, "token budget must be >= 0");
    if (index_->size() == 0) throw Error(ErrorCode::empty_index, "index not built");

    ContextBundle bundle;
    bundle.query_text = query;
    if (token_budget == 0) return bundle;

    EmbeddingVector qv = embedder_->embed(query);
    std::vector<SearchHit> hits = index_->search(qv, k);
    for (const SearchHit& hit : hits) {
        const CourseChunk& chunk = store_->get(hit.chunk_id);
        if (bundle.total_tokens + chunk.token_estimate > token_budget) break;
        bundle.chunks.push_back(chunk);
        bundle.total_tokens += chunk.token_estimate;
        if (static_cast<int>(bundle.chunks.size()) >= k) break;
    }
    return bundle;
}

}  // namespace ragfb
