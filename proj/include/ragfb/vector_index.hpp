#pragma once

#include "ragfb/embeddings.hpp"

#include <filesystem>
#include <string>
#include <unordered_set>
#include <vector>

namespace ragfb {

enum class Metric {
    euclidean,      // squared L2 distance, lower is better
    inner_product,  // dot product, higher is better
};

Metric metric_from_string(const std::string& name);
const char* to_string(Metric metric);

struct SearchHit {
    std::string chunk_id;
    float score = 0.f;
    int rank = 0;  // 1-based
};

/// Exact nearest-neighbour index: a flat scan over every stored vector.
/// Entry order is insertion order and breaks score ties (earlier wins), so
/// results are fully deterministic. Safe for concurrent readers once built.
class VectorIndex {
public:
    explicit VectorIndex(Metric metric = Metric::euclidean) : metric_(metric) {}

    /// First add fixes the dimension. Throws DuplicateId / DimensionMismatch.
    void add(const std::string& chunk_id, const EmbeddingVector& vector);

    /// Best min(k, size) entries, best-first. Throws EmptyIndex /
    /// DimensionMismatch; k must be >= 1.
    std::vector<SearchHit> search(const EmbeddingVector& query, int k) const;

    std::vector<std::vector<SearchHit>> search_batch(const std::vector<EmbeddingVector>& queries,
                                                     int k) const;

    void save(const std::filesystem::path& path) const;
    static VectorIndex load(const std::filesystem::path& path);

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    Metric metric() const { return metric_; }
    const std::vector<std::string>& ids() const { return ids_; }

    /// Entry vector by insertion position.
    EmbeddingVector vector_at(std::size_t pos) const;

private:
    Metric metric_;
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::unordered_set<std::string> id_set_;
    std::vector<float> data_;  // ids_.size() * dim_, row-major
};

}  // namespace ragfb
