#include "ragfb/vector_index.hpp"

#include "ragfb/errors.hpp"
#include "ragfb/hashing.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_set>

namespace ragfb {

namespace {

constexpr char kMagic[4] = {'V', 'F', 'I', 'X'};
constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    static_assert(sizeof(float) == 4);
    std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
    put_u32(out, bits);
}

class Reader {
public:
    Reader(const std::string& buf, std::size_t pos) : buf_(buf), pos_(pos) {}

    std::uint16_t u16() { return static_cast<std::uint16_t>(u(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(u(4)); }
    std::uint64_t u64() { return u(8); }

    float f32() { return std::bit_cast<float>(u32()); }

    std::string bytes(std::size_t n) {
        need(n);
        std::string out = buf_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::size_t pos() const { return pos_; }

private:
    std::uint64_t u(std::size_t n) {
        need(n);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < n; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += n;
        return v;
    }

    void need(std::size_t n) {
        if (pos_ + n > buf_.size())
            throw Error(ErrorCode::corrupt_index, "truncated index file");
    }

    const std::string& buf_;
    std::size_t pos_;
};

}  // namespace

Metric metric_from_string(const std::string& name) {
    if (name == "euclidean") return Metric::euclidean;
    if (name == "inner_product") return Metric::inner_product;
    throw Error(ErrorCode::config_error, "unknown metric '" + name + "'");
}

const char* to_string(Metric metric) {
    return metric == Metric::euclidean ? "euclidean" : "inner_product";
}

void VectorIndex::add(const std::string& chunk_id, const EmbeddingVector& vector) {
    if (dim_ == 0) {
        dim_ = vector.dim();
        if (dim_ == 0) throw Error(ErrorCode::dimension_mismatch, "zero-dimensional vector");
    } else if (vector.dim() != dim_) {
        throw Error(ErrorCode::dimension_mismatch,
                    "vector dim " + std::to_string(vector.dim()) + " vs index dim " +
                        std::to_string(dim_));
    }
    if (!id_set_.insert(chunk_id).second)
        throw Error(ErrorCode::duplicate_id, "chunk_id '" + chunk_id + "' already indexed");
    ids_.push_back(chunk_id);
    data_.insert(data_.end(), vector.values.begin(), vector.values.end());
}

std::vector<SearchHit> VectorIndex::search(const EmbeddingVector& query, int k) const {
    if (k < 1) throw Error(ErrorCode::config_error, "k must be >= 1");
    if (ids_.empty()) throw Error(ErrorCode::empty_index, "search on empty index");
    if (query.dim() != dim_)
        throw Error(ErrorCode::dimension_mismatch,
                    "query dim " + std::to_string(query.dim()) + " vs index dim " +
                        std::to_string(dim_));

    const bool lower_is_better = (metric_ == Metric::euclidean);
    std::vector<std::pair<float, std::size_t>> scored(ids_.size());
    const float* q = query.values.data();
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        const float* row = data_.data() + i * dim_;
        float s = 0.f;
        if (lower_is_better) {
            for (std::size_t d = 0; d < dim_; ++d) {
                float diff = row[d] - q[d];
                s += diff * diff;
            }
        } else {
            for (std::size_t d = 0; d < dim_; ++d) s += row[d] * q[d];
        }
        scored[i] = {s, i};
    }

    auto better = [lower_is_better](const std::pair<float, std::size_t>& a,
                                    const std::pair<float, std::size_t>& b) {
        if (a.first != b.first) return lower_is_better ? a.first < b.first : a.first > b.first;
        return a.second < b.second;  // insertion order breaks ties
    };

    std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), scored.size());
    std::partial_sort(scored.begin(), scored.begin() + take, scored.end(), better);

    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t r = 0; r < take; ++r)
        hits.push_back({ids_[scored[r].second], scored[r].first, static_cast<int>(r) + 1});
    return hits;
}

std::vector<std::vector<SearchHit>> VectorIndex::search_batch(
    const std::vector<EmbeddingVector>& queries, int k) const {
    std::vector<std::vector<SearchHit>> out;
    out.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
        try {
            out.push_back(search(queries[i], k));
        } catch (const Error& e) {
            throw Error(e.code(), "query " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

EmbeddingVector VectorIndex::vector_at(std::size_t pos) const {
    EmbeddingVector v;
    v.values.assign(data_.begin() + pos * dim_, data_.begin() + (pos + 1) * dim_);
    return v;
}

void VectorIndex::save(const std::filesystem::path& path) const {
    if (ids_.empty()) throw Error(ErrorCode::empty_index, "refusing to save an empty index");

    std::string payload;
    payload.reserve(32 + data_.size() * 4);
    put_u16(payload, kFormatVersion);
    payload.push_back(static_cast<char>(metric_ == Metric::euclidean ? 0 : 1));
    put_u32(payload, static_cast<std::uint32_t>(dim_));
    put_u64(payload, ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i].size() > 0xffff)
            throw Error(ErrorCode::io_failure, "chunk id longer than 65535 bytes");
        put_u16(payload, static_cast<std::uint16_t>(ids_[i].size()));
        payload += ids_[i];
        for (std::size_t d = 0; d < dim_; ++d) put_f32(payload, data_[i * dim_ + d]);
    }

    std::string file(kMagic, sizeof kMagic);
    file += payload;
    put_u32(file, crc32_of(payload));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for write");
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw Error(ErrorCode::io_failure, "short write to " + path.string());
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof kMagic + 4 || buf.compare(0, sizeof kMagic, kMagic, sizeof kMagic) != 0)
        throw Error(ErrorCode::corrupt_index, "bad magic");

    const std::string payload = buf.substr(sizeof kMagic, buf.size() - sizeof kMagic - 4);
    Reader footer(buf, buf.size() - 4);
    if (footer.u32() != crc32_of(payload))
        throw Error(ErrorCode::corrupt_index, "checksum mismatch");

    Reader r(buf, sizeof kMagic);
    std::uint16_t version = r.u16();
    if (version != kFormatVersion)
        throw Error(ErrorCode::corrupt_index, "unsupported version " + std::to_string(version));
    std::uint8_t metric_byte = static_cast<std::uint8_t>(r.bytes(1)[0]);
    if (metric_byte > 1) throw Error(ErrorCode::corrupt_index, "bad metric byte");
    std::uint32_t dim = r.u32();
    std::uint64_t count = r.u64();
    if (dim == 0 || count == 0) throw Error(ErrorCode::corrupt_index, "bad header");

    VectorIndex idx(metric_byte == 0 ? Metric::euclidean : Metric::inner_product);
    idx.dim_ = dim;
    idx.ids_.reserve(count);
    idx.data_.reserve(count * dim);
    std::unordered_set<std::string> seen;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint16_t id_len = r.u16();
        std::string id = r.bytes(id_len);
        if (!seen.insert(id).second)
            throw Error(ErrorCode::corrupt_index, "duplicate id in file");
        idx.id_set_.insert(id);
        idx.ids_.push_back(std::move(id));
        for (std::uint32_t d = 0; d < dim; ++d) idx.data_.push_back(r.f32());
    }
    if (r.pos() != buf.size() - 4)
        throw Error(ErrorCode::corrupt_index, "trailing bytes after entries");
    return idx;
}

}  // namespace ragfb
