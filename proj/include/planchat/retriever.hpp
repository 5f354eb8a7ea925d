#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "planchat/contracts.hpp"

namespace planchat::retrieval {

using Vector = std::vector<double>;

class EmptyText : public std::invalid_argument {
public:
    EmptyText() : std::invalid_argument("cannot embed empty text") {}
};

class EndpointUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    /// Unit-length embedding of `text`.
    virtual Vector embed(const std::string& text) const = 0;
    virtual std::size_t dimension() const = 0;
};

/// Seeded hashed bag of words: lowercase alphanumeric tokens minus a fixed stop
/// list, each counted in one of D buckets by FNV-1a, then L2-normalized.
class HashEmbedder : public Embedder {
public:
    static constexpr std::size_t kDefaultDimension = 256;
    static constexpr std::uint64_t kDefaultSeed = 1;

    explicit HashEmbedder(std::size_t dimension = kDefaultDimension, std::uint64_t seed = kDefaultSeed);

    Vector embed(const std::string& text) const override;
    std::size_t dimension() const override { return dimension_; }

    std::vector<std::string> tokens(const std::string& text) const;
    static bool is_stop_word(const std::string& word);

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

/// POSTs {"text"} to an endpoint answering {"vector"}; the dimension is whatever
/// the first reply carries.
class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(std::string endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(10));

    Vector embed(const std::string& text) const override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
    mutable std::size_t dimension_ = 0;
};

/// Scales `v` to unit length. A zero vector stays zero.
void normalize(Vector& v);
double squared_l2(const Vector& a, const Vector& b);

struct IndexEntry {
    std::string tool_id;
    Vector vector;
};

struct VectorIndex {
    std::size_t dimension = 0;
    std::vector<IndexEntry> entries;
};

class EmptyIndex : public std::invalid_argument {
public:
    EmptyIndex() : std::invalid_argument("the tool index is empty") {}
};

VectorIndex index_catalog(const std::vector<tools::ToolContract>& catalog, const Embedder& embedder);
VectorIndex index_catalog(const tools::BoundCatalog& catalog, const Embedder& embedder);

struct Ranked {
    std::string tool_id;
    double distance = 0.0;
};

struct RetrievalResult {
    std::vector<Ranked> ranked;
    bool confident = false;

    const Ranked& best() const { return ranked.front(); }
};

inline constexpr double kDefaultTau = 1.2;

/// Exact scan. Ascending squared distance, ties by tool id; `confident` when the
/// best distance is at most `tau`.
RetrievalResult retrieve(const std::string& query, const VectorIndex& index, std::size_t k, const Embedder& embedder,
                         double tau = kDefaultTau);

struct AnnotatedQuery {
    std::string query;
    std::string gold_tool_id;
};

/// Reads a "query,gold_tool_id" CSV.
std::vector<AnnotatedQuery> load_annotated_set(const std::filesystem::path& csv);

struct CategoryScore {
    std::size_t total = 0;
    std::size_t correct = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct AccuracyReport {
    CategoryScore overall;
    std::map<std::string, CategoryScore> per_category;  // keyed by category name
    std::vector<std::pair<AnnotatedQuery, std::string>> misses;  // query and the tool actually chosen

    double accuracy() const { return overall.accuracy(); }
};

class EmptySet : public std::invalid_argument {
public:
    EmptySet() : std::invalid_argument("the annotated set is empty") {}
};

class UnknownGoldId : public std::invalid_argument {
public:
    explicit UnknownGoldId(const std::string& id) : std::invalid_argument("gold tool id not in index: " + id) {}
};

/// Top-1 accuracy. Categories come from `catalog`.
AccuracyReport evaluate_retrieval(const std::vector<AnnotatedQuery>& set, const VectorIndex& index,
                                  const Embedder& embedder, const std::vector<tools::ToolContract>& catalog);

/// Hash embedder by default, RemoteEmbedder when `endpoint` is non-empty.
std::unique_ptr<Embedder> make_embedder(const std::string& endpoint);

}  // namespace planchat::retrieval
