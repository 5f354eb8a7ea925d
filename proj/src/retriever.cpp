#include "planchat/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "planchat/csv.hpp"
#include "planchat/http_client.hpp"
#include "planchat/text.hpp"

namespace planchat::retrieval {

namespace {

// Thirty function words that carry no tool signal.
const std::set<std::string> kStopWords{"a",  "an", "and",  "are", "at",   "be", "by",  "do",  "does", "for",
                                       "from", "i", "in",  "is",  "it",   "me", "my",  "of",  "on",   "or",
                                       "our", "so", "that", "the", "this", "to", "was", "we",  "with", "you"};

std::uint64_t fnv1a(const std::string& s, std::uint64_t seed) {
    std::uint64_t h = 14695981039346656037ull ^ seed;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

void normalize(Vector& v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return;
    for (double& x : v) x /= norm;
}

double squared_l2(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument(fmt::format("dimension {} vs {}", a.size(), b.size()));
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

HashEmbedder::HashEmbedder(std::size_t dimension, std::uint64_t seed) : dimension_(dimension), seed_(seed) {
    if (dimension_ == 0) throw std::invalid_argument("embedding dimension must be positive");
}

bool HashEmbedder::is_stop_word(const std::string& word) { return kStopWords.count(word) > 0; }

std::vector<std::string> HashEmbedder::tokens(const std::string& text) const {
    std::vector<std::string> out;
    for (auto& w : text::words(text))
        if (!is_stop_word(w)) out.push_back(std::move(w));
    return out;
}

Vector HashEmbedder::embed(const std::string& text) const {
    if (text::trim(text).empty()) throw EmptyText();
    Vector v(dimension_, 0.0);
    for (const auto& tok : tokens(text)) v[fnv1a(tok, seed_) % dimension_] += 1.0;
    normalize(v);
    return v;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

Vector RemoteEmbedder::embed(const std::string& text) const {
    if (text::trim(text).empty()) throw EmptyText();
    nlohmann::json reply;
    try {
        reply = net::post_json(endpoint_, {{"text", text}}, timeout_);
    } catch (const net::HttpError& e) {
        throw EndpointUnavailable(e.what());
    }
    if (!reply.contains("vector") || !reply["vector"].is_array() || reply["vector"].empty())
        throw EndpointUnavailable("embedding reply lacks a vector");
    Vector v;
    for (const auto& x : reply["vector"]) {
        if (!x.is_number()) throw EndpointUnavailable("embedding reply has a non-numeric entry");
        v.push_back(x.get<double>());
    }
    if (dimension_ != 0 && v.size() != dimension_)
        throw EndpointUnavailable(fmt::format("embedding dimension changed from {} to {}", dimension_, v.size()));
    dimension_ = v.size();
    normalize(v);
    return v;
}

VectorIndex index_catalog(const std::vector<tools::ToolContract>& catalog, const Embedder& embedder) {
    VectorIndex index;
    std::set<std::string> seen;
    for (const auto& c : catalog) {
        if (!seen.insert(c.id).second) throw tools::DuplicateId(c.id);
        index.entries.push_back({c.id, embedder.embed(c.retrieval_text())});
    }
    index.dimension = index.entries.empty() ? embedder.dimension() : index.entries.front().vector.size();
    return index;
}

VectorIndex index_catalog(const tools::BoundCatalog& catalog, const Embedder& embedder) {
    std::vector<tools::ToolContract> contracts;
    for (const auto& t : catalog.tools()) contracts.push_back(t.contract);
    return index_catalog(contracts, embedder);
}

RetrievalResult retrieve(const std::string& query, const VectorIndex& index, std::size_t k, const Embedder& embedder,
                         double tau) {
    if (index.entries.empty()) throw EmptyIndex();
    if (k == 0) throw std::invalid_argument("k must be at least 1");
    auto q = embedder.embed(query);
    RetrievalResult out;
    for (const auto& e : index.entries) out.ranked.push_back({e.tool_id, squared_l2(q, e.vector)});
    std::sort(out.ranked.begin(), out.ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.tool_id < b.tool_id;
    });
    if (out.ranked.size() > k) out.ranked.resize(k);
    out.confident = out.ranked.front().distance <= tau;
    return out;
}

std::vector<AnnotatedQuery> load_annotated_set(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<AnnotatedQuery> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        csv::Row fields;
        if (!csv::split_record(line, fields))
            throw std::runtime_error(fmt::format("{}, {}: unterminated quote", path.string(), lineno));
        if (lineno == 1) {
            if (fields != csv::Row{"query", "gold_tool_id"})
                throw std::runtime_error(path.string() + ": expected header query,gold_tool_id");
            continue;
        }
        if (fields.size() != 2) throw std::runtime_error(fmt::format("{}, {}: expected 2 fields", path.string(), lineno));
        out.push_back({fields[0], fields[1]});
    }
    return out;
}

AccuracyReport evaluate_retrieval(const std::vector<AnnotatedQuery>& set, const VectorIndex& index,
                                  const Embedder& embedder, const std::vector<tools::ToolContract>& catalog) {
    if (set.empty()) throw EmptySet();
    std::set<std::string> ids;
    for (const auto& e : index.entries) ids.insert(e.tool_id);
    std::map<std::string, std::string> category;
    for (const auto& c : catalog) category[c.id] = tools::to_string(c.category);
    for (const auto& q : set)
        if (!ids.count(q.gold_tool_id) || !category.count(q.gold_tool_id)) throw UnknownGoldId(q.gold_tool_id);

    AccuracyReport report;
    for (const auto& q : set) {
        auto top = retrieve(q.query, index, 1, embedder).best().tool_id;
        auto& cat = report.per_category[category[q.gold_tool_id]];
        ++cat.total;
        ++report.overall.total;
        if (top == q.gold_tool_id) {
            ++cat.correct;
            ++report.overall.correct;
        } else {
            report.misses.push_back({q, top});
        }
    }
    return report;
}

std::unique_ptr<Embedder> make_embedder(const std::string& endpoint) {
    if (endpoint.empty()) return std::make_unique<HashEmbedder>();
    return std::make_unique<RemoteEmbedder>(endpoint);
}

}  // namespace planchat::retrieval
