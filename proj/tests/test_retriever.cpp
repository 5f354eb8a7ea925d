#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "planchat/retriever.hpp"
#include "support/fixtures.hpp"

using namespace planchat;
using namespace planchat::retrieval;

namespace {

const tools::Catalog& catalog() {
    static const auto cat = tools::load_catalog(planchat::testing::data_dir() / "catalog");
    return cat;
}

double norm(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("embedding is deterministic and unit length") {
    HashEmbedder e;
    auto a = e.embed("Show me the operations plan");
    CHECK(a == e.embed("Show me the operations plan"));
    CHECK(a.size() == 256);
    CHECK(std::abs(norm(a) - 1.0) <= 1e-6);
    CHECK(a == e.embed("  SHOW me, the operations-plan!  "));
    CHECK_THROWS_AS(e.embed("   "), EmptyText);
    // Only stop words leaves nothing to count.
    CHECK(norm(e.embed("is it the")) == 0.0);
}

TEST_CASE("tokens drop stop words") {
    HashEmbedder e;
    CHECK(e.tokens("What is the plan for O1?") == std::vector<std::string>{"what", "plan", "o1"});
    CHECK(HashEmbedder::is_stop_word("the"));
    CHECK_FALSE(HashEmbedder::is_stop_word("plan"));
}

TEST_CASE("paraphrase is closer than an unrelated request") {
    HashEmbedder e;
    auto q = e.embed("show plan");
    double near = squared_l2(q, e.embed("display the operations plan"));
    double far = squared_l2(q, e.embed("add a material receipt"));
    CHECK(near == doctest::Approx(1.1835).epsilon(1e-4));
    CHECK(far == doctest::Approx(2.0));
    CHECK(near < far);
}

TEST_CASE("squared distance is 2 - 2 cos on unit vectors") {
    std::mt19937 rng(77);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 200; ++trial) {
        Vector a(32), b(32);
        for (auto& x : a) x = g(rng);
        for (auto& x : b) x = g(rng);
        normalize(a);
        normalize(b);
        double cos = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) cos += a[i] * b[i];
        CHECK(squared_l2(a, b) == doctest::Approx(2.0 - 2.0 * cos).epsilon(1e-9));
        CHECK(squared_l2(a, b) >= 0.0);
        CHECK(squared_l2(a, a) == 0.0);
    }
}

TEST_CASE("index has one entry per contract") {
    HashEmbedder e;
    auto idx = index_catalog(catalog(), e);
    CHECK(idx.dimension == e.dimension());
    CHECK(idx.entries.size() == catalog().size());
    for (std::size_t i = 0; i < idx.entries.size(); ++i) {
        CHECK(idx.entries[i].tool_id == catalog()[i].id);
        CHECK(idx.entries[i].vector.size() == idx.dimension);
    }

    auto twins = catalog();
    twins.resize(2);
    twins[1].description = twins[0].description;
    twins[1].examples = twins[0].examples;
    auto t = index_catalog(twins, e);
    CHECK(t.entries[0].vector == t.entries[1].vector);
}

TEST_CASE("retrieve ranks by distance then id") {
    HashEmbedder e;
    auto idx = index_catalog(catalog(), e);

    for (const auto& c : catalog()) {
        auto r = retrieve(c.retrieval_text(), idx, 1, e);
        CHECK(r.best().tool_id == c.id);
        CHECK(r.best().distance <= 1e-12);
    }

    auto r = retrieve("Show me the operations plan", idx, 3, e);
    REQUIRE(r.ranked.size() == 3);
    CHECK(r.best().tool_id == "show_plan_table");
    CHECK(r.best().distance == doctest::Approx(0.808241).epsilon(1e-5));
    CHECK(r.confident);

    auto nonsense = retrieve("qqq zzz xxx", idx, catalog().size(), e);
    CHECK_FALSE(nonsense.confident);
    CHECK(nonsense.best().distance > kDefaultTau);
    for (std::size_t i = 1; i < nonsense.ranked.size(); ++i) {
        const auto& p = nonsense.ranked[i - 1];
        const auto& q = nonsense.ranked[i];
        CHECK((p.distance < q.distance || (p.distance == q.distance && p.tool_id < q.tool_id)));
    }

    CHECK(retrieve("add a receipt", idx, 1, e).best().tool_id == "add_receipt");
    CHECK_THROWS_AS(retrieve("plan", VectorIndex{256, {}}, 1, e), EmptyIndex);
}

TEST_CASE("index order does not change the ranking") {
    HashEmbedder e;
    auto idx = index_catalog(catalog(), e);
    std::mt19937 rng(5);
    auto set = load_annotated_set(planchat::testing::data_dir() / "eval" / "retrieval_corpus.csv");
    for (int trial = 0; trial < 5; ++trial) {
        auto shuffled = idx;
        std::shuffle(shuffled.entries.begin(), shuffled.entries.end(), rng);
        for (std::size_t i = 0; i < set.size(); i += 7) {
            auto a = retrieve(set[i].query, idx, 5, e);
            auto b = retrieve(set[i].query, shuffled, 5, e);
            REQUIRE(a.ranked.size() == b.ranked.size());
            for (std::size_t k = 0; k < a.ranked.size(); ++k) {
                CHECK(a.ranked[k].tool_id == b.ranked[k].tool_id);
                CHECK(a.ranked[k].distance == b.ranked[k].distance);
            }
        }
    }
}

TEST_CASE("bundled corpus accuracy is frozen") {
    HashEmbedder e;
    auto idx = index_catalog(catalog(), e);
    auto set = load_annotated_set(planchat::testing::data_dir() / "eval" / "retrieval_corpus.csv");
    REQUIRE(set.size() == 150);
    auto r = evaluate_retrieval(set, idx, e, catalog());
    CHECK(r.overall.total == 150);
    CHECK(r.overall.correct == 137);
    CHECK(r.per_category.at("what_if").correct == 44);
    CHECK(r.per_category.at("display_plan").correct == 21);
    CHECK(r.misses.size() == 13);
    CHECK(evaluate_retrieval(set, idx, e, catalog()).overall.correct == 137);

    // Queries equal to a contract example always hit.
    std::vector<AnnotatedQuery> verbatim;
    for (const auto& c : catalog())
        for (const auto& ex : c.examples) verbatim.push_back({ex, c.id});
    CHECK(evaluate_retrieval(verbatim, idx, e, catalog()).accuracy() == 1.0);
}

TEST_CASE("evaluation errors") {
    HashEmbedder e;
    auto idx = index_catalog(catalog(), e);
    CHECK_THROWS_AS(evaluate_retrieval({}, idx, e, catalog()), EmptySet);
    CHECK_THROWS_AS(evaluate_retrieval({{"show plan", "no_such_tool"}}, idx, e, catalog()), UnknownGoldId);
}

TEST_CASE("remote embedder reports an unreachable endpoint") {
    RemoteEmbedder r("http://127.0.0.1:1/embed", std::chrono::milliseconds(200));
    CHECK_THROWS_AS(r.embed("show plan"), EndpointUnavailable);
}
