#include <algorithm>

#include <gtest/gtest.h>

#include "cdisc/error.hpp"
#include "cdisc/retrieval.hpp"
#include "fixtures.hpp"

using namespace cdisc;

namespace {

// Brute-force ranking: cosine of every gallery row against the composite,
// sorted by score then id.
std::vector<RankedItem> brute_rank(const Eigen::VectorXd& composite, const Gallery& g, ItemId exclude) {
    std::vector<RankedItem> out;
    const Eigen::VectorXd c = composite.normalized();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.ids[i] == exclude) continue;
        out.push_back({g.ids[i], g.embeddings.row(static_cast<Eigen::Index>(i)).dot(c)});
    }
    std::sort(out.begin(), out.end(), [](const RankedItem& a, const RankedItem& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    return out;
}

std::vector<ItemId> ids_of(const std::vector<RankedItem>& items) {
    std::vector<ItemId> out;
    for (const auto& i : items) out.push_back(i.id);
    return out;
}

}  // namespace

TEST(Retrieval, RankGalleryOrderAndTies) {
    Eigen::MatrixXd images(4, 2);
    images << 1, 0, 0, 1, 1, 0, -1, 0;
    const Gallery g = Gallery::from(images, {3, 2, 1, 0});
    Eigen::VectorXd q(2);
    q << 2, 0;
    const auto r = rank_gallery(q, g);
    ASSERT_EQ(r.size(), 4u);
    EXPECT_EQ(ids_of(r), (std::vector<ItemId>{0, 2, 1, 3}));
    EXPECT_DOUBLE_EQ(r[0].score, 1.0);
    EXPECT_EQ(ids_of(rank_gallery(q, g, 0, 2)), (std::vector<ItemId>{2, 1}));
}

TEST(Retrieval, BaselineMatchesBruteForce) {
    const auto& b = test::small_bundle();
    const ItemId q = b.dataset.splits.test.front();
    const AttributeId add = 2;
    const auto r = baseline_query({q, add, true}, b.images, b.embedding, b.gallery);
    const Eigen::VectorXd composite = b.images.row(q).transpose() + b.embedding.attribute(add);
    const auto expected = brute_rank(composite, b.gallery, q);
    ASSERT_EQ(r.items.size(), expected.size());
    EXPECT_EQ(ids_of(r.items), ids_of(expected));
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(r.items[i].score, expected[i].score, 1e-12);
    EXPECT_EQ(r.method, Method::baseline);
    EXPECT_FALSE(r.negative);
}

TEST(Retrieval, ConceptQueryRemovesDetectedAttribute) {
    const auto& b = test::small_bundle();
    const ItemId q = b.dataset.splits.test[3];
    const auto& desc = b.dataset.item(q).description;
    // Replace the query's color with another color.
    const auto* sub = b.subspaces.for_attribute(desc.front());
    ASSERT_NE(sub, nullptr);
    AttributeId add = -1;
    for (AttributeId a : sub->attributes)
        if (!b.dataset.item(q).has(a)) add = a;
    ASSERT_GE(add, 0);
    const auto r = concept_query({q, add, true}, b.images, b.embedding, b.gallery, b.subspaces, 10);
    ASSERT_FALSE(r.fallback);
    ASSERT_TRUE(r.negative);
    const int cls = sub->argmax(b.images.row(q).transpose());
    EXPECT_EQ(*r.negative, sub->attributes[static_cast<std::size_t>(cls)]);
    const Eigen::VectorXd composite =
        b.images.row(q).transpose() + b.embedding.attribute(add) - b.embedding.attribute(*r.negative);
    auto expected = brute_rank(composite, b.gallery, q);
    expected.resize(10);
    EXPECT_EQ(ids_of(r.items), ids_of(expected));
}

TEST(Retrieval, NoneOfAboveFallsBackToBaseline) {
    const auto& b = test::small_bundle();
    ConceptSubspaces subs = b.subspaces;
    const ItemId q = b.dataset.splits.test[5];
    const AttributeId add = b.dataset.item(q).description.front();
    auto& m = const_cast<SubspaceModel&>(*subs.for_attribute(add));
    m.out_b(m.none_class()) = 1e6;
    const auto c = concept_query({q, add, true}, b.images, b.embedding, b.gallery, subs, 0);
    const auto base = baseline_query({q, add, true}, b.images, b.embedding, b.gallery, 0);
    EXPECT_TRUE(c.fallback);
    EXPECT_FALSE(c.negative);
    EXPECT_EQ(c.items, base.items);  // bit-identical scores
}

TEST(Retrieval, MissingSubspaceFallsBack) {
    const auto& b = test::small_bundle();
    ConceptSubspaces subs = b.subspaces;
    subs.models.clear();
    const ItemId q = b.dataset.splits.test[1];
    const auto c = concept_query({q, 0, true}, b.images, b.embedding, b.gallery, subs, 5);
    EXPECT_TRUE(c.no_subspace);
    EXPECT_EQ(c.items, baseline_query({q, 0, true}, b.images, b.embedding, b.gallery, 5).items);
}

TEST(Retrieval, TopkEvaluation) {
    const auto& b = test::small_bundle();
    const auto pairs = make_query_pairs(b.dataset, Split::test);
    ASSERT_FALSE(pairs.empty());
    const auto ev = evaluate_topk(pairs, b.dataset, Split::test, b.images, b.embedding, b.subspaces);
    EXPECT_EQ(ev.gallery_size, b.dataset.splits.test.size() - 1);
    for (Method m : {Method::baseline, Method::concept_aware}) {
        double prev = 0.0;
        for (int k : default_topk_ks()) {
            EXPECT_GE(ev.accuracy(m, k), prev);
            prev = ev.accuracy(m, k);
        }
        EXPECT_GT(ev.accuracy(m, 10), 10.0 / static_cast<double>(ev.gallery_size));
    }
    // Recount top-10 from the per-query ranks.
    int hits = 0;
    for (const auto& o : ev.outcomes) hits += o.concept_rank >= 1 && o.concept_rank <= 10;
    EXPECT_NEAR(ev.accuracy(Method::concept_aware, 10), static_cast<double>(hits) / pairs.size(), 1e-12);
    EXPECT_THROW(evaluate_topk({}, b.dataset, Split::test, b.images, b.embedding, b.subspaces), DataError);

    const auto csv = topk_report(ev);
    EXPECT_EQ(csv.rfind("method,k,accuracy,n_queries\n", 0), 0u);
}

TEST(Retrieval, MethodNames) {
    EXPECT_EQ(parse_method("baseline"), Method::baseline);
    EXPECT_EQ(parse_method("concept"), Method::concept_aware);
    EXPECT_EQ(method_name(Method::concept_aware), "concept");
    EXPECT_THROW(parse_method("other"), Error);
}
