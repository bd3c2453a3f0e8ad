#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "cdisc/error.hpp"
#include "cdisc/gradcheck.hpp"
#include "cdisc/subspace.hpp"
#include "fixtures.hpp"

using namespace cdisc;

TEST(Subspace, CrossEntropyGradient) {
    SubspaceModel m = init_subspace(0, {3, 4, 5}, 6, 5, 12);
    Rng rng(2);
    for (Eigen::Index i = 0; i < m.hidden_b.size(); ++i) m.hidden_b(i) = rng.uniform(-0.2, 0.2);
    for (Eigen::Index i = 0; i < m.out_b.size(); ++i) m.out_b(i) = rng.uniform(-0.2, 0.2);
    Eigen::VectorXd x(6);
    for (Eigen::Index i = 0; i < 6; ++i) x(i) = rng.uniform(-1.0, 1.0);
    for (int label = 0; label < m.classes(); ++label) {
        SubspaceGradients g = zero_gradients(m);
        cross_entropy(m, x, label, &g);
        auto loss = [&] { return cross_entropy(m, x, label); };
        EXPECT_LT(max_gradient_error(loss, m.hidden_w, g.hidden_w), 1e-4);
        EXPECT_LT(max_gradient_error(loss, m.out_w, g.out_w), 1e-4);
        EXPECT_LT(max_gradient_error(loss, m.hidden_b, g.hidden_b), 1e-4);
        EXPECT_LT(max_gradient_error(loss, m.out_b, g.out_b), 1e-4);
    }
    EXPECT_LT(subspace_gradcheck(8, 5, 3, 4), 1e-4);
}

TEST(Subspace, SoftmaxByHand) {
    SubspaceModel m = init_subspace(0, {0}, 1, 1, 1);
    m.hidden_w(0, 0) = 1.0;
    m.hidden_b(0) = 0.0;
    m.out_w << 1.0, 0.0;
    m.out_b << 0.0, 0.0;
    Eigen::VectorXd x(1);
    x << std::log(3.0);
    // h = ln 3, logits (ln 3, 0): p = (3/4, 1/4).
    const auto p = m.predict(x);
    EXPECT_NEAR(p(0), 0.75, 1e-12);
    EXPECT_NEAR(cross_entropy(m, x, 1), std::log(4.0), 1e-12);
    x << -1.0;  // ReLU zeroes the hidden unit: a tie, broken toward class 0
    EXPECT_EQ(m.argmax(x), 0);
}

TEST(Subspace, TrainingSetComposition) {
    const auto& b = test::small_bundle();
    const auto attrs = b.dataset.ground_truth->attributes_of(3);  // optional concept
    Rng rng(5);
    const auto set = subspace_training_set(b.dataset, attrs, Split::train, 0.3, rng);
    int pos = 0, neg = 0;
    std::set<ItemId> seen;
    for (const auto& e : set.examples) {
        EXPECT_TRUE(seen.insert(e.item).second);
        const auto& item = b.dataset.item(e.item);
        const int held = static_cast<int>(std::count_if(attrs.begin(), attrs.end(), [&](int a) { return item.has(a); }));
        if (e.label == static_cast<int>(attrs.size())) {
            EXPECT_EQ(held, 0);
            ++neg;
        } else {
            EXPECT_EQ(held, 1);
            EXPECT_TRUE(item.has(attrs[static_cast<std::size_t>(e.label)]));
            ++pos;
        }
    }
    EXPECT_EQ(pos, set.positives);
    EXPECT_EQ(neg, set.negatives);
    EXPECT_EQ(neg, static_cast<int>(std::lround(0.3 * pos)));
}

TEST(Subspace, TrainedModelsClassify) {
    const auto& b = test::small_bundle();
    ASSERT_FALSE(b.subspaces.models.empty());
    for (const auto& [cid, m] : b.subspaces.models) {
        const auto acc = subspace_accuracy(m, b.dataset, b.images, b.dataset.splits.test);
        EXPECT_GE(acc.attribute_accuracy(), 0.8) << "concept " << cid;
    }
}

TEST(Subspace, TooFewAttributesRejected) {
    const auto& b = test::small_bundle();
    EXPECT_THROW(train_subspace(0, {1}, b.dataset, b.images, SubspaceConfig{}, 1), DataError);
}

TEST(Subspace, FilesRoundTrip) {
    const auto& b = test::small_bundle();
    const auto dir = test::scratch_dir("subspace");
    save_subspace_index(b.subspaces, b.vocab_hash, 3, dir);
    std::uint64_t vh = 0, ch = 0;
    const auto back = load_subspaces(dir, &vh, &ch);
    EXPECT_EQ(vh, b.vocab_hash);
    EXPECT_EQ(ch, 3u);
    ASSERT_EQ(back.size(), b.subspaces.models.size());
    for (const auto& [cid, m] : b.subspaces.models) {
        // The bundle was itself loaded from f32, so a second trip is exact.
        EXPECT_EQ(back.at(cid), m);
    }
}
