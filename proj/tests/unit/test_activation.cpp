#include <gtest/gtest.h>

#include "cdisc/activation.hpp"
#include "cdisc/error.hpp"
#include "cdisc/random.hpp"
#include "fixtures.hpp"

using namespace cdisc;

TEST(Activation, GapIsSpatialSum) {
    const Dims d{2, 3, 2};
    std::vector<float> v(d.map_size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
    const Eigen::VectorXd g = gap(FeatureMapView{d, v});
    // channel 0 holds the even values 0..10, channel 1 the odd 1..11.
    EXPECT_DOUBLE_EQ(g(0), 30.0);
    EXPECT_DOUBLE_EQ(g(1), 36.0);
}

TEST(Activation, EaamSumsToScore) {
    Rng rng(1);
    const Dims d{8, 8, 16};
    for (int t = 0; t < 100; ++t) {
        std::vector<float> v(d.map_size());
        for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
        Eigen::MatrixXd w(16, 8);
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, 1.0);
        Eigen::VectorXd a(8);
        for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = rng.normal(0.0, 1.0);
        const FeatureMapView map{d, v};
        const auto m = eaam(map, w, a);
        const double score = a.dot(w.transpose() * gap(map));
        EXPECT_LT(std::abs(m.grid.sum() - score) / (1.0 + std::abs(score)), 1e-9);
    }
}

TEST(Activation, EaamByHand) {
    // One channel, 1x2 grid, D = 1: M(i, j) = w * p * q(i, j).
    const Dims d{1, 2, 1};
    const std::vector<float> v{2.0f, -1.0f};
    Eigen::MatrixXd proj(1, 1);
    proj << 3.0;
    Eigen::VectorXd w(1);
    w << 0.5;
    const auto m = eaam(FeatureMapView{d, v}, proj, w);
    EXPECT_DOUBLE_EQ(m.grid(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(m.grid(0, 1), -1.5);
}

TEST(Activation, PositiveMassInside) {
    Eigen::MatrixXd g(2, 2);
    g << 3, -5, 1, 0;
    const auto mask = SpatialMask::from_rows({"#.", ".."});
    EXPECT_DOUBLE_EQ(positive_mass_inside(g, mask), 0.75);
    EXPECT_DOUBLE_EQ(positive_mass_inside(Eigen::MatrixXd::Zero(2, 2), mask), 0.0);
}

TEST(Activation, AamIsMeanOfEaams) {
    const auto& b = test::small_bundle();
    const AttributeId a = 7;
    std::vector<ItemId> pos;
    for (ItemId id : b.dataset.splits.train)
        if (b.dataset.item(id).has(a)) pos.push_back(id);
    ASSERT_FALSE(pos.empty());
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(b.dataset.dims.height, b.dataset.dims.width);
    for (ItemId id : pos) sum += eaam(b.dataset.feature_map(id), b.embedding.image_proj, b.embedding.attribute(a)).grid;
    const auto m = aam(a, b.dataset, b.embedding);
    EXPECT_EQ(m.support_count, static_cast<int>(pos.size()));
    EXPECT_LT((m.grid - sum / static_cast<double>(pos.size())).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_THROW(aam_over(a, b.dataset, b.embedding, {}), DataError);
}

TEST(Activation, LocalizedConceptsRecoverMasks) {
    const auto& b = test::small_bundle();
    const auto& gt = *b.dataset.ground_truth;
    for (int c = 0; c < gt.concept_count(); ++c) {
        const auto& mask = gt.masks[static_cast<std::size_t>(c)];
        if (mask.active() == mask.height * mask.width) continue;
        double s = 0.0;
        const auto attrs = gt.attributes_of(c);
        for (AttributeId a : attrs) s += positive_mass_inside(b.aams.maps.at(a).grid, mask);
        EXPECT_GE(s / static_cast<double>(attrs.size()), 0.6) << gt.concept_names[static_cast<std::size_t>(c)];
    }
}

TEST(Activation, AamsRoundTrip) {
    const auto& b = test::small_bundle();
    const auto dir = test::scratch_dir("aams");
    save_aams(b.aams, b.vocab_hash, 5, dir / "a.bin");
    const auto back = load_aams(dir / "a.bin");
    ASSERT_EQ(back.maps.size(), b.aams.maps.size());
    for (const auto& [a, m] : b.aams.maps) {
        EXPECT_EQ(back.maps.at(a).support_count, m.support_count);
        EXPECT_LT((back.maps.at(a).grid - m.grid).cwiseAbs().maxCoeff(), 1e-4 * (1.0 + m.grid.cwiseAbs().maxCoeff()));
    }
}
