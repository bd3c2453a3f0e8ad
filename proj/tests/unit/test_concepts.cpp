#include <cmath>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "cdisc/concepts.hpp"
#include "cdisc/error.hpp"
#include "cdisc/random.hpp"
#include "fixtures.hpp"

using namespace cdisc;

namespace {

AamSet constant_aams(int n, int h, int w) {
    AamSet s;
    s.dims = {h, w, 1};
    s.vocab_size = n;
    for (int a = 0; a < n; ++a) {
        AttributeMap m;
        m.grid = Eigen::MatrixXd::Constant(h, w, 1.0 + a);
        m.grid(0, 0) += 3.0 * a;
        m.kind = MapKind::aam;
        m.attribute = a;
        m.support_count = 1;
        s.maps.emplace(a, m);
    }
    return s;
}

SemanticEmbeddings random_vectors(int n, int dim, std::uint64_t seed) {
    Rng rng(seed);
    SemanticEmbeddings e;
    e.vectors.resize(n, dim);
    for (Eigen::Index i = 0; i < e.vectors.size(); ++i) e.vectors.data()[i] = rng.normal(0.0, 1.0);
    return e;
}

AttributeFeatures blobs(int per_blob, std::uint64_t seed, std::vector<int>& truth) {
    Rng rng(seed);
    const double centers[3][2] = {{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
    AttributeFeatures f;
    f.rows.resize(3 * per_blob, 2);
    truth.clear();
    for (int b = 0; b < 3; ++b) {
        for (int i = 0; i < per_blob; ++i) {
            const int r = b * per_blob + i;
            f.attributes.push_back(r);
            f.rows(r, 0) = centers[b][0] + rng.normal(0.0, 0.5);
            f.rows(r, 1) = centers[b][1] + rng.normal(0.0, 0.5);
            truth.push_back(b);
        }
    }
    return f;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, int> ab, ba;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (ab.emplace(a[i], b[i]).first->second != b[i]) return false;
        if (ba.emplace(b[i], a[i]).first->second != a[i]) return false;
    }
    return a.size() == b.size();
}

}  // namespace

TEST(ClusterScores, HandComputedContingency) {
    // Rows are clusters, columns classes: [[2, 0], [1, 1]].
    const std::vector<int> clusters{0, 0, 1, 1};
    const std::vector<int> classes{0, 0, 0, 1};
    const double h_class = 0.75 * std::log(4.0 / 3.0) + 0.25 * std::log(4.0);
    const double h_class_given_cluster = 0.5 * std::log(2.0);
    const double h_cluster = std::log(2.0);
    const double h_cluster_given_class = 0.5 * std::log(1.5) + 0.25 * std::log(3.0);
    const double h = 1.0 - h_class_given_cluster / h_class;
    const double c = 1.0 - h_cluster_given_class / h_cluster;
    const auto s = cluster_scores(clusters, classes);
    EXPECT_NEAR(s.homogeneity, h, 1e-9);
    EXPECT_NEAR(s.completeness, c, 1e-9);
    EXPECT_NEAR(s.v_measure, 2.0 * h * c / (h + c), 1e-9);
}

TEST(ClusterScores, Limits) {
    const std::vector<int> truth{0, 0, 1, 1, 2};
    const auto perfect = cluster_scores(std::vector<int>{2, 2, 0, 0, 1}, truth);
    EXPECT_NEAR(perfect.homogeneity, 1.0, 1e-12);
    EXPECT_NEAR(perfect.completeness, 1.0, 1e-12);
    EXPECT_NEAR(perfect.v_measure, 1.0, 1e-12);
    const auto single = cluster_scores(std::vector<int>{0, 0, 0, 0, 0}, truth);
    EXPECT_NEAR(single.homogeneity, 0.0, 1e-12);
    EXPECT_NEAR(single.completeness, 1.0, 1e-12);
    EXPECT_NEAR(single.v_measure, 0.0, 1e-12);
    EXPECT_THROW(cluster_scores(std::vector<int>{}, std::vector<int>{}), DataError);
}

TEST(ClusterScores, RelabelingInvariant) {
    Rng rng(8);
    std::vector<int> k(40), c(40);
    for (int i = 0; i < 40; ++i) {
        k[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(4));
        c[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(3));
    }
    const auto base = cluster_scores(k, c);
    std::vector<int> permuted = k;
    for (int& x : permuted) x = (x + 1) % 4;
    const auto p = cluster_scores(permuted, c);
    EXPECT_NEAR(base.homogeneity, p.homogeneity, 1e-12);
    EXPECT_NEAR(base.completeness, p.completeness, 1e-12);
    EXPECT_NEAR(base.v_measure, p.v_measure, 1e-12);
    for (double v : {base.homogeneity, base.completeness, base.v_measure}) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(ClusterScores, SplittingPureClusterKeepsHomogeneity) {
    const std::vector<int> classes{0, 0, 0, 0, 1, 1, 1, 1};
    const auto before = cluster_scores(std::vector<int>{0, 0, 0, 0, 1, 1, 1, 0}, classes);
    const auto after = cluster_scores(std::vector<int>{0, 0, 2, 2, 1, 1, 1, 0}, classes);
    EXPECT_GE(after.homogeneity, before.homogeneity - 1e-12);
}

TEST(Features, ShapesAndNorms) {
    const auto aams = constant_aams(4, 8, 8);
    const auto sem = random_vectors(4, 64, 3);
    const auto joint = build_features(aams, sem, FeatureMode::joint);
    ASSERT_EQ(joint.rows.cols(), 128);
    const auto spatial = build_features(aams, sem, FeatureMode::spatial_only);
    const auto semantic = build_features(aams, sem, FeatureMode::semantic_only);
    for (Eigen::Index i = 0; i < joint.rows.rows(); ++i) {
        EXPECT_NEAR(joint.rows.row(i).norm(), std::sqrt(2.0), 1e-12);
        EXPECT_LT((joint.rows.row(i).head(64) - spatial.rows.row(i)).cwiseAbs().maxCoeff(), 1e-15);
        EXPECT_LT((joint.rows.row(i).tail(64) - semantic.rows.row(i)).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Features, ConstantMapIsUniform) {
    AamSet aams = constant_aams(1, 8, 8);
    aams.maps.at(0).grid.setOnes();
    const auto f = build_features(aams, random_vectors(1, 4, 1), FeatureMode::spatial_only);
    for (Eigen::Index j = 0; j < 64; ++j) EXPECT_NEAR(f.rows(0, j), 0.125, 1e-15);
}

TEST(Features, ZeroHalfRejected) {
    AamSet aams = constant_aams(2, 2, 2);
    aams.maps.at(1).grid.setZero();
    EXPECT_THROW(build_features(aams, random_vectors(2, 4, 1), FeatureMode::joint), DataError);
    auto sem = random_vectors(2, 4, 1);
    sem.vectors.row(0).setZero();
    EXPECT_THROW(build_features(constant_aams(2, 2, 2), sem, FeatureMode::semantic_only), DataError);
}

TEST(KMeans, DegenerateK) {
    std::vector<int> truth;
    const auto f = blobs(4, 2, truth);
    const auto all = kmeans(f, static_cast<int>(f.attributes.size()), 1);
    EXPECT_NEAR(all.inertia, 0.0, 1e-12);
    std::set<int> ids(all.cluster.begin(), all.cluster.end());
    EXPECT_EQ(ids.size(), f.attributes.size());

    const auto one = kmeans(f, 1, 1);
    const Eigen::RowVectorXd mean = f.rows.colwise().mean();
    EXPECT_LT((one.centroids.row(0) - mean).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(kmeans(f, 13, 1), DataError);
}

TEST(KMeans, RecoversBlobs) {
    std::vector<int> truth;
    const auto f = blobs(10, 5, truth);
    const auto a = kmeans(f, 3, 77);
    EXPECT_TRUE(same_partition(a.cluster, truth));
    for (std::size_t i = 1; i < a.inertia_history.size(); ++i)
        EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1] + 1e-12);
    const auto again = kmeans(f, 3, 77);
    EXPECT_EQ(a.cluster, again.cluster);
    EXPECT_EQ(a.centroids, again.centroids);
}

TEST(KMeans, RowOrderDoesNotChangePartition) {
    std::vector<int> truth;
    auto f = blobs(10, 6, truth);
    const auto a = kmeans(f, 3, 4);
    // Reverse the rows; the partition (as a set of sets) must not change.
    AttributeFeatures r;
    r.rows = f.rows.colwise().reverse();
    r.attributes.assign(f.attributes.rbegin(), f.attributes.rend());
    const auto b = kmeans(r, 3, 4);
    std::vector<int> b_in_a_order(b.cluster.rbegin(), b.cluster.rend());
    EXPECT_TRUE(same_partition(a.cluster, b_in_a_order));
}

TEST(Discover, SmallCorpusJointBeatsAblations) {
    const auto& b = test::small_bundle();
    const auto joint = discover(b.dataset, b.aams, b.word2vec, 6, 1, 3, FeatureMode::joint);
    ASSERT_TRUE(joint.scores);
    EXPECT_GE(joint.scores->v_measure, 0.9);
    for (auto mode : {FeatureMode::semantic_only, FeatureMode::spatial_only}) {
        const auto d = discover(b.dataset, b.aams, b.word2vec, 6, 1, 3, mode);
        EXPECT_GT(joint.scores->v_measure, d.scores->v_measure) << feature_mode_name(mode);
    }
}

TEST(Concepts, FilesRoundTrip) {
    const auto& b = test::small_bundle();
    const auto dir = test::scratch_dir("concepts");
    save_concepts(b.subspaces.assignment, b.dataset.vocab, 9, dir / "c.tsv");
    std::uint64_t vh = 0, ch = 0;
    const auto back = load_concepts(dir / "c.tsv", b.dataset.vocab, &vh, &ch);
    EXPECT_EQ(back.cluster, b.subspaces.assignment.cluster);
    EXPECT_EQ(back.attributes, b.subspaces.assignment.attributes);
    EXPECT_EQ(vh, b.vocab_hash);
    EXPECT_EQ(ch, 9u);

    save_scores(ClusterScores{0.5, 0.25, 1.0 / 3.0}, 1, 2, dir / "s");
    const auto s = load_scores(dir / "s");
    ASSERT_TRUE(s);
    EXPECT_NEAR(s->completeness, 0.25, 1e-9);
    save_scores(std::nullopt, 1, 2, dir / "none");
    EXPECT_FALSE(load_scores(dir / "none"));
}
