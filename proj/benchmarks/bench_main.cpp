#include <benchmark/benchmark.h>

#include "cdisc/activation.hpp"
#include "cdisc/concepts.hpp"
#include "cdisc/corpus.hpp"
#include "cdisc/embedding.hpp"
#include "cdisc/random.hpp"
#include "cdisc/retrieval.hpp"

using namespace cdisc;

namespace {

const Dataset& corpus() {
    static const Dataset ds = [] {
        CorpusConfig c = default_corpus_config();
        c.n_items = 1000;
        return generate_synthetic(c, 3);
    }();
    return ds;
}

void BM_Gap(benchmark::State& state) {
    const auto& ds = corpus();
    for (auto _ : state) benchmark::DoNotOptimize(gap_all(ds));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_Gap)->Unit(benchmark::kMillisecond);

void BM_Eaam(benchmark::State& state) {
    Rng rng(1);
    const Dims d{8, 8, static_cast<int>(state.range(0))};
    std::vector<float> v(d.map_size());
    for (float& x : v) x = static_cast<float>(rng.uniform(0.0, 1.0));
    Eigen::MatrixXd w(d.channels, 64);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal(0.0, 0.1);
    Eigen::VectorXd a = Eigen::VectorXd::Ones(64);
    for (auto _ : state) benchmark::DoNotOptimize(eaam(FeatureMapView{d, v}, w, a));
}
BENCHMARK(BM_Eaam)->Arg(32)->Arg(128);

void BM_ContrastiveBatch(benchmark::State& state) {
    const auto& ds = corpus();
    const Eigen::MatrixXd f = gap_all(ds);
    const EmbeddingModel m = init_embedding(static_cast<int>(f.cols()), 64, ds.vocab.size(), 0.2, 5);
    const auto b = static_cast<Eigen::Index>(state.range(0));
    std::vector<std::vector<AttributeId>> desc;
    for (Eigen::Index i = 0; i < b; ++i) desc.push_back(ds.item(static_cast<ItemId>(i)).description);
    const Eigen::MatrixXd batch = f.topRows(b);
    for (auto _ : state) benchmark::DoNotOptimize(contrastive_loss(m, batch, desc));
}
BENCHMARK(BM_ContrastiveBatch)->Arg(32)->Arg(128);

void BM_KMeans(benchmark::State& state) {
    Rng rng(2);
    AttributeFeatures f;
    f.rows.resize(300, 128);
    for (Eigen::Index i = 0; i < f.rows.size(); ++i) f.rows.data()[i] = rng.normal(0.0, 1.0);
    for (int i = 0; i < 300; ++i) f.attributes.push_back(i);
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(f, 6, 7, 10));
}
BENCHMARK(BM_KMeans)->Unit(benchmark::kMillisecond);

void BM_RankGallery(benchmark::State& state) {
    Rng rng(3);
    Eigen::MatrixXd g(state.range(0), 64);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = rng.normal(0.0, 1.0);
    g.rowwise().normalize();
    std::vector<ItemId> ids(static_cast<std::size_t>(g.rows()));
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<ItemId>(i);
    const Gallery gallery = Gallery::from(g, ids);
    const Eigen::VectorXd q = g.row(0).transpose();
    for (auto _ : state) benchmark::DoNotOptimize(rank_gallery(q, gallery, 0, 10));
}
BENCHMARK(BM_RankGallery)->Arg(400)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
