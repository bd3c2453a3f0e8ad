#include "cdisc/word2vec.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"
#include "cdisc/gradcheck.hpp"
#include "cdisc/random.hpp"

namespace cdisc {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(sigmoid(z)) without overflow for large |z|.
double log_sigmoid(double z) { return z >= 0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z)); }

}  // namespace

Vocab build_vocab(const std::vector<std::vector<std::string>>& descriptions, int min_count) {
    if (descriptions.empty()) throw DataError("build_vocab: no descriptions");
    std::map<std::string, int> counts;
    for (const auto& d : descriptions)
        for (const auto& w : d) ++counts[w];

    std::vector<std::pair<std::string, int>> kept;
    for (const auto& [w, n] : counts)
        if (n >= min_count) kept.emplace_back(w, n);
    if (kept.empty()) throw DataError("build_vocab: every word occurs fewer than " + std::to_string(min_count) + " times");

    std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> labels;
    labels.reserve(kept.size());
    for (auto& [w, n] : kept) labels.push_back(std::move(w));
    return Vocab(std::move(labels));
}

double negative_sampling_loss(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output,
                              std::span<const NegativeSamplingTerm> terms, Eigen::MatrixXd* grad_input,
                              Eigen::MatrixXd* grad_output) {
    double loss = 0.0;
    for (const auto& t : terms) {
        const auto v = input.row(t.center);
        auto score = [&](AttributeId o, double label) {
            const double z = output.row(o).dot(v);
            loss -= label > 0 ? log_sigmoid(z) : log_sigmoid(-z);
            // d loss / d z = sigmoid(z) - label
            const double g = sigmoid(z) - label;
            if (grad_input) grad_input->row(t.center) += g * output.row(o);
            if (grad_output) grad_output->row(o) += g * v;
        };
        score(t.context, 1.0);
        for (AttributeId n : t.negatives) score(n, 0.0);
    }
    return loss;
}

double neg_sample_gradcheck(const std::vector<std::vector<AttributeId>>& corpus, int dim, int negatives,
                            std::uint64_t seed) {
    int vocab = 0;
    for (const auto& d : corpus)
        for (AttributeId a : d) vocab = std::max(vocab, a + 1);
    if (vocab == 0 || vocab > 10) throw DataError("gradcheck corpus must hold 1..10 words");

    Rng rng(seed);
    std::vector<NegativeSamplingTerm> terms;
    for (const auto& d : corpus) {
        for (std::size_t i = 0; i < d.size(); ++i) {
            for (std::size_t j = 0; j < d.size(); ++j) {
                if (i == j) continue;
                NegativeSamplingTerm t{d[i], d[j], {}};
                for (int n = 0; n < negatives; ++n) t.negatives.push_back(static_cast<AttributeId>(rng.index(static_cast<std::uint64_t>(vocab))));
                terms.push_back(std::move(t));
            }
        }
    }

    Eigen::MatrixXd in(vocab, dim), out(vocab, dim);
    for (Eigen::Index i = 0; i < in.size(); ++i) in.data()[i] = rng.uniform(-0.5, 0.5);
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = rng.uniform(-0.5, 0.5);

    Eigen::MatrixXd gin = Eigen::MatrixXd::Zero(vocab, dim), gout = Eigen::MatrixXd::Zero(vocab, dim);
    negative_sampling_loss(in, out, terms, &gin, &gout);
    auto loss = [&] { return negative_sampling_loss(in, out, terms); };
    return std::max(max_gradient_error(loss, in, gin), max_gradient_error(loss, out, gout));
}

SemanticEmbeddings train_skipgram(const Dataset& ds, const SkipGramConfig& cfg, std::uint64_t seed) {
    if (cfg.dim < 2) throw ConfigError("word2vec dim must be at least 2");
    if (cfg.window < 0 || cfg.negatives < 0 || cfg.epochs < 0 || !(cfg.lr > 0.0)) {
        throw ConfigError("word2vec window, negatives and epochs must be non-negative and lr positive");
    }
    const int vocab = ds.vocab.size();
    Rng rng(seed);

    SemanticEmbeddings emb;
    emb.vectors.resize(vocab, cfg.dim);
    for (Eigen::Index i = 0; i < emb.vectors.size(); ++i) {
        emb.vectors.data()[i] = rng.uniform(-0.5, 0.5) / cfg.dim;
    }
    emb.context_vectors = Eigen::MatrixXd::Zero(vocab, cfg.dim);

    const auto& train = ds.splits.train;
    std::vector<int> counts(static_cast<std::size_t>(vocab), 0);
    for (ItemId id : train)
        for (AttributeId a : ds.item(id).description) ++counts[static_cast<std::size_t>(a)];
    auto kept = [&](AttributeId a) { return counts[static_cast<std::size_t>(a)] >= cfg.min_count; };

    // Filtered token sequences and the number of (center, context) pairs.
    std::vector<std::vector<AttributeId>> docs;
    std::size_t pairs_per_epoch = 0;
    for (ItemId id : train) {
        std::vector<AttributeId> doc;
        for (AttributeId a : ds.item(id).description)
            if (kept(a)) doc.push_back(a);
        const auto n = doc.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const auto dist = i > j ? i - j : j - i;
                if (cfg.window == 0 || dist <= static_cast<std::size_t>(cfg.window)) ++pairs_per_epoch;
            }
        }
        docs.push_back(std::move(doc));
    }
    if (pairs_per_epoch == 0) throw DataError("word2vec: descriptions yield no (center, context) pairs");
    if (cfg.epochs == 0) return emb;

    // Unigram^0.75 noise distribution.
    std::vector<double> cdf;
    std::vector<AttributeId> noise_ids;
    double total = 0.0;
    for (AttributeId a = 0; a < vocab; ++a) {
        if (!kept(a)) continue;
        total += std::pow(static_cast<double>(counts[static_cast<std::size_t>(a)]), 0.75);
        cdf.push_back(total);
        noise_ids.push_back(a);
    }
    auto draw_noise = [&] {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        if (it == cdf.end()) --it;
        return noise_ids[static_cast<std::size_t>(it - cdf.begin())];
    };

    const double total_pairs = static_cast<double>(pairs_per_epoch) * cfg.epochs;
    double processed = 0.0;
    std::vector<std::size_t> order(docs.size());
    Eigen::VectorXd grad_center(cfg.dim);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t d : order) {
            const auto& doc = docs[d];
            for (std::size_t i = 0; i < doc.size(); ++i) {
                for (std::size_t j = 0; j < doc.size(); ++j) {
                    if (i == j) continue;
                    const auto dist = i > j ? i - j : j - i;
                    if (cfg.window != 0 && dist > static_cast<std::size_t>(cfg.window)) continue;

                    const double lr = cfg.lr * std::max(1e-4, 1.0 - processed / total_pairs);
                    processed += 1.0;
                    const AttributeId center = doc[i];
                    auto v = emb.vectors.row(center);
                    grad_center.setZero();
                    auto step = [&](AttributeId o, double label) {
                        auto u = emb.context_vectors.row(o);
                        const double g = sigmoid(u.dot(v)) - label;
                        grad_center += g * u.transpose();
                        u -= lr * g * v;
                    };
                    step(doc[j], 1.0);
                    for (int n = 0; n < cfg.negatives; ++n) {
                        const AttributeId neg = draw_noise();
                        if (neg == doc[j]) continue;
                        step(neg, 0.0);
                    }
                    v -= lr * grad_center.transpose();
                }
            }
        }
        if (!emb.vectors.allFinite()) throw DivergenceError("word2vec produced non-finite vectors", epoch);
    }
    return emb;
}

void save_word2vec(const SemanticEmbeddings& emb, std::uint64_t vocab_hash, std::uint64_t config_hash,
                   const std::filesystem::path& path) {
    BinaryWriter w;
    w.header({{'C', 'F', 'W', '2'}, 1, vocab_hash, config_hash});
    w.u32(static_cast<std::uint32_t>(emb.size()));
    w.u32(static_cast<std::uint32_t>(emb.dim()));
    for (Eigen::Index r = 0; r < emb.vectors.rows(); ++r)
        for (Eigen::Index c = 0; c < emb.vectors.cols(); ++c) w.f64_as_f32(emb.vectors(r, c));
    w.save(path);
}

SemanticEmbeddings load_word2vec(const std::filesystem::path& path, std::uint64_t* vocab_hash,
                                 std::uint64_t* config_hash) {
    auto r = BinaryReader::open(path);
    const auto h = r.header("CFW2");
    const auto n = r.u32();
    const auto dim = r.u32();
    SemanticEmbeddings emb;
    emb.vectors.resize(n, dim);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < dim; ++j) emb.vectors(i, j) = r.f32();
    r.expect_end();
    emb.context_vectors = Eigen::MatrixXd::Zero(n, dim);
    if (vocab_hash) *vocab_hash = h.vocab_hash;
    if (config_hash) *config_hash = h.config_hash;
    return emb;
}

}  // namespace cdisc
