#include "cdisc/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"
#include "cdisc/random.hpp"

namespace cdisc {

Eigen::VectorXd EmbeddingModel::attribute(AttributeId a) const {
    if (a < 0 || a >= vocab_size()) throw NotFoundError("attribute id " + std::to_string(a) + " out of range");
    Eigen::VectorXd w = attr_embed.row(a).transpose();
    const double n = w.norm();
    if (n == 0.0) throw DataError("attribute " + std::to_string(a) + " has a zero embedding");
    return w / n;
}

double learning_rate_at(const EmbeddingTrainConfig& cfg, int epoch) {
    return cfg.lr / std::pow(cfg.lr_decay, epoch / cfg.decay_every);
}

EmbeddingModel init_embedding(int feature_dim, int dim, int vocab_size, double margin, std::uint64_t seed) {
    Rng rng(seed);
    EmbeddingModel m;
    m.margin = margin;
    m.image_proj.resize(feature_dim, dim);
    m.attr_embed.resize(vocab_size, dim);
    for (Eigen::Index i = 0; i < m.image_proj.size(); ++i) m.image_proj.data()[i] = rng.uniform(-0.05, 0.05);
    for (Eigen::Index i = 0; i < m.attr_embed.size(); ++i) m.attr_embed.data()[i] = rng.uniform(-0.05, 0.05);
    return m;
}

namespace {

void check_description(std::span<const AttributeId> description, Eigen::Index vocab) {
    if (description.empty()) throw DataError("empty description");
    std::set<AttributeId> seen;
    for (AttributeId a : description) {
        if (a < 0 || a >= vocab) throw DataError("attribute id " + std::to_string(a) + " out of range");
        if (!seen.insert(a).second) throw DataError("duplicate attribute " + std::to_string(a) + " in description");
    }
}

Eigen::VectorXd mean_rows(std::span<const AttributeId> description, const Eigen::MatrixXd& attr_embed) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(attr_embed.cols());
    for (AttributeId a : description) v += attr_embed.row(a).transpose();
    return v / static_cast<double>(description.size());
}

// Gradient of a loss w.r.t. u given its gradient w.r.t. u/|u|.
Eigen::VectorXd through_normalization(const Eigen::VectorXd& unit, double norm, const Eigen::VectorXd& grad_unit) {
    return (grad_unit - unit * unit.dot(grad_unit)) / norm;
}

}  // namespace

Eigen::VectorXd encode_description(std::span<const AttributeId> description, const Eigen::MatrixXd& attr_embed) {
    check_description(description, attr_embed.rows());
    Eigen::VectorXd v = mean_rows(description, attr_embed);
    const double n = v.norm();
    if (n == 0.0) throw DataError("description embeds to the zero vector");
    return v / n;
}

Eigen::VectorXd project_image(const Eigen::VectorXd& feature, const Eigen::MatrixXd& image_proj, bool normalize) {
    if (feature.size() != image_proj.rows()) {
        throw DataError("feature length " + std::to_string(feature.size()) + " != " + std::to_string(image_proj.rows()));
    }
    Eigen::VectorXd x = image_proj.transpose() * feature;
    if (!normalize) return x;
    const double n = x.norm();
    if (n == 0.0) throw DataError("image projects to the zero vector; direction undefined");
    return x / n;
}

HingeResult bidirectional_hinge(const Eigen::MatrixXd& images, const Eigen::MatrixXd& texts,
                                const std::vector<std::vector<bool>>& same, double margin) {
    const Eigen::Index b = images.rows();
    if (b < 2) throw DataError("contrastive loss needs a batch of at least 2 for in-batch negatives");
    const Eigen::MatrixXd s = images * texts.transpose();  // s(i, j) = d(x_i, v_j)
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(b, b);
    HingeResult r;
    for (Eigen::Index i = 0; i < b; ++i) {
        for (Eigen::Index j = 0; j < b; ++j) {
            if (i == j || same[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
            // image x_i against non-matching description v_j
            const double h1 = margin - s(i, i) + s(i, j);
            if (h1 > 0.0) {
                r.loss += h1;
                g(i, i) -= 1.0;
                g(i, j) += 1.0;
                ++r.active_terms;
            }
            // description v_i against non-matching image x_j
            const double h2 = margin - s(i, i) + s(j, i);
            if (h2 > 0.0) {
                r.loss += h2;
                g(i, i) -= 1.0;
                g(j, i) += 1.0;
                ++r.active_terms;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(b);
    r.loss *= inv;
    g *= inv;
    r.grad_images = g * texts;
    r.grad_texts = g.transpose() * images;
    return r;
}

ContrastiveResult contrastive_loss(const EmbeddingModel& model, const Eigen::MatrixXd& features,
                                   std::span<const std::vector<AttributeId>> descriptions) {
    const auto b = static_cast<Eigen::Index>(descriptions.size());
    if (features.rows() != b) throw DataError("feature and description batch sizes differ");
    if (b < 2) throw DataError("contrastive loss needs a batch of at least 2 for in-batch negatives");
    const Eigen::Index d = model.dim();

    Eigen::MatrixXd raw_x(b, d), unit_x(b, d), raw_v(b, d), unit_v(b, d);
    Eigen::VectorXd norm_x(b), norm_v(b);
    std::vector<std::vector<AttributeId>> sorted(descriptions.begin(), descriptions.end());
    for (Eigen::Index i = 0; i < b; ++i) {
        const auto& desc = descriptions[static_cast<std::size_t>(i)];
        check_description(desc, model.attr_embed.rows());
        raw_x.row(i) = (model.image_proj.transpose() * features.row(i).transpose()).transpose();
        raw_v.row(i) = mean_rows(desc, model.attr_embed).transpose();
        norm_x(i) = raw_x.row(i).norm();
        norm_v(i) = raw_v.row(i).norm();
        if (norm_x(i) == 0.0 || norm_v(i) == 0.0) throw DataError("zero embedding in contrastive batch");
        unit_x.row(i) = raw_x.row(i) / norm_x(i);
        unit_v.row(i) = raw_v.row(i) / norm_v(i);
        std::sort(sorted[static_cast<std::size_t>(i)].begin(), sorted[static_cast<std::size_t>(i)].end());
    }
    std::vector<std::vector<bool>> same(static_cast<std::size_t>(b), std::vector<bool>(static_cast<std::size_t>(b)));
    for (std::size_t i = 0; i < sorted.size(); ++i)
        for (std::size_t j = 0; j < sorted.size(); ++j) same[i][j] = sorted[i] == sorted[j];

    const HingeResult h = bidirectional_hinge(unit_x, unit_v, same, model.margin);

    ContrastiveResult r;
    r.loss = h.loss;
    r.grad_image_proj = Eigen::MatrixXd::Zero(model.image_proj.rows(), d);
    r.grad_attr_embed = Eigen::MatrixXd::Zero(model.attr_embed.rows(), d);
    if (h.active_terms == 0) return r;
    for (Eigen::Index i = 0; i < b; ++i) {
        const Eigen::VectorXd gx =
            through_normalization(unit_x.row(i).transpose(), norm_x(i), h.grad_images.row(i).transpose());
        r.grad_image_proj += features.row(i).transpose() * gx.transpose();

        const auto& desc = descriptions[static_cast<std::size_t>(i)];
        const Eigen::VectorXd gv =
            through_normalization(unit_v.row(i).transpose(), norm_v(i), h.grad_texts.row(i).transpose()) /
            static_cast<double>(desc.size());
        for (AttributeId a : desc) r.grad_attr_embed.row(a) += gv.transpose();
    }
    return r;
}

namespace {

struct Batch {
    Eigen::MatrixXd features;
    std::vector<std::vector<AttributeId>> descriptions;
};

Batch gather(const Dataset& ds, const Eigen::MatrixXd& features, std::span<const ItemId> ids) {
    Batch b;
    b.features.resize(static_cast<Eigen::Index>(ids.size()), features.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        b.features.row(static_cast<Eigen::Index>(i)) = features.row(ids[i]);
        b.descriptions.push_back(ds.item(ids[i]).description);
    }
    return b;
}

}  // namespace

double dataset_loss(const EmbeddingModel& model, const Dataset& ds, const Eigen::MatrixXd& features,
                    const std::vector<ItemId>& ids, int batch_size) {
    double total = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start + 1 < ids.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(ids.size(), start + static_cast<std::size_t>(batch_size));
        if (end - start < 2) break;
        const Batch b = gather(ds, features, std::span<const ItemId>(ids).subspan(start, end - start));
        total += contrastive_loss(model, b.features, b.descriptions).loss;
        ++batches;
    }
    return batches ? total / batches : 0.0;
}

EmbeddingModel train_embedding(const Dataset& ds, const Eigen::MatrixXd& features, const EmbeddingTrainConfig& cfg,
                               std::uint64_t seed, EmbeddingTrainLog* log) {
    if (!(cfg.lr > 0.0) || !(cfg.lr_decay > 0.0) || cfg.decay_every < 1 || cfg.batch_size < 2 ||
        !(cfg.margin > 0.0) || cfg.epochs < 0 || cfg.dim < 1) {
        throw ConfigError("embedding training config values must be positive (batch_size >= 2)");
    }
    if (features.rows() != static_cast<Eigen::Index>(ds.size())) {
        throw DataError("need one GAP feature row per item");
    }
    Rng rng(seed);
    EmbeddingModel model = init_embedding(static_cast<int>(features.cols()), cfg.dim, ds.vocab.size(), cfg.margin, rng.next());

    std::vector<ItemId> order = ds.splits.train;
    if (order.size() < 2) throw DataError("training split needs at least 2 items");
    if (log) log->initial_loss = dataset_loss(model, ds, features, ds.splits.train, cfg.batch_size);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = learning_rate_at(cfg, epoch);
        rng.shuffle(std::span<ItemId>(order));
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            if (end - start < 2) break;
            const Batch b = gather(ds, features, std::span<const ItemId>(order).subspan(start, end - start));
            const ContrastiveResult r = contrastive_loss(model, b.features, b.descriptions);
            if (!std::isfinite(r.loss)) throw DivergenceError("contrastive loss became non-finite", epoch);
            model.image_proj -= lr * r.grad_image_proj;
            model.attr_embed -= lr * r.grad_attr_embed;
            epoch_loss += r.loss;
            ++batches;
        }
        const double mean = batches ? epoch_loss / batches : 0.0;
        if (!std::isfinite(mean) || !model.image_proj.allFinite() || !model.attr_embed.allFinite()) {
            throw DivergenceError("embedding parameters became non-finite", epoch);
        }
        if (log) log->epoch_losses.push_back(mean);
    }
    if (log) log->final_loss = dataset_loss(model, ds, features, ds.splits.train, cfg.batch_size);
    return model;
}

Eigen::MatrixXd embed_images(const EmbeddingModel& model, const Eigen::MatrixXd& features) {
    Eigen::MatrixXd x = features * model.image_proj;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double n = x.row(i).norm();
        if (n > 0.0) x.row(i) /= n;
    }
    return x;
}

namespace {

Eigen::MatrixXd embed_texts(const EmbeddingModel& model, const Dataset& ds, const std::vector<ItemId>& ids) {
    Eigen::MatrixXd v(static_cast<Eigen::Index>(ids.size()), model.dim());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        v.row(static_cast<Eigen::Index>(i)) = encode_description(ds.item(ids[i]).description, model.attr_embed).transpose();
    }
    return v;
}

std::vector<std::vector<AttributeId>> sorted_descriptions(const Dataset& ds, const std::vector<ItemId>& ids) {
    std::vector<std::vector<AttributeId>> out;
    for (ItemId id : ids) {
        auto d = ds.item(id).description;
        std::sort(d.begin(), d.end());
        out.push_back(std::move(d));
    }
    return out;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Separation embedding_separation(const EmbeddingModel& model, const Dataset& ds, const Eigen::MatrixXd& features,
                                const std::vector<ItemId>& ids) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), model.dim());
    const Eigen::MatrixXd all = embed_images(model, features);
    for (std::size_t i = 0; i < ids.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = all.row(ids[i]);
    const Eigen::MatrixXd v = embed_texts(model, ds, ids);
    const auto desc = sorted_descriptions(ds, ids);
    const Eigen::MatrixXd s = x * v.transpose();

    Separation sep;
    double match = 0.0, other = 0.0;
    long n_match = 0, n_other = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = 0; j < ids.size(); ++j) {
            const double d = s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (i == j) {
                match += d;
                ++n_match;
            } else if (desc[i] != desc[j]) {
                other += d;
                ++n_other;
            }
        }
    }
    sep.matching = n_match ? match / static_cast<double>(n_match) : 0.0;
    sep.non_matching = n_other ? other / static_cast<double>(n_other) : 0.0;
    return sep;
}

MedianRanks retrieval_sanity(const EmbeddingModel& model, const Dataset& ds, const Eigen::MatrixXd& features,
                             const std::vector<ItemId>& ids) {
    const Eigen::MatrixXd all = embed_images(model, features);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(ids.size()), model.dim());
    for (std::size_t i = 0; i < ids.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = all.row(ids[i]);
    const Eigen::MatrixXd v = embed_texts(model, ds, ids);
    const auto desc = sorted_descriptions(ds, ids);
    const Eigen::MatrixXd s = x * v.transpose();  // s(i, j): image i vs description j
    const auto n = static_cast<Eigen::Index>(ids.size());

    auto rank = [&](Eigen::Index anchor, bool anchor_is_text) {
        double best = -2.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (desc[static_cast<std::size_t>(j)] != desc[static_cast<std::size_t>(anchor)]) continue;
            best = std::max(best, anchor_is_text ? s(j, anchor) : s(anchor, j));
        }
        double r = 1.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (desc[static_cast<std::size_t>(j)] == desc[static_cast<std::size_t>(anchor)]) continue;
            if ((anchor_is_text ? s(j, anchor) : s(anchor, j)) > best) r += 1.0;
        }
        return r;
    };

    std::vector<double> t2i, i2t;
    for (Eigen::Index i = 0; i < n; ++i) {
        t2i.push_back(rank(i, true));
        i2t.push_back(rank(i, false));
    }
    return {median(t2i), median(i2t)};
}

void save_embedding(const EmbeddingModel& model, std::uint64_t vocab_hash, std::uint64_t config_hash,
                    const std::filesystem::path& path) {
    BinaryWriter w;
    w.header({{'C', 'F', 'E', 'M'}, 1, vocab_hash, config_hash});
    w.u32(static_cast<std::uint32_t>(model.feature_dim()));
    w.u32(static_cast<std::uint32_t>(model.dim()));
    w.u32(static_cast<std::uint32_t>(model.vocab_size()));
    w.f64_as_f32(model.margin);
    for (const auto* m : {&model.image_proj, &model.attr_embed})
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) w.f64_as_f32((*m)(r, c));
    w.save(path);
}

EmbeddingModel load_embedding(const std::filesystem::path& path, std::uint64_t* vocab_hash,
                              std::uint64_t* config_hash) {
    auto r = BinaryReader::open(path);
    const auto h = r.header("CFEM");
    const auto k = r.u32();
    const auto d = r.u32();
    const auto m = r.u32();
    EmbeddingModel model;
    model.margin = r.f32();
    model.image_proj.resize(k, d);
    model.attr_embed.resize(m, d);
    for (auto* mat : {&model.image_proj, &model.attr_embed})
        for (Eigen::Index i = 0; i < mat->rows(); ++i)
            for (Eigen::Index j = 0; j < mat->cols(); ++j) (*mat)(i, j) = r.f32();
    r.expect_end();
    if (!model.image_proj.allFinite() || !model.attr_embed.allFinite()) {
        throw FormatError(path.filename().string() + ": non-finite weights");
    }
    if (vocab_hash) *vocab_hash = h.vocab_hash;
    if (config_hash) *config_hash = h.config_hash;
    return model;
}

}  // namespace cdisc
