#include "cdisc/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"
#include "cdisc/gradcheck.hpp"
#include "cdisc/random.hpp"

namespace cdisc {

Eigen::VectorXd SubspaceModel::feature(const Eigen::VectorXd& x) const {
    return (hidden_w.transpose() * x + hidden_b).cwiseMax(0.0);
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
    const Eigen::VectorXd e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

}  // namespace

Eigen::VectorXd SubspaceModel::predict(const Eigen::VectorXd& x) const {
    return softmax(out_w.transpose() * feature(x) + out_b);
}

int SubspaceModel::argmax(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd p = predict(x);
    int best = 0;
    for (int i = 1; i < p.size(); ++i)
        if (p(i) > p(best)) best = i;
    return best;
}

SubspaceModel init_subspace(int concept_id, std::vector<AttributeId> attributes, int input_dim, int hidden,
                            std::uint64_t seed) {
    if (input_dim < 1 || hidden < 1) throw ConfigError("subspace dims must be positive");
    SubspaceModel m;
    m.concept_id = concept_id;
    m.attributes = std::move(attributes);
    Rng rng(seed);
    auto xavier = [&rng](Eigen::MatrixXd& w, int fan_in, int fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        w.resize(fan_in, fan_out);
        for (Eigen::Index i = 0; i < w.rows(); ++i)
            for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-limit, limit);
    };
    xavier(m.hidden_w, input_dim, hidden);
    xavier(m.out_w, hidden, m.classes());
    m.hidden_b = Eigen::VectorXd::Zero(hidden);
    m.out_b = Eigen::VectorXd::Zero(m.classes());
    return m;
}

SubspaceGradients zero_gradients(const SubspaceModel& m) {
    return {Eigen::MatrixXd::Zero(m.hidden_w.rows(), m.hidden_w.cols()), Eigen::VectorXd::Zero(m.hidden_b.size()),
            Eigen::MatrixXd::Zero(m.out_w.rows(), m.out_w.cols()), Eigen::VectorXd::Zero(m.out_b.size())};
}

double cross_entropy(const SubspaceModel& m, const Eigen::VectorXd& x, int label, SubspaceGradients* grad) {
    const Eigen::VectorXd pre = m.hidden_w.transpose() * x + m.hidden_b;
    const Eigen::VectorXd h = pre.cwiseMax(0.0);
    const Eigen::VectorXd p = softmax(m.out_w.transpose() * h + m.out_b);
    const double loss = -std::log(std::max(p(label), 1e-300));
    if (grad) {
        Eigen::VectorXd dz = p;
        dz(label) -= 1.0;
        grad->out_w += h * dz.transpose();
        grad->out_b += dz;
        const Eigen::VectorXd dpre = (m.out_w * dz).cwiseProduct((pre.array() > 0.0).matrix().cast<double>());
        grad->hidden_w += x * dpre.transpose();
        grad->hidden_b += dpre;
    }
    return loss;
}

double subspace_gradcheck(int input_dim, int hidden, int attributes, std::uint64_t seed) {
    std::vector<AttributeId> attrs(static_cast<std::size_t>(attributes));
    for (int i = 0; i < attributes; ++i) attrs[static_cast<std::size_t>(i)] = i;
    SubspaceModel m = init_subspace(0, attrs, input_dim, hidden, seed);
    Rng rng(seed ^ 0x5bd1e995ULL);
    for (Eigen::Index i = 0; i < m.hidden_b.size(); ++i) m.hidden_b(i) = rng.uniform(-0.1, 0.1);
    for (Eigen::Index i = 0; i < m.out_b.size(); ++i) m.out_b(i) = rng.uniform(-0.1, 0.1);

    const int n_examples = 4;
    std::vector<Eigen::VectorXd> xs;
    std::vector<int> labels;
    for (int e = 0; e < n_examples; ++e) {
        Eigen::VectorXd x(input_dim);
        for (int d = 0; d < input_dim; ++d) x(d) = rng.normal(0.0, 1.0);
        xs.push_back(x);
        labels.push_back(static_cast<int>(rng.index(static_cast<std::uint64_t>(m.classes()))));
    }
    auto mean_loss = [&](SubspaceGradients* g) {
        double l = 0.0;
        for (int e = 0; e < n_examples; ++e) l += cross_entropy(m, xs[static_cast<std::size_t>(e)],
                                                                labels[static_cast<std::size_t>(e)], g);
        return l / n_examples;
    };
    SubspaceGradients g = zero_gradients(m);
    mean_loss(&g);
    const double scale = 1.0 / n_examples;
    auto loss = [&] { return mean_loss(nullptr); };

    double worst = 0.0;
    worst = std::max(worst, max_gradient_error(loss, m.hidden_w, g.hidden_w * scale));
    worst = std::max(worst, max_gradient_error(loss, m.hidden_b, g.hidden_b * scale));
    worst = std::max(worst, max_gradient_error(loss, m.out_w, g.out_w * scale));
    worst = std::max(worst, max_gradient_error(loss, m.out_b, g.out_b * scale));
    return worst;
}

SubspaceTrainingSet subspace_training_set(const Dataset& ds, const std::vector<AttributeId>& attributes, Split split,
                                          double neg_ratio, Rng& rng) {
    SubspaceTrainingSet set;
    std::vector<ItemId> pool;
    for (ItemId id : ds.splits.get(split)) {
        const Item& item = ds.item(id);
        int label = -1, hits = 0;
        for (std::size_t c = 0; c < attributes.size(); ++c) {
            if (item.has(attributes[c])) {
                label = static_cast<int>(c);
                ++hits;
            }
        }
        if (hits == 0) {
            pool.push_back(id);
        } else if (hits == 1) {
            set.examples.push_back({id, label});
        } else {
            set.excluded.push_back(id);
        }
    }
    set.positives = static_cast<int>(set.examples.size());
    const auto wanted = static_cast<std::size_t>(std::llround(neg_ratio * set.positives));
    const std::size_t take = std::min(wanted, pool.size());
    // Partial Fisher-Yates: the first `take` entries form the sample.
    for (std::size_t i = 0; i < take; ++i) {
        std::swap(pool[i], pool[i + rng.index(pool.size() - i)]);
        set.examples.push_back({pool[i], static_cast<int>(attributes.size())});
    }
    set.negatives = static_cast<int>(take);
    return set;
}

SubspaceModel train_subspace(int concept_id, const std::vector<AttributeId>& attributes, const Dataset& ds,
                             const Eigen::MatrixXd& images, const SubspaceConfig& cfg, std::uint64_t seed,
                             SubspaceTrainLog* log) {
    if (attributes.size() < 2) {
        throw DataError("concept " + std::to_string(concept_id) + " needs at least two attributes for a subspace");
    }
    if (cfg.hidden < 1 || !(cfg.lr > 0.0) || cfg.epochs < 0 || !(cfg.neg_ratio >= 0.0)) {
        throw ConfigError("invalid subspace training config");
    }
    Rng rng(seed);
    SubspaceModel m = init_subspace(concept_id, attributes, static_cast<int>(images.cols()), cfg.hidden, rng.next());
    SubspaceTrainingSet set = subspace_training_set(ds, attributes, Split::train, cfg.neg_ratio, rng);
    if (set.positives == 0) {
        throw DataError("concept " + std::to_string(concept_id) + " has no positive training items");
    }

    std::vector<SubspaceExample> order = set.examples;
    std::vector<double> losses;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<SubspaceExample>(order));
        double total = 0.0;
        for (const auto& ex : order) {
            SubspaceGradients g = zero_gradients(m);
            total += cross_entropy(m, images.row(ex.item).transpose(), ex.label, &g);
            m.hidden_w -= cfg.lr * g.hidden_w;
            m.hidden_b -= cfg.lr * g.hidden_b;
            m.out_w -= cfg.lr * g.out_w;
            m.out_b -= cfg.lr * g.out_b;
        }
        const double mean = total / static_cast<double>(order.size());
        if (!std::isfinite(mean)) throw DivergenceError("subspace training diverged", epoch);
        losses.push_back(mean);
    }
    if (log) {
        log->training_set = std::move(set);
        log->epoch_losses = std::move(losses);
    }
    return m;
}

double SubspaceAccuracy::attribute_accuracy() const {
    return attribute_total ? static_cast<double>(attribute_correct) / attribute_total : 0.0;
}

double SubspaceAccuracy::none_accuracy() const {
    return none_total ? static_cast<double>(none_correct) / none_total : 0.0;
}

SubspaceAccuracy subspace_accuracy(const SubspaceModel& m, const Dataset& ds, const Eigen::MatrixXd& images,
                                   const std::vector<ItemId>& ids) {
    SubspaceAccuracy acc;
    for (ItemId id : ids) {
        const Item& item = ds.item(id);
        int label = -1, hits = 0;
        for (std::size_t c = 0; c < m.attributes.size(); ++c) {
            if (item.has(m.attributes[c])) {
                label = static_cast<int>(c);
                ++hits;
            }
        }
        if (hits > 1) continue;
        const int predicted = m.argmax(images.row(id).transpose());
        if (hits == 0) {
            ++acc.none_total;
            if (predicted == m.none_class()) ++acc.none_correct;
        } else {
            ++acc.attribute_total;
            if (predicted == label) ++acc.attribute_correct;
        }
    }
    return acc;
}

const SubspaceModel* ConceptSubspaces::for_attribute(AttributeId a) const {
    const auto c = assignment.cluster_of(a);
    if (!c) return nullptr;
    const auto it = models.find(*c);
    return it == models.end() ? nullptr : &it->second;
}

ConceptSubspaces train_all_subspaces(const ConceptAssignment& assignment, const Dataset& ds,
                                     const Eigen::MatrixXd& images, const SubspaceConfig& cfg, std::uint64_t seed) {
    ConceptSubspaces out;
    out.assignment = assignment;
    for (int c = 0; c < assignment.k; ++c) {
        const auto members = assignment.members(c);
        if (members.size() < 2) continue;
        const std::uint64_t concept_seed = derive_seed(seed, "subspace_" + std::to_string(c));
        out.models.emplace(c, train_subspace(c, members, ds, images, cfg, concept_seed));
    }
    return out;
}

namespace {

void write_matrix(BinaryWriter& w, const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) w.f64_as_f32(m(i, j));
}

void read_matrix(BinaryReader& r, Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
    m.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = r.f32();
}

}  // namespace

void save_subspace(const SubspaceModel& m, std::uint64_t vocab_hash, std::uint64_t config_hash,
                   const std::filesystem::path& path) {
    BinaryWriter w;
    w.header({{'C', 'F', 'S', 'S'}, 1, vocab_hash, config_hash});
    w.u32(static_cast<std::uint32_t>(m.concept_id));
    w.u32(static_cast<std::uint32_t>(m.attributes.size()));
    for (AttributeId a : m.attributes) w.u32(static_cast<std::uint32_t>(a));
    w.u32(static_cast<std::uint32_t>(m.input_dim()));
    w.u32(static_cast<std::uint32_t>(m.hidden()));
    write_matrix(w, m.hidden_w);
    write_matrix(w, m.hidden_b);
    write_matrix(w, m.out_w);
    write_matrix(w, m.out_b);
    w.save(path);
}

SubspaceModel load_subspace(const std::filesystem::path& path, std::uint64_t* vocab_hash,
                            std::uint64_t* config_hash) {
    auto r = BinaryReader::open(path);
    const auto h = r.header("CFSS");
    SubspaceModel m;
    m.concept_id = static_cast<int>(r.u32());
    const auto n = r.u32();
    if (n < 2 || n > 1u << 20) throw FormatError(r.name() + ": implausible attribute count");
    for (std::uint32_t i = 0; i < n; ++i) m.attributes.push_back(static_cast<AttributeId>(r.u32()));
    const auto d = static_cast<Eigen::Index>(r.u32());
    const auto hidden = static_cast<Eigen::Index>(r.u32());
    if (d < 1 || hidden < 1 || d * hidden > static_cast<Eigen::Index>(r.remaining())) {
        throw FormatError(r.name() + ": bad subspace dims");
    }
    Eigen::MatrixXd hb, ob;
    read_matrix(r, m.hidden_w, d, hidden);
    read_matrix(r, hb, hidden, 1);
    read_matrix(r, m.out_w, hidden, n + 1);
    read_matrix(r, ob, n + 1, 1);
    m.hidden_b = hb.col(0);
    m.out_b = ob.col(0);
    r.expect_end();
    if (vocab_hash) *vocab_hash = h.vocab_hash;
    if (config_hash) *config_hash = h.config_hash;
    return m;
}

std::string subspace_file_name(int concept_id) { return "subspace_" + std::to_string(concept_id) + ".bin"; }

void save_subspace_index(const ConceptSubspaces& subspaces, std::uint64_t vocab_hash, std::uint64_t config_hash,
                         const std::filesystem::path& dir) {
    std::ostringstream out;
    out << "CFSI 1\n";
    out << "vocab_hash " << hex64(vocab_hash) << '\n';
    out << "config_hash " << hex64(config_hash) << '\n';
    for (const auto& [cid, m] : subspaces.models) {
        const auto file = subspace_file_name(cid);
        save_subspace(m, vocab_hash, config_hash, dir / file);
        out << "concept " << cid << ' ' << file << '\n';
    }
    write_text_file(dir / "subspaces", out.str());
}

std::map<int, SubspaceModel> load_subspaces(const std::filesystem::path& dir, std::uint64_t* vocab_hash,
                                            std::uint64_t* config_hash) {
    std::istringstream in(read_text_file(dir / "subspaces"));
    std::string line;
    std::size_t row = 0;
    if (!std::getline(in, line) || line != "CFSI 1") throw FormatError("subspaces: bad magic", 0);
    std::uint64_t vh = 0, ch = 0;
    std::map<int, SubspaceModel> out;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "vocab_hash" || key == "config_hash") {
            std::string v;
            ss >> v;
            (key == "vocab_hash" ? vh : ch) = parse_hex64(v);
        } else if (key == "concept") {
            int cid = 0;
            std::string file;
            if (!(ss >> cid >> file) || file.find('/') != std::string::npos) {
                throw FormatError("subspaces: malformed concept line", row);
            }
            std::uint64_t fvh = 0, fch = 0;
            SubspaceModel m = load_subspace(dir / file, &fvh, &fch);
            if (fvh != vh) throw HashMismatchError(file + ": vocabulary hash differs from the subspace index");
            if (fch != ch) throw HashMismatchError(file + ": config hash differs from the subspace index");
            if (m.concept_id != cid) throw FormatError("subspaces: " + file + " holds another concept", row);
            out.emplace(cid, std::move(m));
        } else {
            throw FormatError("subspaces: unknown key '" + key + "'", row);
        }
    }
    if (vocab_hash) *vocab_hash = vh;
    if (config_hash) *config_hash = ch;
    return out;
}

}  // namespace cdisc
