#include "cdisc/concepts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"
#include "cdisc/random.hpp"

namespace cdisc {

FeatureMode parse_feature_mode(std::string_view name) {
    if (name == "joint") return FeatureMode::joint;
    if (name == "spatial_only") return FeatureMode::spatial_only;
    if (name == "semantic_only") return FeatureMode::semantic_only;
    throw ConfigError("unknown feature mode '" + std::string(name) + "'");
}

std::string_view feature_mode_name(FeatureMode mode) {
    switch (mode) {
        case FeatureMode::joint: return "joint";
        case FeatureMode::spatial_only: return "spatial_only";
        case FeatureMode::semantic_only: return "semantic_only";
    }
    return "?";
}

AttributeFeatures build_features(const AamSet& aams, const SemanticEmbeddings& semantic, FeatureMode mode,
                                 const Vocab* vocab) {
    auto name = [&](AttributeId a) { return vocab ? "'" + vocab->label(a) + "'" : std::to_string(a); };
    const Eigen::Index cells = static_cast<Eigen::Index>(aams.dims.height) * aams.dims.width;
    const Eigen::Index wdim = semantic.dim();
    const Eigen::Index spatial = mode == FeatureMode::semantic_only ? 0 : cells;
    const Eigen::Index words = mode == FeatureMode::spatial_only ? 0 : wdim;

    AttributeFeatures out;
    for (const auto& [a, m] : aams.maps) {
        if (a >= semantic.size()) throw DataError("attribute " + name(a) + " has no word vector");
        out.attributes.push_back(a);
    }
    out.rows.resize(static_cast<Eigen::Index>(out.attributes.size()), spatial + words);
    for (std::size_t r = 0; r < out.attributes.size(); ++r) {
        const AttributeId a = out.attributes[r];
        const auto row = static_cast<Eigen::Index>(r);
        if (spatial) {
            // Row-major vectorization of the H x W map.
            const auto& g = aams.maps.at(a).grid;
            Eigen::VectorXd v(cells);
            for (Eigen::Index i = 0; i < g.rows(); ++i)
                for (Eigen::Index j = 0; j < g.cols(); ++j) v(i * g.cols() + j) = g(i, j);
            const double n = v.norm();
            if (n == 0.0) throw DataError("degenerate feature: AAM of attribute " + name(a) + " is zero");
            out.rows.row(row).head(spatial) = v.transpose() / n;
        }
        if (words) {
            const Eigen::VectorXd e = semantic.vector(a);
            const double n = e.norm();
            if (n == 0.0) throw DataError("degenerate feature: word vector of attribute " + name(a) + " is zero");
            out.rows.row(row).tail(words) = e.transpose() / n;
        }
    }
    return out;
}

std::optional<int> ConceptAssignment::cluster_of(AttributeId a) const {
    for (std::size_t i = 0; i < attributes.size(); ++i)
        if (attributes[i] == a) return cluster[i];
    return std::nullopt;
}

std::vector<AttributeId> ConceptAssignment::members(int c) const {
    std::vector<AttributeId> out;
    for (std::size_t i = 0; i < attributes.size(); ++i)
        if (cluster[i] == c) out.push_back(attributes[i]);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

struct LloydRun {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    std::vector<double> history;
};

Eigen::MatrixXd plus_plus_seeds(const Eigen::MatrixXd& x, int k, Rng& rng) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd c(k, x.cols());
    c.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n))));
    Eigen::VectorXd d2 = (x.rowwise() - c.row(0)).rowwise().squaredNorm();
    for (int j = 1; j < k; ++j) {
        const double total = d2.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(n)));
        }
        c.row(j) = x.row(pick);
        d2 = d2.cwiseMin((x.rowwise() - c.row(j)).rowwise().squaredNorm());
    }
    return c;
}

LloydRun lloyd(const Eigen::MatrixXd& x, int k, Rng& rng, int max_iterations) {
    const Eigen::Index n = x.rows();
    LloydRun run;
    run.centroids = plus_plus_seeds(x, k, rng);
    run.labels.assign(static_cast<std::size_t>(n), -1);
    std::vector<double> cost(static_cast<std::size_t>(n));

    for (int iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (x.row(i) - run.centroids.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            auto& label = run.labels[static_cast<std::size_t>(i)];
            if (label != best) changed = true;
            label = best;
            cost[static_cast<std::size_t>(i)] = best_d;
            inertia += best_d;
        }
        run.history.push_back(inertia);
        run.inertia = inertia;
        if (!changed && iter > 0) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(run.labels[static_cast<std::size_t>(i)]) += x.row(i);
            ++counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                run.centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
                continue;
            }
            // Empty cluster: re-seed from the point farthest from its centroid.
            const auto far = static_cast<Eigen::Index>(
                std::max_element(cost.begin(), cost.end()) - cost.begin());
            run.centroids.row(c) = x.row(far);
            cost[static_cast<std::size_t>(far)] = 0.0;
        }
    }
    return run;
}

}  // namespace

ConceptAssignment kmeans(const AttributeFeatures& features, int k, std::uint64_t seed, int restarts,
                         int max_iterations) {
    const auto n = static_cast<int>(features.rows.rows());
    if (k < 1) throw DataError("kmeans: k must be at least 1");
    if (k > n) throw DataError("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(n) + " points");
    if (restarts < 1) throw ConfigError("kmeans: restarts must be at least 1");

    Rng rng(seed);
    LloydRun best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng run_rng(rng.next());
        LloydRun run = lloyd(features.rows, k, run_rng, max_iterations);
        if (run.inertia < best.inertia) best = std::move(run);
    }

    std::vector<int> relabel(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int& l : best.labels) {
        auto& m = relabel[static_cast<std::size_t>(l)];
        if (m < 0) m = next++;
        l = m;
    }
    ConceptAssignment out;
    out.k = k;
    out.attributes = features.attributes;
    out.cluster = best.labels;
    out.centroids.resize(k, features.rows.cols());
    for (int c = 0; c < k; ++c) {
        int target = relabel[static_cast<std::size_t>(c)];
        if (target < 0) target = next++;
        out.centroids.row(target) = best.centroids.row(c);
    }
    out.inertia = best.inertia;
    out.inertia_history = std::move(best.history);
    return out;
}

ClusterScores cluster_scores(std::span<const int> clusters, std::span<const int> classes) {
    if (clusters.empty()) throw DataError("cluster_scores: empty assignment");
    if (clusters.size() != classes.size()) throw DataError("cluster_scores: length mismatch");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> pk, pc;
    const double n = static_cast<double>(clusters.size());
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        joint[{clusters[i], classes[i]}] += 1.0;
        pk[clusters[i]] += 1.0;
        pc[classes[i]] += 1.0;
    }
    auto entropy = [n](const std::map<int, double>& counts) {
        double h = 0.0;
        for (const auto& [key, c] : counts) h -= (c / n) * std::log(c / n);
        return h;
    };
    const double h_class = entropy(pc);
    const double h_cluster = entropy(pk);
    double h_class_given_cluster = 0.0, h_cluster_given_class = 0.0;
    for (const auto& [kc, c] : joint) {
        h_class_given_cluster -= (c / n) * std::log(c / pk[kc.first]);
        h_cluster_given_class -= (c / n) * std::log(c / pc[kc.second]);
    }
    ClusterScores s;
    s.homogeneity = h_class == 0.0 ? 1.0 : 1.0 - h_class_given_cluster / h_class;
    s.completeness = h_cluster == 0.0 ? 1.0 : 1.0 - h_cluster_given_class / h_cluster;
    s.v_measure = s.homogeneity + s.completeness > 0.0
                      ? 2.0 * s.homogeneity * s.completeness / (s.homogeneity + s.completeness)
                      : 0.0;
    return s;
}

ClusterScores cluster_scores(const ConceptAssignment& assignment, const GroundTruth& truth) {
    std::vector<int> classes;
    for (AttributeId a : assignment.attributes) {
        if (a < 0 || static_cast<std::size_t>(a) >= truth.concept_of.size()) {
            throw DataError("attribute " + std::to_string(a) + " has no ground-truth concept");
        }
        classes.push_back(truth.concept_of[static_cast<std::size_t>(a)]);
    }
    return cluster_scores(assignment.cluster, classes);
}

Discovery discover(const Dataset& ds, const AamSet& aams, const SemanticEmbeddings& semantic, int k,
                   std::uint64_t seed, int restarts, FeatureMode mode) {
    const AttributeFeatures features = build_features(aams, semantic, mode, &ds.vocab);
    Discovery d;
    d.assignment = kmeans(features, k, seed, restarts);
    if (ds.ground_truth) d.scores = cluster_scores(d.assignment, *ds.ground_truth);
    return d;
}

Discovery discover(const Dataset& ds, const EmbeddingModel& model, const SemanticEmbeddings& semantic, int k,
                   std::uint64_t seed, int restarts, FeatureMode mode) {
    return discover(ds, compute_all_aams(ds, model), semantic, k, seed, restarts, mode);
}

namespace {

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9f", v);
    return buf;
}

std::vector<std::string> text_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    return out;
}

}  // namespace

void save_concepts(const ConceptAssignment& a, const Vocab& vocab, std::uint64_t config_hash,
                   const std::filesystem::path& path) {
    std::ostringstream out;
    out << "# CFCT 1\n";
    out << "# vocab_hash " << hex64(vocab.hash()) << '\n';
    out << "# config_hash " << hex64(config_hash) << '\n';
    out << "# k " << a.k << '\n';
    for (std::size_t i = 0; i < a.attributes.size(); ++i) {
        out << vocab.label(a.attributes[i]) << '\t' << a.cluster[i] << '\n';
    }
    write_text_file(path, out.str());
}

ConceptAssignment load_concepts(const std::filesystem::path& path, const Vocab& vocab, std::uint64_t* vocab_hash,
                                std::uint64_t* config_hash) {
    const auto lines = text_lines(read_text_file(path));
    ConceptAssignment a;
    bool magic = false;
    std::uint64_t vh = 0, ch = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string key, value;
            ss >> key >> value;
            if (key == "CFCT") {
                if (value != "1") throw FormatError("concepts.tsv: unsupported version", i);
                magic = true;
            } else if (key == "vocab_hash") {
                vh = parse_hex64(value);
            } else if (key == "config_hash") {
                ch = parse_hex64(value);
            } else if (key == "k") {
                a.k = std::stoi(value);
            }
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("concepts.tsv: expected label<TAB>cluster", i);
        const auto id = vocab.find(line.substr(0, tab));
        if (!id) throw FormatError("concepts.tsv: unknown attribute '" + line.substr(0, tab) + "'", i);
        int c = 0;
        try {
            c = std::stoi(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw FormatError("concepts.tsv: bad cluster id", i);
        }
        a.attributes.push_back(*id);
        a.cluster.push_back(c);
    }
    if (!magic) throw FormatError("concepts.tsv: missing CFCT header");
    if (a.k < 1) throw FormatError("concepts.tsv: missing k");
    for (std::size_t i = 0; i < a.cluster.size(); ++i) {
        if (a.cluster[i] < 0 || a.cluster[i] >= a.k) throw FormatError("concepts.tsv: cluster id out of range", i);
    }
    if (vocab_hash) *vocab_hash = vh;
    if (config_hash) *config_hash = ch;
    return a;
}

void save_scores(const std::optional<ClusterScores>& scores, std::uint64_t vocab_hash, std::uint64_t config_hash,
                 const std::filesystem::path& path) {
    std::ostringstream out;
    out << "CFSC 1\n";
    out << "vocab_hash " << hex64(vocab_hash) << '\n';
    out << "config_hash " << hex64(config_hash) << '\n';
    if (scores) {
        out << "homogeneity " << fixed(scores->homogeneity) << '\n';
        out << "completeness " << fixed(scores->completeness) << '\n';
        out << "v_measure " << fixed(scores->v_measure) << '\n';
    } else {
        out << "ground_truth none\n";
    }
    write_text_file(path, out.str());
}

std::optional<ClusterScores> load_scores(const std::filesystem::path& path, std::uint64_t* vocab_hash,
                                         std::uint64_t* config_hash) {
    const auto lines = text_lines(read_text_file(path));
    if (lines.empty() || lines[0] != "CFSC 1") throw FormatError("scores: bad magic", 0);
    std::map<std::string, std::string> kv;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::istringstream ss(lines[i]);
        std::string k, v;
        if (!(ss >> k >> v)) throw FormatError("scores: expected 'key value'", i);
        kv[k] = v;
    }
    if (vocab_hash) *vocab_hash = parse_hex64(kv.at("vocab_hash"));
    if (config_hash) *config_hash = parse_hex64(kv.at("config_hash"));
    if (kv.count("ground_truth")) return std::nullopt;
    try {
        return ClusterScores{std::stod(kv.at("homogeneity")), std::stod(kv.at("completeness")),
                             std::stod(kv.at("v_measure"))};
    } catch (const std::exception&) {
        throw FormatError("scores: missing or malformed score lines");
    }
}

}  // namespace cdisc
