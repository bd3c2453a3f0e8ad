#include "cdisc/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"
#include "cdisc/random.hpp"

namespace cdisc {

PipelineConfig default_pipeline_config() { return PipelineConfig{}; }

namespace {

void check_keys(const YAML::Node& node, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
    const YAML::Node v = node[key];
    if (!v) return;
    try {
        out = v.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(where + "." + key + ": malformed value");
    }
}

std::string num(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, end);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
}

ConceptSpec parse_concept(const YAML::Node& node, std::size_t index) {
    const std::string where = "corpus.concepts[" + std::to_string(index) + "]";
    check_keys(node, where, {"name", "attributes", "mask", "slot", "attribute_slots", "optional", "cumulative"});
    ConceptSpec c;
    for (const char* key : {"name", "attributes", "mask", "slot"}) {
        if (!node[key]) throw ConfigError(where + ": missing '" + key + "'");
    }
    read(node, "name", c.name, where);
    read(node, "attributes", c.attributes, where);
    std::vector<std::string> rows;
    read(node, "mask", rows, where);
    try {
        c.mask = SpatialMask::from_rows(rows);
    } catch (const Error& e) {
        throw ConfigError(where + ".mask: " + e.what());
    }
    read(node, "slot", c.semantic_slot, where);
    read(node, "attribute_slots", c.attribute_slots, where);
    read(node, "optional", c.optional, where);
    read(node, "cumulative", c.cumulative, where);
    return c;
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    PipelineConfig cfg;
    if (root.IsNull()) return cfg;
    check_keys(root, "config",
               {"seed", "artifact_dir", "dataset_source", "corpus", "word2vec", "embedding", "concepts", "subspace",
                "evaluation"});
    read(root, "seed", cfg.seed, "config");
    std::string path;
    if (root["artifact_dir"]) {
        read(root, "artifact_dir", path, "config");
        cfg.artifact_dir = path;
    }
    if (root["dataset_source"]) {
        path.clear();
        read(root, "dataset_source", path, "config");
        cfg.dataset_source = path;
    }

    if (const auto n = root["corpus"]) {
        check_keys(n, "corpus",
                   {"height", "width", "channels", "n_items", "noise_sigma", "train_fraction", "val_fraction",
                    "concepts"});
        auto& c = cfg.corpus;
        read(n, "height", c.dims.height, "corpus");
        read(n, "width", c.dims.width, "corpus");
        read(n, "channels", c.dims.channels, "corpus");
        read(n, "n_items", c.n_items, "corpus");
        read(n, "noise_sigma", c.noise_sigma, "corpus");
        read(n, "train_fraction", c.train_fraction, "corpus");
        read(n, "val_fraction", c.val_fraction, "corpus");
        if (const auto list = n["concepts"]) {
            if (!list.IsSequence()) throw ConfigError("corpus.concepts: expected a list");
            c.concepts.clear();
            for (std::size_t i = 0; i < list.size(); ++i) c.concepts.push_back(parse_concept(list[i], i));
        } else if (c.dims.height > 0 && c.dims.width > 0) {
            c.concepts = default_concepts(c.dims.height, c.dims.width);
        }
    }
    if (const auto n = root["word2vec"]) {
        check_keys(n, "word2vec", {"dim", "window", "negatives", "epochs", "lr", "min_count"});
        auto& w = cfg.word2vec;
        read(n, "dim", w.dim, "word2vec");
        read(n, "window", w.window, "word2vec");
        read(n, "negatives", w.negatives, "word2vec");
        read(n, "epochs", w.epochs, "word2vec");
        read(n, "lr", w.lr, "word2vec");
        read(n, "min_count", w.min_count, "word2vec");
    }
    if (const auto n = root["embedding"]) {
        check_keys(n, "embedding", {"dim", "lr", "lr_decay", "decay_every", "batch_size", "margin", "epochs"});
        auto& e = cfg.embedding;
        read(n, "dim", e.dim, "embedding");
        read(n, "lr", e.lr, "embedding");
        read(n, "lr_decay", e.lr_decay, "embedding");
        read(n, "decay_every", e.decay_every, "embedding");
        read(n, "batch_size", e.batch_size, "embedding");
        read(n, "margin", e.margin, "embedding");
        read(n, "epochs", e.epochs, "embedding");
    }
    if (const auto n = root["concepts"]) {
        check_keys(n, "concepts", {"k", "restarts"});
        read(n, "k", cfg.concepts.k, "concepts");
        read(n, "restarts", cfg.concepts.restarts, "concepts");
    }
    if (const auto n = root["subspace"]) {
        check_keys(n, "subspace", {"hidden", "lr", "epochs", "neg_ratio"});
        read(n, "hidden", cfg.subspace.hidden, "subspace");
        read(n, "lr", cfg.subspace.lr, "subspace");
        read(n, "epochs", cfg.subspace.epochs, "subspace");
        read(n, "neg_ratio", cfg.subspace.neg_ratio, "subspace");
    }
    if (const auto n = root["evaluation"]) {
        check_keys(n, "evaluation", {"ks", "split"});
        read(n, "ks", cfg.evaluation.ks, "evaluation");
        if (n["split"]) {
            std::string s;
            read(n, "split", s, "evaluation");
            try {
                cfg.evaluation.split = parse_split(s);
            } catch (const Error&) {
                throw ConfigError("evaluation.split: unknown split '" + s + "'");
            }
        }
    }
    validate_config(cfg);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const MissingArtifactError&) {
        throw ConfigError("cannot read config file " + path.string());
    }
    return parse_config(text);
}

void validate_config(const PipelineConfig& cfg) {
    validate_corpus_config(cfg.corpus);
    const auto& w = cfg.word2vec;
    if (w.dim < 2) throw ConfigError("word2vec.dim must be at least 2");
    if (w.window < 0 || w.negatives < 0 || w.epochs < 0 || w.min_count < 1 || !(w.lr > 0.0)) {
        throw ConfigError("word2vec: window, negatives and epochs must be >= 0, min_count >= 1, lr > 0");
    }
    const auto& e = cfg.embedding;
    if (e.dim < 1 || !(e.lr > 0.0) || !(e.lr_decay > 0.0) || e.decay_every < 1 || e.batch_size < 2 ||
        !(e.margin >= 0.0) || e.epochs < 0) {
        throw ConfigError("embedding: dims, lr, lr_decay, decay_every must be positive; batch_size >= 2");
    }
    if (cfg.concepts.k < 1 || cfg.concepts.restarts < 1) throw ConfigError("concepts: k and restarts must be >= 1");
    const auto& s = cfg.subspace;
    if (s.hidden < 1 || !(s.lr > 0.0) || s.epochs < 0 || !(s.neg_ratio >= 0.0)) {
        throw ConfigError("subspace: hidden and lr must be positive, epochs and neg_ratio >= 0");
    }
    if (cfg.evaluation.ks.empty()) throw ConfigError("evaluation.ks is empty");
    for (std::size_t i = 0; i < cfg.evaluation.ks.size(); ++i) {
        if (cfg.evaluation.ks[i] < 1 || (i > 0 && cfg.evaluation.ks[i] <= cfg.evaluation.ks[i - 1])) {
            throw ConfigError("evaluation.ks must be positive and strictly increasing");
        }
    }
}

namespace {

std::string render(const PipelineConfig& cfg, bool with_paths) {
    std::ostringstream o;
    o << "seed: " << cfg.seed << '\n';
    if (with_paths) {
        o << "artifact_dir: \"" << cfg.artifact_dir.generic_string() << "\"\n";
        if (!cfg.dataset_source.empty()) o << "dataset_source: \"" << cfg.dataset_source.generic_string() << "\"\n";
    }
    const auto& c = cfg.corpus;
    o << "corpus:\n";
    o << "  height: " << c.dims.height << '\n';
    o << "  width: " << c.dims.width << '\n';
    o << "  channels: " << c.dims.channels << '\n';
    o << "  n_items: " << c.n_items << '\n';
    o << "  noise_sigma: " << num(c.noise_sigma) << '\n';
    o << "  train_fraction: " << num(c.train_fraction) << '\n';
    o << "  val_fraction: " << num(c.val_fraction) << '\n';
    o << "  concepts:\n";
    for (const auto& s : c.concepts) {
        o << "    - name: \"" << s.name << "\"\n";
        o << "      attributes: [";
        for (std::size_t i = 0; i < s.attributes.size(); ++i) o << (i ? ", " : "") << '"' << s.attributes[i] << '"';
        o << "]\n";
        o << "      mask:\n";
        for (const auto& row : s.mask.to_rows()) o << "        - \"" << row << "\"\n";
        o << "      slot: " << s.semantic_slot << '\n';
        if (!s.attribute_slots.empty()) {
            o << "      attribute_slots: [";
            for (std::size_t i = 0; i < s.attribute_slots.size(); ++i) o << (i ? ", " : "") << s.attribute_slots[i];
            o << "]\n";
        }
        o << "      optional: " << (s.optional ? "true" : "false") << '\n';
        o << "      cumulative: " << (s.cumulative ? "true" : "false") << '\n';
    }
    const auto& w = cfg.word2vec;
    o << "word2vec:\n";
    o << "  dim: " << w.dim << '\n';
    o << "  window: " << w.window << '\n';
    o << "  negatives: " << w.negatives << '\n';
    o << "  epochs: " << w.epochs << '\n';
    o << "  lr: " << num(w.lr) << '\n';
    o << "  min_count: " << w.min_count << '\n';
    const auto& e = cfg.embedding;
    o << "embedding:\n";
    o << "  dim: " << e.dim << '\n';
    o << "  lr: " << num(e.lr) << '\n';
    o << "  lr_decay: " << num(e.lr_decay) << '\n';
    o << "  decay_every: " << e.decay_every << '\n';
    o << "  batch_size: " << e.batch_size << '\n';
    o << "  margin: " << num(e.margin) << '\n';
    o << "  epochs: " << e.epochs << '\n';
    o << "concepts:\n";
    o << "  k: " << cfg.concepts.k << '\n';
    o << "  restarts: " << cfg.concepts.restarts << '\n';
    const auto& s = cfg.subspace;
    o << "subspace:\n";
    o << "  hidden: " << s.hidden << '\n';
    o << "  lr: " << num(s.lr) << '\n';
    o << "  epochs: " << s.epochs << '\n';
    o << "  neg_ratio: " << num(s.neg_ratio) << '\n';
    o << "evaluation:\n";
    o << "  ks: [";
    for (std::size_t i = 0; i < cfg.evaluation.ks.size(); ++i) o << (i ? ", " : "") << cfg.evaluation.ks[i];
    o << "]\n";
    o << "  split: " << split_name(cfg.evaluation.split) << '\n';
    return o.str();
}

}  // namespace

std::string render_config(const PipelineConfig& cfg) { return render(cfg, true); }

std::uint64_t config_hash(const PipelineConfig& cfg) { return fnv1a(render(cfg, false)); }

}  // namespace cdisc
