#include "cdisc/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include <json.hpp>

#include "cdisc/activation.hpp"
#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"
#include "cdisc/projection.hpp"
#include "cdisc/random.hpp"

#ifndef CDISC_GIT_DESCRIBE
#define CDISC_GIT_DESCRIBE "unknown"
#endif

namespace cdisc {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> s{Stage::generate,     Stage::train_word2vec, Stage::train_embedding,
                                      Stage::compute_aams, Stage::cluster,        Stage::train_subspaces,
                                      Stage::evaluate};
    return s;
}

std::string_view stage_name(Stage s) {
    switch (s) {
        case Stage::generate: return "generate";
        case Stage::train_word2vec: return "train-word2vec";
        case Stage::train_embedding: return "train-embedding";
        case Stage::compute_aams: return "compute-aams";
        case Stage::cluster: return "cluster";
        case Stage::train_subspaces: return "train-subspaces";
        case Stage::evaluate: return "evaluate";
    }
    return "?";
}

Stage parse_stage(std::string_view name) {
    for (Stage s : all_stages())
        if (stage_name(s) == name) return s;
    throw ConfigError("unknown stage '" + std::string(name) + "'");
}

std::vector<std::string> stage_inputs(Stage s) {
    switch (s) {
        case Stage::generate: return {};
        case Stage::train_word2vec:
        case Stage::train_embedding: return {artifact::manifest, artifact::features, artifact::descriptions};
        case Stage::compute_aams:
            return {artifact::manifest, artifact::features, artifact::descriptions, artifact::embedding};
        case Stage::cluster:
            return {artifact::manifest, artifact::features, artifact::descriptions, artifact::word2vec,
                    artifact::aams};
        case Stage::train_subspaces:
            return {artifact::manifest, artifact::features, artifact::descriptions, artifact::embedding,
                    artifact::concepts};
        case Stage::evaluate: return bundle_files();
    }
    return {};
}

std::vector<std::string> stage_outputs(Stage s) {
    switch (s) {
        case Stage::generate: return {artifact::manifest, artifact::features, artifact::descriptions};
        case Stage::train_word2vec: return {artifact::word2vec};
        case Stage::train_embedding: return {artifact::embedding};
        case Stage::compute_aams: return {artifact::aams};
        case Stage::cluster: return {artifact::concepts, artifact::scores};
        case Stage::train_subspaces: return {artifact::subspaces};
        case Stage::evaluate: return {report::clustering, report::topk, report::diagnostics};
    }
    return {};
}

namespace {

// Every input must carry the dataset's vocabulary hash and one shared
// config hash.
class InputCheck {
public:
    explicit InputCheck(const Dataset& ds) : vocab_(ds.vocab.hash()), config_(ds.config_hash) {}

    void add(const std::string& name, std::uint64_t vocab_hash, std::uint64_t config_hash) const {
        if (vocab_hash != vocab_) {
            throw HashMismatchError(name + ": vocabulary hash " + hex64(vocab_hash) + " does not match the dataset's " +
                                    hex64(vocab_));
        }
        if (config_hash != config_) {
            throw HashMismatchError(name + " was built under config " + hex64(config_hash) + " but the dataset under " +
                                    hex64(config_));
        }
    }

private:
    std::uint64_t vocab_;
    std::uint64_t config_;
};

void require_inputs(Stage s, const fs::path& dir) {
    for (const auto& f : stage_inputs(s)) {
        if (!fs::is_regular_file(dir / f)) {
            throw MissingArtifactError(std::string(stage_name(s)) + " needs " + (dir / f).string());
        }
    }
}

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

void write_manifest(Stage s, const PipelineConfig& cfg, double seconds) {
    json outputs = json::array();
    for (const auto& f : stage_outputs(s)) outputs.push_back(f);
    const json m{{"stage", stage_name(s)},
                 {"config_hash", hex64(config_hash(cfg))},
                 {"seed", cfg.seed},
                 {"git_describe", CDISC_GIT_DESCRIBE},
                 {"wall_seconds", seconds},
                 {"outputs", outputs}};
    fs::create_directories(cfg.artifact_dir / "runs");
    write_text_file(cfg.artifact_dir / "runs" / (std::string(stage_name(s)) + ".json"), m.dump(2) + "\n");
}

void stage_generate(const PipelineConfig& cfg, std::ostream& log) {
    const std::uint64_t h = config_hash(cfg);
    Dataset ds;
    if (!cfg.dataset_source.empty()) {
        if (!fs::is_directory(cfg.dataset_source)) {
            throw MissingArtifactError("dataset source " + cfg.dataset_source.string() + " does not exist");
        }
        ds = load_dataset(cfg.dataset_source);
        log << "[generate] ingested " << ds.size() << " items from " << cfg.dataset_source.string() << '\n';
    } else {
        ds = generate_synthetic(cfg.corpus, derive_seed(cfg.seed, "corpus"));
        log << "[generate] " << ds.size() << " items, vocab " << ds.vocab.size() << '\n';
    }
    ds.config_hash = h;
    save_dataset(ds, cfg.artifact_dir / artifact::dataset_dir);
}

void stage_word2vec(const PipelineConfig& cfg, std::ostream& log) {
    const Dataset ds = load_dataset(cfg.artifact_dir / artifact::dataset_dir);
    const auto w2v = train_skipgram(ds, cfg.word2vec, derive_seed(cfg.seed, "word2vec"));
    log << "[train-word2vec] " << w2v.size() << " vectors of dim " << w2v.dim() << '\n';
    save_word2vec(w2v, ds.vocab.hash(), config_hash(cfg), cfg.artifact_dir / artifact::word2vec);
}

void stage_embedding(const PipelineConfig& cfg, std::ostream& log) {
    const Dataset ds = load_dataset(cfg.artifact_dir / artifact::dataset_dir);
    EmbeddingTrainLog tl;
    const auto model = train_embedding(ds, gap_all(ds), cfg.embedding, derive_seed(cfg.seed, "embedding"), &tl);
    log << "[train-embedding] loss " << fmt6(tl.initial_loss) << " -> " << fmt6(tl.final_loss) << '\n';
    save_embedding(model, ds.vocab.hash(), config_hash(cfg), cfg.artifact_dir / artifact::embedding);
}

void stage_aams(const PipelineConfig& cfg, std::ostream& log) {
    const Dataset ds = load_dataset(cfg.artifact_dir / artifact::dataset_dir);
    const InputCheck check(ds);
    std::uint64_t vh = 0, ch = 0;
    const auto model = load_embedding(cfg.artifact_dir / artifact::embedding, &vh, &ch);
    check.add(artifact::embedding, vh, ch);
    const auto aams = compute_all_aams(ds, model);
    log << "[compute-aams] " << aams.maps.size() << " maps, " << aams.skipped.size() << " skipped\n";
    save_aams(aams, ds.vocab.hash(), config_hash(cfg), cfg.artifact_dir / artifact::aams);
}

void stage_cluster(const PipelineConfig& cfg, std::ostream& log) {
    const Dataset ds = load_dataset(cfg.artifact_dir / artifact::dataset_dir);
    const InputCheck check(ds);
    std::uint64_t vh = 0, ch = 0;
    const auto w2v = load_word2vec(cfg.artifact_dir / artifact::word2vec, &vh, &ch);
    check.add(artifact::word2vec, vh, ch);
    const auto aams = load_aams(cfg.artifact_dir / artifact::aams, &vh, &ch);
    check.add(artifact::aams, vh, ch);
    const auto d = discover(ds, aams, w2v, cfg.concepts.k, derive_seed(cfg.seed, "concepts"), cfg.concepts.restarts);
    log << "[cluster] k " << d.assignment.k << ", inertia " << fmt6(d.assignment.inertia);
    if (d.scores) log << ", V-measure " << fmt6(d.scores->v_measure);
    log << '\n';
    const std::uint64_t h = config_hash(cfg);
    save_concepts(d.assignment, ds.vocab, h, cfg.artifact_dir / artifact::concepts);
    save_scores(d.scores, ds.vocab.hash(), h, cfg.artifact_dir / artifact::scores);
}

void stage_subspaces(const PipelineConfig& cfg, std::ostream& log) {
    const Dataset ds = load_dataset(cfg.artifact_dir / artifact::dataset_dir);
    const InputCheck check(ds);
    std::uint64_t vh = 0, ch = 0;
    const auto model = load_embedding(cfg.artifact_dir / artifact::embedding, &vh, &ch);
    check.add(artifact::embedding, vh, ch);
    const auto assignment = load_concepts(cfg.artifact_dir / artifact::concepts, ds.vocab, &vh, &ch);
    check.add(artifact::concepts, vh, ch);
    const auto images = embed_images(model, gap_all(ds));
    const auto subs = train_all_subspaces(assignment, ds, images, cfg.subspace, derive_seed(cfg.seed, "subspace"));
    log << "[train-subspaces] " << subs.models.size() << " subspaces\n";
    save_subspace_index(subs, ds.vocab.hash(), config_hash(cfg), cfg.artifact_dir);
}

void stage_evaluate(const PipelineConfig& cfg, std::ostream& log) {
    const ModelBundle b = load_bundle(cfg.artifact_dir);
    const std::uint64_t first = b.config_hashes.begin()->second;
    for (const auto& [name, h] : b.config_hashes) {
        if (h != first) {
            throw HashMismatchError("mixed config hashes: " + b.config_hashes.begin()->first + " has " + hex64(first) +
                                    ", " + name + " has " + hex64(h));
        }
    }
    if (first != config_hash(cfg)) {
        log << "[evaluate] note: artifacts were built under config " << hex64(first) << ", current config is "
            << hex64(config_hash(cfg)) << '\n';
    }
    const auto r = evaluate_bundle(b, cfg);
    fs::create_directories(cfg.artifact_dir / report::dir);
    write_text_file(cfg.artifact_dir / report::clustering, r.clustering_csv);
    write_text_file(cfg.artifact_dir / report::topk, r.topk_csv);
    write_text_file(cfg.artifact_dir / report::diagnostics, r.diagnostics_json);
    for (const auto& [mode, s] : r.clustering) {
        log << "[evaluate] " << feature_mode_name(mode) << " V-measure " << fmt6(s.v_measure) << '\n';
    }
    log << "[evaluate] " << r.topk.outcomes.size() << " query pairs, top-10 baseline "
        << fmt6(r.topk.accuracy(Method::baseline, 10)) << ", concept "
        << fmt6(r.topk.accuracy(Method::concept_aware, 10)) << '\n';
}

}  // namespace

void run_stage(Stage s, const PipelineConfig& cfg, std::ostream& log) {
    validate_config(cfg);
    require_inputs(s, cfg.artifact_dir);
    fs::create_directories(cfg.artifact_dir);
    const auto t0 = std::chrono::steady_clock::now();
    switch (s) {
        case Stage::generate: stage_generate(cfg, log); break;
        case Stage::train_word2vec: stage_word2vec(cfg, log); break;
        case Stage::train_embedding: stage_embedding(cfg, log); break;
        case Stage::compute_aams: stage_aams(cfg, log); break;
        case Stage::cluster: stage_cluster(cfg, log); break;
        case Stage::train_subspaces: stage_subspaces(cfg, log); break;
        case Stage::evaluate: stage_evaluate(cfg, log); break;
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    write_manifest(s, cfg, dt.count());
}

void run_all(const PipelineConfig& cfg, std::ostream& log) {
    for (Stage s : all_stages()) run_stage(s, cfg, log);
}

namespace {

json aam_diagnostics(const ModelBundle& b) {
    json out = json::array();
    const auto& gt = *b.dataset.ground_truth;
    for (int c = 0; c < gt.concept_count(); ++c) {
        const auto& mask = gt.masks[static_cast<std::size_t>(c)];
        double sum = 0.0;
        int n = 0;
        for (AttributeId a : gt.attributes_of(c)) {
            const auto it = b.aams.maps.find(a);
            if (it == b.aams.maps.end()) continue;
            sum += positive_mass_inside(it->second.grid, mask);
            ++n;
        }
        out.push_back({{"concept", gt.concept_names[static_cast<std::size_t>(c)]},
                       {"localized", mask.active() < mask.height * mask.width},
                       {"maps", n},
                       {"mass_inside", n > 0 ? json(sum / n) : json(nullptr)}});
    }
    return out;
}

json subspace_diagnostics(const ModelBundle& b, Split split) {
    json out = json::array();
    for (const auto& [cid, m] : b.subspaces.models) {
        const auto acc = subspace_accuracy(m, b.dataset, b.images, b.dataset.splits.get(split));
        json attrs = json::array();
        for (AttributeId a : m.attributes) attrs.push_back(b.dataset.vocab.label(a));
        out.push_back({{"concept_id", cid},
                       {"attributes", attrs},
                       {"attribute_accuracy", acc.attribute_accuracy()},
                       {"attribute_items", acc.attribute_total},
                       {"none_accuracy", acc.none_total > 0 ? json(acc.none_accuracy()) : json(nullptr)},
                       {"none_items", acc.none_total}});
    }
    return out;
}

// Spearman between the first projection axis and the planted level of each
// ordinal (cumulative) concept, using the subspace that holds most of its
// attributes.
json ordinal_diagnostics(const ModelBundle& b, Split split) {
    json out = json::array();
    const auto& gt = *b.dataset.ground_truth;
    for (int c = 0; c < gt.concept_count(); ++c) {
        if (!gt.cumulative[static_cast<std::size_t>(c)]) continue;
        const auto attrs = gt.attributes_of(c);
        std::map<int, int> votes;
        for (AttributeId a : attrs)
            if (const auto k = b.subspaces.assignment.cluster_of(a)) ++votes[*k];
        int best = -1, best_votes = 0;
        for (const auto& [k, v] : votes)
            if (v > best_votes) best = k, best_votes = v;
        json row{{"concept", gt.concept_names[static_cast<std::size_t>(c)]}, {"concept_id", best}};
        if (best < 0 || !b.subspaces.models.count(best)) {
            row["spearman"] = nullptr;
            out.push_back(row);
            continue;
        }
        std::vector<ItemId> ids;
        for (ItemId id : b.dataset.splits.get(split))
            for (AttributeId a : attrs)
                if (b.dataset.item(id).has(a)) {
                    ids.push_back(id);
                    break;
                }
        const auto p = project_items(best, ids, b.subspace_features.at(best));
        std::vector<double> u, level;
        for (std::size_t i = 0; i < p.ids.size(); ++i) {
            u.push_back(p.points(static_cast<Eigen::Index>(i), 0));
            for (std::size_t j = 0; j < attrs.size(); ++j)
                if (b.dataset.item(p.ids[i]).has(attrs[j])) level.push_back(static_cast<double>(j));
        }
        row["items"] = p.ids.size();
        row["spearman"] = p.ids.size() > 1 ? json(spearman(u, level)) : json(nullptr);
        out.push_back(row);
    }
    return out;
}

}  // namespace

EvaluationResult evaluate_bundle(const ModelBundle& b, const PipelineConfig& cfg) {
    EvaluationResult r;
    const Dataset& ds = b.dataset;
    const Split split = cfg.evaluation.split;

    r.clustering_csv = "mode,homogeneity,completeness,v_measure\n";
    if (ds.ground_truth) {
        for (FeatureMode mode : {FeatureMode::joint, FeatureMode::semantic_only, FeatureMode::spatial_only}) {
            const auto d = discover(ds, b.aams, b.word2vec, cfg.concepts.k, derive_seed(cfg.seed, "concepts"),
                                    cfg.concepts.restarts, mode);
            r.clustering.emplace_back(mode, *d.scores);
            r.clustering_csv += std::string(feature_mode_name(mode)) + "," + fmt6(d.scores->homogeneity) + "," +
                                fmt6(d.scores->completeness) + "," + fmt6(d.scores->v_measure) + "\n";
        }
    }

    const auto pairs = make_query_pairs(ds, split);
    r.topk = evaluate_topk(pairs, ds, split, b.images, b.embedding, b.subspaces, cfg.evaluation.ks);
    r.topk_csv = topk_report(r.topk);

    int fallbacks = 0, no_subspace = 0;
    for (const auto& o : r.topk.outcomes) {
        fallbacks += o.fallback;
        no_subspace += o.no_subspace;
    }
    const auto& ids = ds.splits.get(split);
    const auto sep = embedding_separation(b.embedding, ds, b.gap, ids);
    const auto ranks = retrieval_sanity(b.embedding, ds, b.gap, ids);

    json d{{"config_hash", hex64(config_hash(cfg))},
           {"split", split_name(split)},
           {"query_pairs", pairs.size()},
           {"gallery_size", r.topk.gallery_size},
           {"detection", {{"cases", r.topk.detection_cases()}, {"rate", r.topk.detection_rate()}}},
           {"fallbacks", fallbacks},
           {"no_subspace", no_subspace},
           {"embedding",
            {{"matching_similarity", sep.matching},
             {"non_matching_similarity", sep.non_matching},
             {"median_rank_text_to_image", ranks.text_to_image},
             {"median_rank_image_to_text", ranks.image_to_text}}},
           {"subspaces", subspace_diagnostics(b, split)}};
    if (ds.ground_truth) {
        d["aam_mass"] = aam_diagnostics(b);
        d["ordinal_projection"] = ordinal_diagnostics(b, split);
    }
    r.diagnostics_json = d.dump(2) + "\n";
    return r;
}

}  // namespace cdisc
