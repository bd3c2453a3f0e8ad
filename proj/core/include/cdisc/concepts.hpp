#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cdisc/activation.hpp"
#include "cdisc/corpus.hpp"
#include "cdisc/embedding.hpp"
#include "cdisc/word2vec.hpp"

namespace cdisc {

enum class FeatureMode { joint, spatial_only, semantic_only };
FeatureMode parse_feature_mode(std::string_view name);
std::string_view feature_mode_name(FeatureMode mode);

// One clustering feature per attribute, rows parallel to `attributes`.
struct AttributeFeatures {
    std::vector<AttributeId> attributes;
    Eigen::MatrixXd rows;
};

// joint = [vec(A_a)/|vec(A_a)|, E_a/|E_a|]; the ablations keep one half.
// Attributes skipped by the AAM pass are left out. A zero AAM or word
// vector raises DataError naming the attribute.
AttributeFeatures build_features(const AamSet& aams, const SemanticEmbeddings& semantic, FeatureMode mode,
                                 const Vocab* vocab = nullptr);

struct ConceptAssignment {
    int k = 0;
    std::vector<AttributeId> attributes;  // clustered attributes
    std::vector<int> cluster;             // parallel to attributes, in [0, k)
    Eigen::MatrixXd centroids;            // k rows
    double inertia = 0.0;
    // Inertia after each assignment step of the winning restart.
    std::vector<double> inertia_history;

    std::optional<int> cluster_of(AttributeId a) const;
    std::vector<AttributeId> members(int c) const;
};

// Lloyd's algorithm from k-means++ seeds, best of `restarts` by inertia.
// Clusters are relabeled in order of first appearance so equal partitions
// compare equal.
ConceptAssignment kmeans(const AttributeFeatures& features, int k, std::uint64_t seed, int restarts = 10,
                         int max_iterations = 300);

struct ClusterScores {
    double homogeneity = 0.0;
    double completeness = 0.0;
    double v_measure = 0.0;
};

// Natural-log entropies; homogeneity is 1 when the classes carry no
// entropy, completeness 1 when the clusters carry none.
ClusterScores cluster_scores(std::span<const int> clusters, std::span<const int> classes);
ClusterScores cluster_scores(const ConceptAssignment& assignment, const GroundTruth& truth);

struct Discovery {
    ConceptAssignment assignment;
    std::optional<ClusterScores> scores;  // present when ground truth exists
};

Discovery discover(const Dataset& dataset, const AamSet& aams, const SemanticEmbeddings& semantic, int k,
                   std::uint64_t seed, int restarts = 10, FeatureMode mode = FeatureMode::joint);
Discovery discover(const Dataset& dataset, const EmbeddingModel& model, const SemanticEmbeddings& semantic, int k,
                   std::uint64_t seed, int restarts = 10, FeatureMode mode = FeatureMode::joint);

// concepts.tsv: '#'-prefixed header lines with the hashes and k, then
// "label<TAB>cluster_id" per clustered attribute.
void save_concepts(const ConceptAssignment& assignment, const Vocab& vocab, std::uint64_t config_hash,
                   const std::filesystem::path& path);
ConceptAssignment load_concepts(const std::filesystem::path& path, const Vocab& vocab,
                                std::uint64_t* vocab_hash = nullptr, std::uint64_t* config_hash = nullptr);

// scores: "key value" lines; "ground_truth none" when nothing was scored.
void save_scores(const std::optional<ClusterScores>& scores, std::uint64_t vocab_hash, std::uint64_t config_hash,
                 const std::filesystem::path& path);
std::optional<ClusterScores> load_scores(const std::filesystem::path& path, std::uint64_t* vocab_hash = nullptr,
                                         std::uint64_t* config_hash = nullptr);

}  // namespace cdisc
