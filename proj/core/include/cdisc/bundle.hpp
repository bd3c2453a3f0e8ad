#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdisc/activation.hpp"
#include "cdisc/concepts.hpp"
#include "cdisc/corpus.hpp"
#include "cdisc/embedding.hpp"
#include "cdisc/retrieval.hpp"
#include "cdisc/subspace.hpp"
#include "cdisc/word2vec.hpp"

namespace cdisc {

// Artifact paths relative to an artifact directory.
namespace artifact {
inline constexpr const char* dataset_dir = "dataset";
inline constexpr const char* manifest = "dataset/manifest";
inline constexpr const char* features = "dataset/features.bin";
inline constexpr const char* descriptions = "dataset/descriptions";
inline constexpr const char* word2vec = "word2vec.bin";
inline constexpr const char* embedding = "embedding.bin";
inline constexpr const char* aams = "aams.bin";
inline constexpr const char* concepts = "concepts.tsv";
inline constexpr const char* scores = "scores";
inline constexpr const char* subspaces = "subspaces";
}  // namespace artifact

// The nine files a bundle directory must hold (the subspace index names
// the per-concept subspace files).
std::vector<std::string> bundle_files();

// Everything the service needs, loaded once and read-only afterwards.
struct ModelBundle {
    std::filesystem::path dir;
    Dataset dataset;
    SemanticEmbeddings word2vec;
    EmbeddingModel embedding;
    AamSet aams;
    ConceptSubspaces subspaces;
    std::optional<ClusterScores> scores;

    Eigen::MatrixXd gap;     // GAP feature per item id
    Eigen::MatrixXd images;  // unit image embedding per item id
    std::map<int, Eigen::MatrixXd> subspace_features;  // per concept, one row per item id
    Gallery gallery;  // the test split

    std::uint64_t vocab_hash = 0;
    std::uint64_t bundle_hash = 0;  // FNV-1a over every artifact's bytes
    std::map<std::string, std::uint64_t> config_hashes;  // by artifact path
};

// Throws MissingArtifactError listing every absent file, and
// HashMismatchError naming the first artifact whose vocabulary hash
// differs from the dataset's.
ModelBundle load_bundle(const std::filesystem::path& dir);

}  // namespace cdisc
