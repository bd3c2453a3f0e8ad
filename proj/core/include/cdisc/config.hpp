#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdisc/corpus.hpp"
#include "cdisc/embedding.hpp"
#include "cdisc/subspace.hpp"
#include "cdisc/word2vec.hpp"

namespace cdisc {

struct ConceptsConfig {
    int k = 6;
    int restarts = 10;
};

struct EvaluationConfig {
    std::vector<int> ks = {1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
    Split split = Split::test;
};

struct PipelineConfig {
    std::uint64_t seed = 7;
    std::filesystem::path artifact_dir = "artifacts";
    // When set, `generate` ingests this dataset directory instead of
    // generating one.
    std::filesystem::path dataset_source;
    CorpusConfig corpus = default_corpus_config();
    SkipGramConfig word2vec;
    EmbeddingTrainConfig embedding;
    ConceptsConfig concepts;
    SubspaceConfig subspace;
    EvaluationConfig evaluation;
};

PipelineConfig default_pipeline_config();

// Parses YAML. Missing keys keep their defaults; unknown keys, malformed
// values and invalid settings raise ConfigError.
PipelineConfig parse_config(const std::string& yaml_text);
PipelineConfig load_config(const std::filesystem::path& path);

void validate_config(const PipelineConfig& config);

// Canonical YAML rendering: every key, in a fixed order. Parsing it gives
// back an equal config.
std::string render_config(const PipelineConfig& config);

// Hash of the canonical rendering without the artifact directory (and
// dataset source path), embedded in every artifact.
std::uint64_t config_hash(const PipelineConfig& config);

}  // namespace cdisc
