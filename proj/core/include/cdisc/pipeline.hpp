#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cdisc/bundle.hpp"
#include "cdisc/concepts.hpp"
#include "cdisc/config.hpp"
#include "cdisc/retrieval.hpp"

namespace cdisc {

enum class Stage { generate, train_word2vec, train_embedding, compute_aams, cluster, train_subspaces, evaluate };

const std::vector<Stage>& all_stages();
Stage parse_stage(std::string_view name);  // "train-word2vec" etc.; ConfigError otherwise
std::string_view stage_name(Stage stage);

// Artifact paths a stage reads and writes, relative to the artifact dir.
std::vector<std::string> stage_inputs(Stage stage);
std::vector<std::string> stage_outputs(Stage stage);

// Runs one stage against config.artifact_dir and writes runs/<stage>.json.
// Throws MissingArtifactError naming the first absent input and
// HashMismatchError when the inputs were built under different configs.
void run_stage(Stage stage, const PipelineConfig& config, std::ostream& log);
void run_all(const PipelineConfig& config, std::ostream& log);

namespace report {
inline constexpr const char* dir = "reports";
inline constexpr const char* clustering = "reports/clustering.csv";
inline constexpr const char* topk = "reports/topk.csv";
inline constexpr const char* diagnostics = "reports/diagnostics.json";
}  // namespace report

struct EvaluationResult {
    std::vector<std::pair<FeatureMode, ClusterScores>> clustering;  // empty without ground truth
    TopkEvaluation topk;
    std::string clustering_csv;
    std::string topk_csv;
    std::string diagnostics_json;
};

// Everything `evaluate` reports, computed from a loaded bundle.
EvaluationResult evaluate_bundle(const ModelBundle& bundle, const PipelineConfig& config);

}  // namespace cdisc
