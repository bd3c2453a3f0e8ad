#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdisc/concepts.hpp"
#include "cdisc/corpus.hpp"
#include "cdisc/embedding.hpp"
#include "cdisc/random.hpp"

namespace cdisc {

// One-hidden-layer classifier over a concept's attributes plus a trailing
// none-of-above class, on top of unit image embeddings.
struct SubspaceModel {
    int concept_id = 0;
    std::vector<AttributeId> attributes;  // class i predicts attributes[i]
    Eigen::MatrixXd hidden_w;             // D x hidden
    Eigen::VectorXd hidden_b;
    Eigen::MatrixXd out_w;  // hidden x (n + 1)
    Eigen::VectorXd out_b;

    int input_dim() const { return static_cast<int>(hidden_w.rows()); }
    int hidden() const { return static_cast<int>(hidden_w.cols()); }
    int classes() const { return static_cast<int>(attributes.size()) + 1; }
    int none_class() const { return static_cast<int>(attributes.size()); }

    // ReLU hidden activation: the concept subspace feature.
    Eigen::VectorXd feature(const Eigen::VectorXd& x) const;
    // Softmax over the n + 1 classes.
    Eigen::VectorXd predict(const Eigen::VectorXd& x) const;
    // Index of the largest probability; ties go to the lower index.
    int argmax(const Eigen::VectorXd& x) const;

    bool operator==(const SubspaceModel&) const = default;
};

// Xavier-uniform weights, zero biases.
SubspaceModel init_subspace(int concept_id, std::vector<AttributeId> attributes, int input_dim, int hidden,
                            std::uint64_t seed);

struct SubspaceGradients {
    Eigen::MatrixXd hidden_w;
    Eigen::VectorXd hidden_b;
    Eigen::MatrixXd out_w;
    Eigen::VectorXd out_b;
};

// -log p_label for one example; adds its gradient into `grad` when given
// (grad must be zero-initialized to the model's shapes).
double cross_entropy(const SubspaceModel& model, const Eigen::VectorXd& x, int label,
                     SubspaceGradients* grad = nullptr);

SubspaceGradients zero_gradients(const SubspaceModel& model);

// Central-difference check of the mean cross-entropy of a few random
// examples on a random toy model; returns the max relative error.
double subspace_gradcheck(int input_dim = 6, int hidden = 5, int attributes = 3, std::uint64_t seed = 1);

struct SubspaceConfig {
    int hidden = 128;
    double lr = 0.1;
    int epochs = 10;
    double neg_ratio = 0.3;  // sampled negatives per positive
};

struct SubspaceExample {
    ItemId item = 0;
    int label = 0;
};

struct SubspaceTrainingSet {
    std::vector<SubspaceExample> examples;
    int positives = 0;
    int negatives = 0;
    // Items holding two or more of the concept's attributes.
    std::vector<ItemId> excluded;
};

// Positives are split items holding exactly one of `attributes`; negatives
// are drawn without replacement from items holding none of them.
SubspaceTrainingSet subspace_training_set(const Dataset& dataset, const std::vector<AttributeId>& attributes,
                                          Split split, double neg_ratio, Rng& rng);

struct SubspaceTrainLog {
    SubspaceTrainingSet training_set;
    std::vector<double> epoch_losses;
};

// Per-example SGD with a fixed learning rate. `images` holds one unit image
// embedding row per item id and is only read. Throws DataError when the
// concept has fewer than two attributes or no positive training item.
SubspaceModel train_subspace(int concept_id, const std::vector<AttributeId>& attributes, const Dataset& dataset,
                             const Eigen::MatrixXd& images, const SubspaceConfig& config, std::uint64_t seed,
                             SubspaceTrainLog* log = nullptr);

struct SubspaceAccuracy {
    int attribute_total = 0;  // items with exactly one attribute of the concept
    int attribute_correct = 0;
    int none_total = 0;  // items with none
    int none_correct = 0;

    double attribute_accuracy() const;
    double none_accuracy() const;
};
SubspaceAccuracy subspace_accuracy(const SubspaceModel& model, const Dataset& dataset, const Eigen::MatrixXd& images,
                                   const std::vector<ItemId>& ids);

// Discovered concepts together with their trained subspaces.
struct ConceptSubspaces {
    ConceptAssignment assignment;
    std::map<int, SubspaceModel> models;  // by concept id

    // Subspace of the concept holding `a`, or nullptr when `a` is not
    // clustered or its concept has no subspace.
    const SubspaceModel* for_attribute(AttributeId a) const;
};

// Trains a subspace for every concept with at least two attributes.
// Per-concept seeds derive from `seed` and the concept id.
ConceptSubspaces train_all_subspaces(const ConceptAssignment& assignment, const Dataset& dataset,
                                     const Eigen::MatrixXd& images, const SubspaceConfig& config,
                                     std::uint64_t seed);

// subspace_<cid>.bin: header "CFSS", u32 concept id, u32 n, n u32 attribute
// ids, u32 D, u32 hidden, then hidden_w (row-major), hidden_b, out_w
// (row-major), out_b as f32.
void save_subspace(const SubspaceModel& model, std::uint64_t vocab_hash, std::uint64_t config_hash,
                   const std::filesystem::path& path);
SubspaceModel load_subspace(const std::filesystem::path& path, std::uint64_t* vocab_hash = nullptr,
                            std::uint64_t* config_hash = nullptr);

std::string subspace_file_name(int concept_id);

// "subspaces" index: one "concept <cid> <file>" line per trained subspace,
// saved next to the subspace files.
void save_subspace_index(const ConceptSubspaces& subspaces, std::uint64_t vocab_hash, std::uint64_t config_hash,
                         const std::filesystem::path& dir);
// Reads the index and every subspace it lists from `dir`.
std::map<int, SubspaceModel> load_subspaces(const std::filesystem::path& dir, std::uint64_t* vocab_hash = nullptr,
                                            std::uint64_t* config_hash = nullptr);

}  // namespace cdisc
