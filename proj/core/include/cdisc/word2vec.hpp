#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdisc/corpus.hpp"

namespace cdisc {

struct SkipGramConfig {
    int dim = 64;
    // Context radius in words; 0 means the whole description is context.
    int window = 1;
    int negatives = 10;
    int epochs = 25;
    double lr = 0.025;  // decays linearly to lr * 1e-4
    int min_count = 5;
};

// Word vectors E_a for every vocabulary attribute, one row per id.
struct SemanticEmbeddings {
    Eigen::MatrixXd vectors;
    // Output-side vectors; only meaningful during training and not persisted.
    Eigen::MatrixXd context_vectors;

    int dim() const { return static_cast<int>(vectors.cols()); }
    int size() const { return static_cast<int>(vectors.rows()); }
    Eigen::VectorXd vector(AttributeId a) const { return vectors.row(a).transpose(); }
};

// Vocabulary of words occurring at least `min_count` times, ids ordered by
// (frequency desc, label asc). Throws DataError when every word is dropped.
Vocab build_vocab(const std::vector<std::vector<std::string>>& descriptions, int min_count = 5);

// Skip-gram with negative sampling over the training split's descriptions.
// Attributes below min_count keep their initial vector.
SemanticEmbeddings train_skipgram(const Dataset& dataset, const SkipGramConfig& config, std::uint64_t seed);

// One (center, context) prediction with a fixed set of negative contexts.
struct NegativeSamplingTerm {
    AttributeId center = 0;
    AttributeId context = 0;
    std::vector<AttributeId> negatives;
};

// Sum over terms of -log s(u_o . v_c) - sum_n log s(-u_n . v_c), where v
// are rows of `input` and u rows of `output`. Gradients are accumulated into
// the optional outputs, which must be pre-sized like the parameters.
double negative_sampling_loss(const Eigen::MatrixXd& input, const Eigen::MatrixXd& output,
                              std::span<const NegativeSamplingTerm> terms,
                              Eigen::MatrixXd* grad_input = nullptr,
                              Eigen::MatrixXd* grad_output = nullptr);

// Maximum relative error between the analytic gradient of
// negative_sampling_loss and central finite differences (step 1e-4), at
// random parameters, over every pair of a toy corpus (at most 10 words).
double neg_sample_gradcheck(const std::vector<std::vector<AttributeId>>& toy_corpus, int dim = 4,
                            int negatives = 2, std::uint64_t seed = 1);

// word2vec.bin: header "CFW2", u32 vocab size, u32 dim, f32 rows in id order.
void save_word2vec(const SemanticEmbeddings& emb, std::uint64_t vocab_hash, std::uint64_t config_hash,
                   const std::filesystem::path& path);
SemanticEmbeddings load_word2vec(const std::filesystem::path& path, std::uint64_t* vocab_hash = nullptr,
                                 std::uint64_t* config_hash = nullptr);

}  // namespace cdisc
