#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdisc/corpus.hpp"

namespace cdisc {

// Joint visual-semantic space. An image feature f maps to
// x = image_proj^T f and a description to the mean of its attribute rows.
struct EmbeddingModel {
    Eigen::MatrixXd image_proj;  // K' x D
    Eigen::MatrixXd attr_embed;  // M x D, row a is the attribute embedding W^a
    double margin = 0.2;

    int feature_dim() const { return static_cast<int>(image_proj.rows()); }
    int dim() const { return static_cast<int>(image_proj.cols()); }
    int vocab_size() const { return static_cast<int>(attr_embed.rows()); }

    // Row a of attr_embed, L2-normalized.
    Eigen::VectorXd attribute(AttributeId a) const;
    bool operator==(const EmbeddingModel& o) const {
        return margin == o.margin && image_proj == o.image_proj && attr_embed == o.attr_embed;
    }
};

struct EmbeddingTrainConfig {
    int dim = 64;
    double lr = 0.05;
    double lr_decay = 2.0;  // divide lr by this ...
    int decay_every = 8;    // ... after every this many epochs
    int batch_size = 32;
    double margin = 0.2;
    int epochs = 30;
};

// Learning rate used during 0-based `epoch`.
double learning_rate_at(const EmbeddingTrainConfig& config, int epoch);

EmbeddingModel init_embedding(int feature_dim, int dim, int vocab_size, double margin, std::uint64_t seed);

// Bag-of-words description vector, L2-normalized. Rejects empty or
// duplicated descriptions and out-of-range ids.
Eigen::VectorXd encode_description(std::span<const AttributeId> description, const Eigen::MatrixXd& attr_embed);

// x = image_proj^T f, optionally L2-normalized (a zero projection cannot be
// normalized and raises DataError).
Eigen::VectorXd project_image(const Eigen::VectorXd& feature, const Eigen::MatrixXd& image_proj, bool normalize);

// Bidirectional hinge over unit vectors. Row i of `images` matches row i of
// `texts`; every other row is a negative unless `same_description(i, j)`.
// Loss and gradients are averaged over the batch.
struct HingeResult {
    double loss = 0.0;
    Eigen::MatrixXd grad_images;  // d loss / d images
    Eigen::MatrixXd grad_texts;   // d loss / d texts
    int active_terms = 0;
};
HingeResult bidirectional_hinge(const Eigen::MatrixXd& images, const Eigen::MatrixXd& texts,
                                const std::vector<std::vector<bool>>& same_description, double margin);

struct ContrastiveResult {
    double loss = 0.0;
    Eigen::MatrixXd grad_image_proj;  // K' x D
    Eigen::MatrixXd grad_attr_embed;  // M x D
};

// Loss of a batch of (GAP feature row, description) pairs with gradients
// back through normalization into the model parameters. Needs B >= 2.
ContrastiveResult contrastive_loss(const EmbeddingModel& model, const Eigen::MatrixXd& features,
                                   std::span<const std::vector<AttributeId>> descriptions);

struct EmbeddingTrainLog {
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> epoch_losses;
};

// Mini-batch SGD over the training split. `features` holds one GAP feature
// row per item id. Throws DivergenceError on a non-finite loss.
EmbeddingModel train_embedding(const Dataset& dataset, const Eigen::MatrixXd& features,
                               const EmbeddingTrainConfig& config, std::uint64_t seed,
                               EmbeddingTrainLog* log = nullptr);

// Mean contrastive loss over the split with fixed batches in id order.
double dataset_loss(const EmbeddingModel& model, const Dataset& dataset, const Eigen::MatrixXd& features,
                    const std::vector<ItemId>& ids, int batch_size);

// Unit image embeddings, one row per item id.
Eigen::MatrixXd embed_images(const EmbeddingModel& model, const Eigen::MatrixXd& features);

struct Separation {
    double matching = 0.0;      // mean cosine d(x, v) over matching pairs
    double non_matching = 0.0;  // mean d(x, v_k) over pairs with different descriptions
};
Separation embedding_separation(const EmbeddingModel& model, const Dataset& dataset,
                                const Eigen::MatrixXd& features, const std::vector<ItemId>& ids);

struct MedianRanks {
    double text_to_image = 0.0;
    double image_to_text = 0.0;
};
// Rank of the first correct match, where any item sharing the exact
// description counts as correct. 1 is best.
MedianRanks retrieval_sanity(const EmbeddingModel& model, const Dataset& dataset, const Eigen::MatrixXd& features,
                             const std::vector<ItemId>& ids);

// embedding.bin: header "CFEM", u32 K', u32 D, u32 M, f32 margin, then
// image_proj rows and attr_embed rows as f32.
void save_embedding(const EmbeddingModel& model, std::uint64_t vocab_hash, std::uint64_t config_hash,
                    const std::filesystem::path& path);
EmbeddingModel load_embedding(const std::filesystem::path& path, std::uint64_t* vocab_hash = nullptr,
                              std::uint64_t* config_hash = nullptr);

}  // namespace cdisc
