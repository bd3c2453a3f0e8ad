#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "cdisc/corpus.hpp"
#include "cdisc/embedding.hpp"
#include "cdisc/subspace.hpp"

namespace cdisc {

enum class Method { baseline, concept_aware };
Method parse_method(std::string_view name);  // "baseline" | "concept"
std::string_view method_name(Method m);

// Candidate items with their unit embeddings, one row per id.
struct Gallery {
    std::vector<ItemId> ids;
    Eigen::MatrixXd embeddings;

    // Rows of `images` (indexed by item id) for `ids`.
    static Gallery from(const Eigen::MatrixXd& images, std::vector<ItemId> ids);
    std::size_t size() const { return ids.size(); }
};

struct Query {
    ItemId image = 0;
    AttributeId add = 0;  // w_p
    // Drop the query image from the ranking when it is in the gallery.
    bool exclude_image = false;
};

struct RankedItem {
    ItemId id = 0;
    double score = 0.0;
    bool operator==(const RankedItem&) const = default;
};

struct RankedResult {
    std::vector<RankedItem> items;  // descending score, ascending id on ties
    std::optional<AttributeId> negative;  // detected w_n
    Method method = Method::baseline;
    // Concept-aware query answered by the baseline because none-of-above won.
    bool fallback = false;
    // Concept-aware query answered by the baseline because w_p has no
    // concept subspace.
    bool no_subspace = false;
};

// Ranks the gallery by cosine against normalize(x_q + W^{w_p}). `images`
// holds one unit embedding row per item id. k = 0 keeps every item.
RankedResult baseline_query(const Query& query, const Eigen::MatrixXd& images, const EmbeddingModel& model,
                            const Gallery& gallery, std::size_t k = 0);

// Detects w_n as the subspace argmax on x_q and ranks by
// normalize(x_q + W^{w_p} - W^{w_n}); degenerates to the baseline when
// none-of-above wins or w_p has no subspace.
RankedResult concept_query(const Query& query, const Eigen::MatrixXd& images, const EmbeddingModel& model,
                           const Gallery& gallery, const ConceptSubspaces& subspaces, std::size_t k = 0);

RankedResult run_query(Method method, const Query& query, const Eigen::MatrixXd& images, const EmbeddingModel& model,
                       const Gallery& gallery, const ConceptSubspaces& subspaces, std::size_t k = 0);

// Ranking of the gallery against an arbitrary composite vector, which is
// normalized first unless it is zero.
std::vector<RankedItem> rank_gallery(const Eigen::VectorXd& composite, const Gallery& gallery,
                                     std::optional<ItemId> exclude = std::nullopt, std::size_t k = 0);

std::vector<int> default_topk_ks();  // 1, 5, 10, ..., 50

// Per-query outcome of the top-k evaluation.
struct QueryOutcome {
    QueryPair pair;
    int baseline_rank = 0;  // 1-based rank of the first hit
    int concept_rank = 0;
    std::optional<AttributeId> detected;
    bool fallback = false;
    bool no_subspace = false;
    // The query holds exactly one attribute of w_p's discovered concept;
    // `held` names it.
    std::optional<AttributeId> held;
};

struct TopkRow {
    Method method = Method::baseline;
    int k = 0;
    double accuracy = 0.0;
    int n_queries = 0;
};

struct TopkEvaluation {
    std::vector<TopkRow> rows;
    std::vector<QueryOutcome> outcomes;
    std::size_t gallery_size = 0;  // gallery per query, the query excluded

    double accuracy(Method method, int k) const;
    // Share of outcomes with `held` set whose detected w_n equals it.
    double detection_rate() const;
    int detection_cases() const;
};

// Gallery = `split` minus the query item. A retrieved item counts as a hit
// when it is the target or carries an identical description. Throws
// DataError on an empty pair list.
TopkEvaluation evaluate_topk(const std::vector<QueryPair>& pairs, const Dataset& dataset, Split split,
                             const Eigen::MatrixXd& images, const EmbeddingModel& model,
                             const ConceptSubspaces& subspaces, const std::vector<int>& ks = default_topk_ks());

// "method,k,accuracy,n_queries" CSV with a header line.
std::string topk_report(const TopkEvaluation& evaluation);

}  // namespace cdisc
