#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdisc/corpus.hpp"
#include "cdisc/embedding.hpp"

namespace cdisc {

// f_k = sum over cells of q_k(i, j). This is a spatial sum, not a mean.
Eigen::VectorXd gap(const FeatureMapView& map);

// One GAP feature row per item id.
Eigen::MatrixXd gap_all(const Dataset& dataset);

enum class MapKind { eaam, aam };

struct AttributeMap {
    Eigen::MatrixXd grid;  // H x W
    MapKind kind = MapKind::eaam;
    AttributeId attribute = -1;
    int support_count = 0;  // |P_a| for an AAM, 0 for a single-image map
};

// Embedded attribute activation map of one image:
//   M(i, j) = sum_m w_m sum_k image_proj(k, m) q_k(i, j)
// where w is the attribute embedding (callers pass the normalized row).
// Its cells sum to w . (image_proj^T f) on the unnormalized projection.
AttributeMap eaam(const FeatureMapView& map, const Eigen::MatrixXd& image_proj, const Eigen::VectorXd& attribute_row,
                  AttributeId attribute = -1);

// Mean EAAM over `positives`, accumulated as a running mean.
// Throws DataError when `positives` is empty.
AttributeMap aam_over(AttributeId attribute, const Dataset& dataset, const EmbeddingModel& model,
                      std::span<const ItemId> positives);

// AAM over the training items whose description contains the attribute.
AttributeMap aam(AttributeId attribute, const Dataset& dataset, const EmbeddingModel& model);

struct AamSet {
    Dims dims;
    int vocab_size = 0;
    std::map<AttributeId, AttributeMap> maps;
    std::vector<AttributeId> skipped;  // attributes without training support
};

AamSet compute_all_aams(const Dataset& dataset, const EmbeddingModel& model);

// Share of the map's positive mass that falls inside the mask; 0 when the
// map has no positive cell.
double positive_mass_inside(const Eigen::MatrixXd& grid, const SpatialMask& mask);

// aams.bin: header "CFAM", u32 H, u32 W, u32 vocab size, u32 record count,
// then per record u32 id, u32 support and, when support > 0, H*W f32.
// Skipped attributes are written as records with support 0.
void save_aams(const AamSet& aams, std::uint64_t vocab_hash, std::uint64_t config_hash,
               const std::filesystem::path& path);
AamSet load_aams(const std::filesystem::path& path, std::uint64_t* vocab_hash = nullptr,
                 std::uint64_t* config_hash = nullptr);

}  // namespace cdisc
