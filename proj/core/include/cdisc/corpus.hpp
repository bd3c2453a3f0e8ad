#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cdisc {

using AttributeId = int;
using ItemId = int;

struct Dims {
    int height = 8;
    int width = 8;
    int channels = 64;

    int cells() const { return height * width; }
    std::size_t map_size() const {
        return static_cast<std::size_t>(height) * static_cast<std::size_t>(width) *
               static_cast<std::size_t>(channels);
    }
    bool operator==(const Dims&) const = default;
};

// H x W binary grid, row-major.
struct SpatialMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> cells;

    static SpatialMask full(int height, int width);
    // One string per row; '#' or '1' marks an active cell.
    static SpatialMask from_rows(const std::vector<std::string>& rows);
    std::vector<std::string> to_rows() const;

    bool at(int i, int j) const { return cells[static_cast<std::size_t>(i * width + j)] != 0; }
    int active() const;
    bool operator==(const SpatialMask&) const = default;
};

// One planted concept of the synthetic generator.
struct ConceptSpec {
    std::string name;
    std::vector<std::string> attributes;
    SpatialMask mask;
    // Position of this concept's word within generated descriptions.
    int semantic_slot = 0;
    // Per-attribute slot overrides, parallel to `attributes`; empty means
    // every attribute sits at `semantic_slot`.
    std::vector<int> attribute_slots;
    // Present in an item with probability 0.5 only.
    bool optional = false;
    // Ordinal concept: attribute i also lights the channels of attributes
    // 0..i-1 (a thermometer code), so levels are ordered in feature space.
    bool cumulative = false;

    int slot_of(std::size_t attribute_index) const {
        return attribute_slots.empty() ? semantic_slot : attribute_slots[attribute_index];
    }
};

class Vocab {
public:
    Vocab() = default;
    explicit Vocab(std::vector<std::string> labels);

    int size() const { return static_cast<int>(labels_.size()); }
    const std::string& label(AttributeId id) const { return labels_.at(static_cast<std::size_t>(id)); }
    const std::vector<std::string>& labels() const { return labels_; }
    std::optional<AttributeId> find(std::string_view label) const;
    AttributeId id(std::string_view label) const;  // throws NotFoundError
    // Hash of the id -> label table; embedded in every model artifact.
    std::uint64_t hash() const;

    bool operator==(const Vocab& o) const { return labels_ == o.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, AttributeId> index_;
};

struct Item {
    ItemId id = 0;
    // Attribute ids in description order.
    std::vector<AttributeId> description;

    bool has(AttributeId a) const;
    bool operator==(const Item&) const = default;
};

enum class Split { train, val, test };
Split parse_split(std::string_view name);
std::string_view split_name(Split s);

struct Splits {
    std::vector<ItemId> train;
    std::vector<ItemId> val;
    std::vector<ItemId> test;

    const std::vector<ItemId>& get(Split s) const;
    std::vector<ItemId>& get(Split s);
    bool operator==(const Splits&) const = default;
};

// Planted assignment of attributes to concepts (synthetic data only).
struct GroundTruth {
    std::vector<int> concept_of;  // attribute id -> concept id
    std::vector<std::string> concept_names;
    std::vector<SpatialMask> masks;  // per concept
    std::vector<int> slots;
    std::vector<bool> optional;
    std::vector<bool> cumulative;

    int concept_count() const { return static_cast<int>(concept_names.size()); }
    std::vector<AttributeId> attributes_of(int concept_id) const;
    bool operator==(const GroundTruth&) const = default;
};

// Read-only view of one H x W x K activation grid, row-major.
struct FeatureMapView {
    Dims dims;
    std::span<const float> values;

    float at(int i, int j, int k) const {
        return values[(static_cast<std::size_t>(i) * static_cast<std::size_t>(dims.width) +
                       static_cast<std::size_t>(j)) *
                          static_cast<std::size_t>(dims.channels) +
                      static_cast<std::size_t>(k)];
    }
};

struct Dataset {
    Dims dims;
    Vocab vocab;
    std::vector<Item> items;  // items[i].id == i
    std::vector<float> features;  // items.size() * dims.map_size()
    std::optional<GroundTruth> ground_truth;
    Splits splits;
    std::uint64_t config_hash = 0;

    FeatureMapView feature_map(ItemId id) const;
    const Item& item(ItemId id) const;
    std::size_t size() const { return items.size(); }
    // Checks every structural invariant; throws FormatError naming the
    // offending record.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

struct CorpusConfig {
    Dims dims;
    std::vector<ConceptSpec> concepts;
    int n_items = 2000;
    double noise_sigma = 0.1;
    double train_fraction = 0.7;
    double val_fraction = 0.1;
};

// Six concepts of five attributes each, with two full-frame concepts that
// share a mask and a sleeve concept whose attributes straddle two slots.
// Length is optional and ordinal.
std::vector<ConceptSpec> default_concepts(int height = 8, int width = 8);
CorpusConfig default_corpus_config();

void validate_corpus_config(const CorpusConfig& config);

Dataset generate_synthetic(const CorpusConfig& config, std::uint64_t seed);

// Directory layout: manifest, features.bin, descriptions.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

struct QueryPair {
    ItemId query = 0;
    ItemId target = 0;
    AttributeId added = 0;    // in target, not in query
    AttributeId removed = 0;  // in query, not in target
    bool operator==(const QueryPair&) const = default;
};

// All ordered pairs in the split whose descriptions differ by one
// substituted attribute. With ground truth, both attributes must belong to
// the same planted concept. Sorted by (query, target).
std::vector<QueryPair> make_query_pairs(const Dataset& dataset, Split split);

}  // namespace cdisc
