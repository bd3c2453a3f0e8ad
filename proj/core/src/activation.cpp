#include "cdisc/activation.hpp"

#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"

namespace cdisc {

Eigen::VectorXd gap(const FeatureMapView& map) {
    const auto& d = map.dims;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(d.channels);
    std::size_t p = 0;
    for (int cell = 0; cell < d.cells(); ++cell)
        for (int k = 0; k < d.channels; ++k) f(k) += map.values[p++];
    return f;
}

Eigen::MatrixXd gap_all(const Dataset& ds) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(ds.size()), ds.dims.channels);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out.row(static_cast<Eigen::Index>(i)) = gap(ds.feature_map(static_cast<ItemId>(i))).transpose();
    }
    return out;
}

namespace {

// Per-cell score given the attribute's channel response r = image_proj * w.
void accumulate_map(const FeatureMapView& map, const Eigen::VectorXd& response, Eigen::MatrixXd& grid) {
    const auto& d = map.dims;
    grid.resize(d.height, d.width);
    std::size_t p = 0;
    for (int i = 0; i < d.height; ++i) {
        for (int j = 0; j < d.width; ++j) {
            double s = 0.0;
            for (int k = 0; k < d.channels; ++k) s += response(k) * map.values[p++];
            grid(i, j) = s;
        }
    }
}

}  // namespace

AttributeMap eaam(const FeatureMapView& map, const Eigen::MatrixXd& image_proj, const Eigen::VectorXd& attribute_row,
                  AttributeId attribute) {
    if (image_proj.rows() != map.dims.channels || image_proj.cols() != attribute_row.size()) {
        throw DataError("eaam: feature map, projection and attribute dims disagree");
    }
    AttributeMap out;
    out.kind = MapKind::eaam;
    out.attribute = attribute;
    accumulate_map(map, image_proj * attribute_row, out.grid);
    return out;
}

AttributeMap aam_over(AttributeId attribute, const Dataset& ds, const EmbeddingModel& model,
                      std::span<const ItemId> positives) {
    if (positives.empty()) {
        throw DataError("attribute '" + ds.vocab.label(attribute) + "' has no positive training items");
    }
    const Eigen::VectorXd response = model.image_proj * model.attribute(attribute);
    AttributeMap out;
    out.kind = MapKind::aam;
    out.attribute = attribute;
    out.grid = Eigen::MatrixXd::Zero(ds.dims.height, ds.dims.width);
    Eigen::MatrixXd single;
    int n = 0;
    for (ItemId id : positives) {
        accumulate_map(ds.feature_map(id), response, single);
        ++n;
        out.grid += (single - out.grid) / static_cast<double>(n);
    }
    out.support_count = n;
    return out;
}

AttributeMap aam(AttributeId attribute, const Dataset& ds, const EmbeddingModel& model) {
    std::vector<ItemId> positives;
    for (ItemId id : ds.splits.train)
        if (ds.item(id).has(attribute)) positives.push_back(id);
    return aam_over(attribute, ds, model, positives);
}

AamSet compute_all_aams(const Dataset& ds, const EmbeddingModel& model) {
    if (model.feature_dim() != ds.dims.channels || model.vocab_size() != ds.vocab.size()) {
        throw DataError("embedding model does not match the dataset dims or vocabulary");
    }
    std::vector<std::vector<ItemId>> positives(static_cast<std::size_t>(ds.vocab.size()));
    for (ItemId id : ds.splits.train)
        for (AttributeId a : ds.item(id).description) positives[static_cast<std::size_t>(a)].push_back(id);

    AamSet set;
    set.dims = ds.dims;
    set.vocab_size = ds.vocab.size();
    for (AttributeId a = 0; a < ds.vocab.size(); ++a) {
        const auto& p = positives[static_cast<std::size_t>(a)];
        if (p.empty()) {
            set.skipped.push_back(a);
            continue;
        }
        set.maps.emplace(a, aam_over(a, ds, model, p));
    }
    return set;
}

double positive_mass_inside(const Eigen::MatrixXd& grid, const SpatialMask& mask) {
    double inside = 0.0, total = 0.0;
    for (Eigen::Index i = 0; i < grid.rows(); ++i) {
        for (Eigen::Index j = 0; j < grid.cols(); ++j) {
            const double v = grid(i, j);
            if (v <= 0.0) continue;
            total += v;
            if (mask.at(static_cast<int>(i), static_cast<int>(j))) inside += v;
        }
    }
    return total > 0.0 ? inside / total : 0.0;
}

void save_aams(const AamSet& aams, std::uint64_t vocab_hash, std::uint64_t config_hash,
               const std::filesystem::path& path) {
    BinaryWriter w;
    w.header({{'C', 'F', 'A', 'M'}, 1, vocab_hash, config_hash});
    w.u32(static_cast<std::uint32_t>(aams.dims.height));
    w.u32(static_cast<std::uint32_t>(aams.dims.width));
    w.u32(static_cast<std::uint32_t>(aams.vocab_size));
    w.u32(static_cast<std::uint32_t>(aams.maps.size() + aams.skipped.size()));
    for (const auto& [id, m] : aams.maps) {
        w.u32(static_cast<std::uint32_t>(id));
        w.u32(static_cast<std::uint32_t>(m.support_count));
        for (Eigen::Index i = 0; i < m.grid.rows(); ++i)
            for (Eigen::Index j = 0; j < m.grid.cols(); ++j) w.f64_as_f32(m.grid(i, j));
    }
    for (AttributeId id : aams.skipped) {
        w.u32(static_cast<std::uint32_t>(id));
        w.u32(0);
    }
    w.save(path);
}

AamSet load_aams(const std::filesystem::path& path, std::uint64_t* vocab_hash, std::uint64_t* config_hash) {
    auto r = BinaryReader::open(path);
    const auto h = r.header("CFAM");
    AamSet set;
    set.dims.height = static_cast<int>(r.u32());
    set.dims.width = static_cast<int>(r.u32());
    set.dims.channels = 0;
    set.vocab_size = static_cast<int>(r.u32());
    const auto n = r.u32();
    for (std::uint32_t rec = 0; rec < n; ++rec) {
        const auto id = static_cast<AttributeId>(r.u32());
        const auto support = static_cast<int>(r.u32());
        if (id < 0 || id >= set.vocab_size) throw FormatError("aams.bin: attribute id out of range", rec);
        if (support == 0) {
            set.skipped.push_back(id);
            continue;
        }
        AttributeMap m;
        m.kind = MapKind::aam;
        m.attribute = id;
        m.support_count = support;
        m.grid.resize(set.dims.height, set.dims.width);
        for (int i = 0; i < set.dims.height; ++i)
            for (int j = 0; j < set.dims.width; ++j) m.grid(i, j) = r.f32();
        if (!set.maps.emplace(id, std::move(m)).second) throw FormatError("aams.bin: duplicate attribute", rec);
    }
    r.expect_end();
    if (vocab_hash) *vocab_hash = h.vocab_hash;
    if (config_hash) *config_hash = h.config_hash;
    return set;
}

}  // namespace cdisc
