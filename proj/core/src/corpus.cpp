#include "cdisc/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "cdisc/binary_io.hpp"
#include "cdisc/error.hpp"
#include "cdisc/random.hpp"

namespace fs = std::filesystem;

namespace cdisc {

SpatialMask SpatialMask::full(int height, int width) {
    return SpatialMask{height, width, std::vector<std::uint8_t>(static_cast<std::size_t>(height * width), 1)};
}

SpatialMask SpatialMask::from_rows(const std::vector<std::string>& rows) {
    SpatialMask m;
    m.height = static_cast<int>(rows.size());
    m.width = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != m.width) throw ConfigError("ragged mask rows");
        for (char c : row) {
            if (c == '#' || c == '1') {
                m.cells.push_back(1);
            } else if (c == '.' || c == '0') {
                m.cells.push_back(0);
            } else {
                throw ConfigError(std::string("bad mask character '") + c + "'");
            }
        }
    }
    return m;
}

std::vector<std::string> SpatialMask::to_rows() const {
    std::vector<std::string> rows;
    for (int i = 0; i < height; ++i) {
        std::string row;
        for (int j = 0; j < width; ++j) row.push_back(at(i, j) ? '#' : '.');
        rows.push_back(std::move(row));
    }
    return rows;
}

int SpatialMask::active() const {
    return static_cast<int>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

Vocab::Vocab(std::vector<std::string> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const auto& l = labels_[i];
        if (l.empty() || l.find_first_of(" \t\r\n") != std::string::npos) {
            throw FormatError("attribute label '" + l + "' is empty or contains whitespace", i);
        }
        if (!index_.emplace(l, static_cast<AttributeId>(i)).second) {
            throw FormatError("duplicate attribute label '" + l + "'", i);
        }
    }
}

std::optional<AttributeId> Vocab::find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

AttributeId Vocab::id(std::string_view label) const {
    auto found = find(label);
    if (!found) throw NotFoundError("unknown attribute '" + std::string(label) + "'");
    return *found;
}

std::uint64_t Vocab::hash() const {
    std::uint64_t h = fnv1a("vocab");
    for (const auto& l : labels_) {
        h = fnv1a(l, h);
        h = fnv1a("\n", h);
    }
    return h;
}

bool Item::has(AttributeId a) const {
    return std::find(description.begin(), description.end(), a) != description.end();
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "val") return Split::val;
    if (name == "test") return Split::test;
    throw NotFoundError("unknown split '" + std::string(name) + "'");
}

std::string_view split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

const std::vector<ItemId>& Splits::get(Split s) const {
    switch (s) {
        case Split::train: return train;
        case Split::val: return val;
        case Split::test: return test;
    }
    return test;
}

std::vector<ItemId>& Splits::get(Split s) {
    return const_cast<std::vector<ItemId>&>(std::as_const(*this).get(s));
}

std::vector<AttributeId> GroundTruth::attributes_of(int concept_id) const {
    std::vector<AttributeId> out;
    for (std::size_t a = 0; a < concept_of.size(); ++a) {
        if (concept_of[a] == concept_id) out.push_back(static_cast<AttributeId>(a));
    }
    return out;
}

FeatureMapView Dataset::feature_map(ItemId id) const {
    const std::size_t n = dims.map_size();
    return FeatureMapView{dims, std::span<const float>(features).subspan(static_cast<std::size_t>(id) * n, n)};
}

const Item& Dataset::item(ItemId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= items.size()) {
        throw NotFoundError("unknown item " + std::to_string(id));
    }
    return items[static_cast<std::size_t>(id)];
}

void Dataset::validate() const {
    if (dims.height <= 0 || dims.width <= 0 || dims.channels <= 0) {
        throw FormatError("non-positive dims");
    }
    if (features.size() != items.size() * dims.map_size()) {
        throw FormatError("feature storage holds " + std::to_string(features.size()) +
                          " values, expected " + std::to_string(items.size() * dims.map_size()));
    }
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& it = items[i];
        if (it.id != static_cast<ItemId>(i)) throw FormatError("item ids must be 0..n-1 in order", i);
        if (it.description.empty()) throw FormatError("empty description", i);
        std::set<AttributeId> seen;
        for (AttributeId a : it.description) {
            if (a < 0 || a >= vocab.size()) {
                throw FormatError("unknown attribute id " + std::to_string(a), i);
            }
            if (!seen.insert(a).second) {
                throw FormatError("duplicate attribute id " + std::to_string(a), i);
            }
        }
    }
    std::vector<int> cover(items.size(), 0);
    for (Split s : {Split::train, Split::val, Split::test}) {
        for (ItemId id : splits.get(s)) {
            if (id < 0 || static_cast<std::size_t>(id) >= items.size()) {
                throw FormatError("split references unknown item " + std::to_string(id));
            }
            ++cover[static_cast<std::size_t>(id)];
        }
    }
    for (std::size_t i = 0; i < cover.size(); ++i) {
        if (cover[i] != 1) throw FormatError("splits must be disjoint and cover all items", i);
    }
    if (ground_truth) {
        const auto& gt = *ground_truth;
        if (static_cast<int>(gt.concept_of.size()) != vocab.size()) {
            throw FormatError("ground truth does not cover the vocabulary");
        }
        const auto nc = static_cast<std::size_t>(gt.concept_count());
        if (gt.masks.size() != nc || gt.slots.size() != nc || gt.optional.size() != nc ||
            gt.cumulative.size() != nc) {
            throw FormatError("ground truth concept tables disagree in length");
        }
        for (std::size_t a = 0; a < gt.concept_of.size(); ++a) {
            if (gt.concept_of[a] < 0 || gt.concept_of[a] >= gt.concept_count()) {
                throw FormatError("ground truth names unknown concept", a);
            }
        }
        for (std::size_t c = 0; c < nc; ++c) {
            if (gt.masks[c].height != dims.height || gt.masks[c].width != dims.width) {
                throw FormatError("concept mask dims differ from dataset dims", c);
            }
        }
    }
}

namespace {

SpatialMask rect_mask(int h, int w, int r0, int r1, int c0, int c1) {
    SpatialMask m{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(h * w), 0)};
    for (int i = r0; i < r1; ++i)
        for (int j = c0; j < c1; ++j) m.cells[static_cast<std::size_t>(i * w + j)] = 1;
    return m;
}

}  // namespace

std::vector<ConceptSpec> default_concepts(int h, int w) {
    std::vector<ConceptSpec> specs;

    // The four localized masks tile the frame: neckline on top, sleeves on
    // both sides of the torso, material in its middle, length at the hem.
    // Color and pattern share the full frame.
    specs.push_back({"color", {"red", "blue", "green", "black", "white"}, SpatialMask::full(h, w), 1, {}, false, false});
    specs.push_back({"neckline", {"v-neck", "round-neck", "boat-neck", "halter", "turtleneck"},
                     rect_mask(h, w, 0, h / 4, 0, w), 2, {}, false, false});

    SpatialMask sides = rect_mask(h, w, h / 4, 3 * h / 4, 0, w / 4);
    SpatialMask right = rect_mask(h, w, h / 4, 3 * h / 4, 3 * w / 4, w);
    for (std::size_t i = 0; i < sides.cells.size(); ++i) sides.cells[i] |= right.cells[i];
    // cap-sleeve and bell-sleeve lead the description (slot 0), so their
    // word context looks like the neckline's rather than the other sleeves'.
    specs.push_back({"sleeve", {"sleeveless", "short-sleeve", "long-sleeve", "cap-sleeve", "bell-sleeve"},
                     sides, 3, {3, 3, 3, 0, 0}, false, false});

    specs.push_back({"length", {"mini", "above-knee", "knee-length", "midi", "maxi"},
                     rect_mask(h, w, 3 * h / 4, h, 0, w), 4, {}, true, true});
    specs.push_back({"pattern", {"floral", "striped", "plaid", "polka-dot", "solid"}, SpatialMask::full(h, w), 5, {}, false, false});
    specs.push_back({"material", {"cotton", "silk", "denim", "chiffon", "wool"},
                     rect_mask(h, w, h / 4, 3 * h / 4, w / 4, 3 * w / 4), 6, {}, false, false});
    return specs;
}

CorpusConfig default_corpus_config() {
    CorpusConfig c;
    c.concepts = default_concepts(c.dims.height, c.dims.width);
    return c;
}

void validate_corpus_config(const CorpusConfig& config) {
    if (config.concepts.empty()) throw ConfigError("corpus spec has no concepts");
    if (config.dims.height <= 0 || config.dims.width <= 0 || config.dims.channels <= 0) {
        throw ConfigError("corpus dims must be positive");
    }
    if (config.n_items < 1) throw ConfigError("n_items must be positive");
    if (!(config.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be non-negative");
    if (!(config.train_fraction > 0.0) || !(config.val_fraction >= 0.0) ||
        config.train_fraction + config.val_fraction >= 1.0) {
        throw ConfigError("split fractions must leave a nonempty test split");
    }
    std::set<std::string> labels;
    std::set<int> slots;
    std::size_t total = 0;
    for (const auto& c : config.concepts) {
        if (c.attributes.size() < 2) throw ConfigError("concept '" + c.name + "' needs at least 2 attributes");
        if (c.mask.height != config.dims.height || c.mask.width != config.dims.width) {
            throw ConfigError("mask of concept '" + c.name + "' does not match H x W");
        }
        if (c.mask.active() < 1) throw ConfigError("mask of concept '" + c.name + "' has no active cell");
        if (!slots.insert(c.semantic_slot).second) {
            throw ConfigError("semantic slot " + std::to_string(c.semantic_slot) + " used twice");
        }
        if (!c.attribute_slots.empty() && c.attribute_slots.size() != c.attributes.size()) {
            throw ConfigError("attribute_slots of '" + c.name + "' must parallel its attributes");
        }
        for (const auto& a : c.attributes) {
            if (!labels.insert(a).second) throw ConfigError("attribute '" + a + "' appears twice");
        }
        total += c.attributes.size();
    }
    if (static_cast<std::size_t>(config.dims.channels) < total) {
        throw ConfigError("K=" + std::to_string(config.dims.channels) + " channels cannot hold " +
                          std::to_string(total) + " attribute signatures");
    }
}

Dataset generate_synthetic(const CorpusConfig& config, std::uint64_t seed) {
    validate_corpus_config(config);
    Rng rng(seed);
    const Dims dims = config.dims;

    Dataset ds;
    ds.dims = dims;

    // Attribute ids are concept-major; attribute id doubles as its channel.
    std::vector<std::string> labels;
    GroundTruth gt;
    std::vector<int> first_attr;
    for (std::size_t c = 0; c < config.concepts.size(); ++c) {
        const auto& spec = config.concepts[c];
        first_attr.push_back(static_cast<int>(labels.size()));
        for (const auto& a : spec.attributes) {
            labels.push_back(a);
            gt.concept_of.push_back(static_cast<int>(c));
        }
        gt.concept_names.push_back(spec.name);
        gt.masks.push_back(spec.mask);
        gt.slots.push_back(spec.semantic_slot);
        gt.optional.push_back(spec.optional);
        gt.cumulative.push_back(spec.cumulative);
    }
    ds.vocab = Vocab(std::move(labels));

    const std::size_t map_size = dims.map_size();
    const auto n_items = static_cast<std::size_t>(config.n_items);
    ds.features.assign(n_items * map_size, 0.0f);
    ds.items.reserve(n_items);

    struct Chosen {
        int slot;
        std::size_t concept_index;
        AttributeId attribute;
    };

    for (std::size_t n = 0; n < n_items; ++n) {
        std::vector<Chosen> chosen;
        do {
            chosen.clear();
            for (std::size_t c = 0; c < config.concepts.size(); ++c) {
                const auto& spec = config.concepts[c];
                if (spec.optional && !rng.bernoulli(0.5)) continue;
                const auto pick = static_cast<std::size_t>(rng.index(spec.attributes.size()));
                chosen.push_back({spec.slot_of(pick), c, first_attr[c] + static_cast<int>(pick)});
            }
        } while (chosen.empty());

        std::span<float> map(ds.features.data() + n * map_size, map_size);
        for (const auto& ch : chosen) {
            const auto& spec = config.concepts[ch.concept_index];
            const int level = ch.attribute - first_attr[ch.concept_index];
            const int lowest = spec.cumulative ? 0 : level;
            for (int i = 0; i < dims.height; ++i) {
                for (int j = 0; j < dims.width; ++j) {
                    if (!spec.mask.at(i, j)) continue;
                    const std::size_t cell = static_cast<std::size_t>(i * dims.width + j) *
                                             static_cast<std::size_t>(dims.channels);
                    for (int l = lowest; l <= level; ++l) {
                        map[cell + static_cast<std::size_t>(first_attr[ch.concept_index] + l)] += 1.0f;
                    }
                }
            }
        }
        if (config.noise_sigma > 0.0) {
            for (float& v : map) v += static_cast<float>(rng.normal(0.0, config.noise_sigma));
        }

        std::stable_sort(chosen.begin(), chosen.end(), [](const Chosen& a, const Chosen& b) {
            return a.slot != b.slot ? a.slot < b.slot : a.concept_index < b.concept_index;
        });
        Item item;
        item.id = static_cast<ItemId>(n);
        for (const auto& ch : chosen) item.description.push_back(ch.attribute);
        ds.items.push_back(std::move(item));
    }

    std::vector<ItemId> order(n_items);
    for (std::size_t i = 0; i < n_items; ++i) order[i] = static_cast<ItemId>(i);
    rng.shuffle(std::span<ItemId>(order));
    const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(n_items)));
    const auto n_val = static_cast<std::size_t>(std::llround(config.val_fraction * static_cast<double>(n_items)));
    ds.splits.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    ds.splits.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n_items, n_train + n_val)));
    ds.splits.test.assign(order.begin() + static_cast<std::ptrdiff_t>(std::min(n_items, n_train + n_val)), order.end());
    std::sort(ds.splits.train.begin(), ds.splits.train.end());
    std::sort(ds.splits.val.begin(), ds.splits.val.end());
    std::sort(ds.splits.test.begin(), ds.splits.test.end());

    ds.ground_truth = std::move(gt);
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// On-disk format

namespace {

constexpr std::string_view kDatasetMagic = "CFDS";
constexpr int kDatasetVersion = 1;

std::vector<std::string> split_ws(std::string_view line) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.emplace_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

long long to_int(const std::string& s, std::size_t record) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw FormatError("expected integer, got '" + s + "'", record);
    }
    return v;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace

void save_dataset(const Dataset& ds, const fs::path& dir) {
    ds.validate();
    fs::create_directories(dir);

    std::ostringstream m;
    m << kDatasetMagic << ' ' << kDatasetVersion << '\n';
    m << "dims " << ds.dims.height << ' ' << ds.dims.width << ' ' << ds.dims.channels << '\n';
    m << "items " << ds.items.size() << '\n';
    m << "config_hash " << hex64(ds.config_hash) << '\n';
    m << "vocab " << ds.vocab.size() << '\n';
    for (int a = 0; a < ds.vocab.size(); ++a) m << a << ' ' << ds.vocab.label(a) << '\n';
    if (ds.ground_truth) {
        const auto& gt = *ds.ground_truth;
        m << "ground_truth " << gt.concept_count() << '\n';
        for (int c = 0; c < gt.concept_count(); ++c) {
            const auto cu = static_cast<std::size_t>(c);
            m << "concept " << c << ' ' << gt.concept_names[cu] << ' ' << gt.slots[cu] << ' '
              << (gt.optional[cu] ? 1 : 0) << ' ' << (gt.cumulative[cu] ? 1 : 0) << ' ';
            for (auto cell : gt.masks[cu].cells) m << (cell ? '1' : '0');
            m << '\n';
        }
        for (std::size_t a = 0; a < gt.concept_of.size(); ++a) m << "gt " << a << ' ' << gt.concept_of[a] << '\n';
    }
    for (Split s : {Split::train, Split::val, Split::test}) {
        const auto& ids = ds.splits.get(s);
        m << "split " << split_name(s) << ' ' << ids.size();
        for (ItemId id : ids) m << ' ' << id;
        m << '\n';
    }
    write_text_file(dir / "manifest", m.str());

    BinaryWriter fw;
    fw.f32s(ds.features);
    fw.save(dir / "features.bin");

    std::ostringstream d;
    for (const auto& it : ds.items) {
        d << it.id;
        for (AttributeId a : it.description) d << ' ' << a;
        d << '\n';
    }
    write_text_file(dir / "descriptions", d.str());
}

Dataset load_dataset(const fs::path& dir) {
    const auto lines = lines_of(read_text_file(dir / "manifest"));
    Dataset ds;
    std::size_t li = 0;
    auto next = [&]() -> std::vector<std::string> {
        while (li < lines.size()) {
            auto toks = split_ws(lines[li++]);
            if (!toks.empty()) return toks;
        }
        return {};
    };

    auto head = next();
    if (head.size() != 2 || head[0] != kDatasetMagic) throw FormatError("manifest: bad magic", 0);
    if (to_int(head[1], 0) != kDatasetVersion) throw FormatError("manifest: unsupported version", 0);

    std::size_t n_items = 0;
    bool have_dims = false, have_items = false, have_vocab = false;
    std::vector<std::string> labels;
    std::optional<GroundTruth> gt;
    std::vector<std::pair<int, int>> gt_pairs;

    for (auto toks = next(); !toks.empty(); toks = next()) {
        const std::size_t rec = li - 1;
        const auto& key = toks[0];
        if (key == "dims" && toks.size() == 4) {
            ds.dims = Dims{static_cast<int>(to_int(toks[1], rec)), static_cast<int>(to_int(toks[2], rec)),
                           static_cast<int>(to_int(toks[3], rec))};
            if (ds.dims.height <= 0 || ds.dims.width <= 0 || ds.dims.channels <= 0) {
                throw FormatError("manifest: non-positive dims", rec);
            }
            have_dims = true;
        } else if (key == "items" && toks.size() == 2) {
            n_items = static_cast<std::size_t>(to_int(toks[1], rec));
            have_items = true;
        } else if (key == "config_hash" && toks.size() == 2) {
            ds.config_hash = parse_hex64(toks[1]);
        } else if (key == "vocab" && toks.size() == 2) {
            const auto n = static_cast<std::size_t>(to_int(toks[1], rec));
            for (std::size_t a = 0; a < n; ++a) {
                auto row = next();
                const std::size_t r = li - 1;
                if (row.size() != 2 || to_int(row[0], r) != static_cast<long long>(a)) {
                    throw FormatError("manifest: vocab lines must be '<id> <label>' in id order", r);
                }
                labels.push_back(row[1]);
            }
            have_vocab = true;
        } else if (key == "ground_truth" && toks.size() == 2) {
            gt.emplace();
            const auto n = static_cast<std::size_t>(to_int(toks[1], rec));
            for (std::size_t c = 0; c < n; ++c) {
                auto row = next();
                const std::size_t r = li - 1;
                if (row.size() != 7 || row[0] != "concept" || to_int(row[1], r) != static_cast<long long>(c)) {
                    throw FormatError("manifest: malformed concept line", r);
                }
                if (!have_dims) throw FormatError("manifest: concept before dims", r);
                gt->concept_names.push_back(row[2]);
                gt->slots.push_back(static_cast<int>(to_int(row[3], r)));
                gt->optional.push_back(to_int(row[4], r) != 0);
                gt->cumulative.push_back(to_int(row[5], r) != 0);
                if (row[6].size() != static_cast<std::size_t>(ds.dims.cells())) {
                    throw FormatError("manifest: concept mask size differs from H x W", r);
                }
                SpatialMask mask{ds.dims.height, ds.dims.width, {}};
                for (char ch : row[6]) mask.cells.push_back(ch == '1' ? 1 : 0);
                gt->masks.push_back(std::move(mask));
            }
        } else if (key == "gt" && toks.size() == 3) {
            gt_pairs.emplace_back(static_cast<int>(to_int(toks[1], rec)), static_cast<int>(to_int(toks[2], rec)));
        } else if (key == "split" && toks.size() >= 3) {
            const Split s = parse_split(toks[1]);
            const auto n = static_cast<std::size_t>(to_int(toks[2], rec));
            if (toks.size() != 3 + n) throw FormatError("manifest: split count mismatch", rec);
            auto& ids = ds.splits.get(s);
            for (std::size_t i = 0; i < n; ++i) ids.push_back(static_cast<ItemId>(to_int(toks[3 + i], rec)));
        } else {
            throw FormatError("manifest: unrecognised line '" + key + "'", rec);
        }
    }
    if (!have_dims || !have_items || !have_vocab) throw FormatError("manifest: missing dims, items or vocab");
    ds.vocab = Vocab(std::move(labels));
    if (gt) {
        gt->concept_of.assign(static_cast<std::size_t>(ds.vocab.size()), -1);
        for (auto [a, c] : gt_pairs) {
            if (a < 0 || a >= ds.vocab.size()) throw FormatError("manifest: ground truth for unknown attribute", static_cast<std::size_t>(a));
            gt->concept_of[static_cast<std::size_t>(a)] = c;
        }
        ds.ground_truth = std::move(gt);
    } else if (!gt_pairs.empty()) {
        throw FormatError("manifest: gt lines without a ground_truth section");
    }

    auto reader = BinaryReader::open(dir / "features.bin");
    const std::size_t expected = n_items * ds.dims.map_size();
    if (reader.remaining() != expected * sizeof(float)) {
        throw FormatError("features.bin holds " + std::to_string(reader.remaining()) + " bytes, dims " +
                          std::to_string(ds.dims.height) + "x" + std::to_string(ds.dims.width) + "x" +
                          std::to_string(ds.dims.channels) + " x " + std::to_string(n_items) + " items need " +
                          std::to_string(expected * sizeof(float)));
    }
    ds.features.resize(expected);
    reader.f32s(ds.features);

    const auto dlines = lines_of(read_text_file(dir / "descriptions"));
    std::size_t rec = 0;
    for (const auto& line : dlines) {
        auto toks = split_ws(line);
        if (toks.empty()) {
            ++rec;
            continue;
        }
        Item it;
        it.id = static_cast<ItemId>(to_int(toks[0], rec));
        if (it.id != static_cast<ItemId>(ds.items.size())) throw FormatError("descriptions: ids out of order", rec);
        for (std::size_t i = 1; i < toks.size(); ++i) {
            const auto a = to_int(toks[i], rec);
            if (a < 0 || a >= ds.vocab.size()) {
                throw FormatError("descriptions: unknown attribute id " + toks[i], rec);
            }
            it.description.push_back(static_cast<AttributeId>(a));
        }
        ds.items.push_back(std::move(it));
        ++rec;
    }
    if (ds.items.size() != n_items) {
        throw FormatError("descriptions: " + std::to_string(ds.items.size()) + " items, manifest declares " +
                          std::to_string(n_items));
    }
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------

std::vector<QueryPair> make_query_pairs(const Dataset& ds, Split split) {
    // Two descriptions differ by a single substitution iff removing one
    // attribute from each leaves the same set. Bucket every item under each
    // of its leave-one-out keys and pair bucket members.
    struct Entry {
        ItemId item;
        AttributeId dropped;
    };
    std::map<std::vector<AttributeId>, std::vector<Entry>> buckets;
    for (ItemId id : ds.splits.get(split)) {
        std::vector<AttributeId> sorted = ds.item(id).description;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            std::vector<AttributeId> key;
            key.reserve(sorted.size() - 1);
            for (std::size_t j = 0; j < sorted.size(); ++j)
                if (j != i) key.push_back(sorted[j]);
            buckets[std::move(key)].push_back({id, sorted[i]});
        }
    }

    std::vector<QueryPair> pairs;
    for (const auto& [key, entries] : buckets) {
        for (const auto& q : entries) {
            for (const auto& t : entries) {
                if (q.item == t.item || q.dropped == t.dropped) continue;
                if (ds.ground_truth &&
                    ds.ground_truth->concept_of[static_cast<std::size_t>(q.dropped)] !=
                        ds.ground_truth->concept_of[static_cast<std::size_t>(t.dropped)]) {
                    continue;
                }
                pairs.push_back({q.item, t.item, t.dropped, q.dropped});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const QueryPair& a, const QueryPair& b) {
        return a.query != b.query ? a.query < b.query : a.target < b.target;
    });
    return pairs;
}

}  // namespace cdisc
