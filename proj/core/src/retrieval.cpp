#include "cdisc/retrieval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cdisc/error.hpp"

namespace cdisc {

Method parse_method(std::string_view name) {
    if (name == "baseline") return Method::baseline;
    if (name == "concept") return Method::concept_aware;
    throw ConfigError("unknown retrieval method '" + std::string(name) + "'");
}

std::string_view method_name(Method m) { return m == Method::baseline ? "baseline" : "concept"; }

Gallery Gallery::from(const Eigen::MatrixXd& images, std::vector<ItemId> ids) {
    Gallery g;
    g.embeddings.resize(static_cast<Eigen::Index>(ids.size()), images.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= images.rows()) throw NotFoundError("unknown item " + std::to_string(ids[i]));
        g.embeddings.row(static_cast<Eigen::Index>(i)) = images.row(ids[i]);
    }
    g.ids = std::move(ids);
    return g;
}

std::vector<RankedItem> rank_gallery(const Eigen::VectorXd& composite, const Gallery& gallery,
                                     std::optional<ItemId> exclude, std::size_t k) {
    Eigen::VectorXd c = composite;
    const double n = c.norm();
    if (n > 0.0) c /= n;
    const Eigen::VectorXd scores = gallery.embeddings * c;
    std::vector<RankedItem> out;
    out.reserve(gallery.size());
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        if (exclude && gallery.ids[i] == *exclude) continue;
        out.push_back({gallery.ids[i], scores(static_cast<Eigen::Index>(i))});
    }
    auto better = [](const RankedItem& a, const RankedItem& b) {
        return a.score != b.score ? a.score > b.score : a.id < b.id;
    };
    if (k > 0 && k < out.size()) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), better);
        out.resize(k);
    } else {
        std::sort(out.begin(), out.end(), better);
    }
    return out;
}

namespace {

void check_query(const Query& q, const Eigen::MatrixXd& images, const EmbeddingModel& model) {
    if (q.image < 0 || q.image >= images.rows()) throw NotFoundError("unknown item " + std::to_string(q.image));
    if (q.add < 0 || q.add >= model.vocab_size()) throw NotFoundError("unknown attribute " + std::to_string(q.add));
}

std::optional<ItemId> excluded(const Query& q) {
    return q.exclude_image ? std::optional<ItemId>(q.image) : std::nullopt;
}

}  // namespace

RankedResult baseline_query(const Query& q, const Eigen::MatrixXd& images, const EmbeddingModel& model,
                            const Gallery& gallery, std::size_t k) {
    check_query(q, images, model);
    RankedResult r;
    r.method = Method::baseline;
    const Eigen::VectorXd composite = images.row(q.image).transpose() + model.attribute(q.add);
    r.items = rank_gallery(composite, gallery, excluded(q), k);
    return r;
}

RankedResult concept_query(const Query& q, const Eigen::MatrixXd& images, const EmbeddingModel& model,
                           const Gallery& gallery, const ConceptSubspaces& subspaces, std::size_t k) {
    check_query(q, images, model);
    const SubspaceModel* sub = subspaces.for_attribute(q.add);
    if (!sub) {
        RankedResult r = baseline_query(q, images, model, gallery, k);
        r.method = Method::concept_aware;
        r.no_subspace = true;
        return r;
    }
    const Eigen::VectorXd xq = images.row(q.image).transpose();
    const int cls = sub->argmax(xq);
    if (cls == sub->none_class()) {
        RankedResult r = baseline_query(q, images, model, gallery, k);
        r.method = Method::concept_aware;
        r.fallback = true;
        return r;
    }
    RankedResult r;
    r.method = Method::concept_aware;
    r.negative = sub->attributes[static_cast<std::size_t>(cls)];
    // The difference is formed first so that w_p == w_n cancels exactly.
    const Eigen::VectorXd composite = xq + (model.attribute(q.add) - model.attribute(*r.negative));
    r.items = rank_gallery(composite, gallery, excluded(q), k);
    return r;
}

RankedResult run_query(Method method, const Query& q, const Eigen::MatrixXd& images, const EmbeddingModel& model,
                       const Gallery& gallery, const ConceptSubspaces& subspaces, std::size_t k) {
    return method == Method::baseline ? baseline_query(q, images, model, gallery, k)
                                      : concept_query(q, images, model, gallery, subspaces, k);
}

std::vector<int> default_topk_ks() {
    std::vector<int> ks{1};
    for (int k = 5; k <= 50; k += 5) ks.push_back(k);
    return ks;
}

double TopkEvaluation::accuracy(Method method, int k) const {
    for (const auto& row : rows)
        if (row.method == method && row.k == k) return row.accuracy;
    throw NotFoundError("no top-" + std::to_string(k) + " row for " + std::string(method_name(method)));
}

int TopkEvaluation::detection_cases() const {
    return static_cast<int>(std::count_if(outcomes.begin(), outcomes.end(),
                                          [](const QueryOutcome& o) { return o.held.has_value(); }));
}

double TopkEvaluation::detection_rate() const {
    int cases = 0, hits = 0;
    for (const auto& o : outcomes) {
        if (!o.held) continue;
        ++cases;
        if (o.detected == o.held) ++hits;
    }
    return cases ? static_cast<double>(hits) / cases : 0.0;
}

namespace {

int first_hit(const std::vector<RankedItem>& ranked, const Dataset& ds, ItemId target) {
    const auto& want = ds.item(target).description;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i].id == target || ds.item(ranked[i].id).description == want) return static_cast<int>(i) + 1;
    }
    return static_cast<int>(ranked.size()) + 1;
}

}  // namespace

TopkEvaluation evaluate_topk(const std::vector<QueryPair>& pairs, const Dataset& ds, Split split,
                             const Eigen::MatrixXd& images, const EmbeddingModel& model,
                             const ConceptSubspaces& subspaces, const std::vector<int>& ks) {
    if (pairs.empty()) throw DataError("evaluate_topk: no query pairs");
    const Gallery gallery = Gallery::from(images, ds.splits.get(split));
    TopkEvaluation ev;
    ev.gallery_size = gallery.size() - 1;

    for (const auto& p : pairs) {
        const Query q{p.query, p.added, true};
        QueryOutcome o;
        o.pair = p;
        o.baseline_rank = first_hit(baseline_query(q, images, model, gallery).items, ds, p.target);
        const RankedResult c = concept_query(q, images, model, gallery, subspaces);
        o.concept_rank = first_hit(c.items, ds, p.target);
        o.detected = c.negative;
        o.fallback = c.fallback;
        o.no_subspace = c.no_subspace;
        if (const SubspaceModel* sub = subspaces.for_attribute(p.added)) {
            int hits = 0;
            for (AttributeId a : sub->attributes) {
                if (ds.item(p.query).has(a)) {
                    o.held = a;
                    ++hits;
                }
            }
            if (hits != 1) o.held.reset();
        }
        ev.outcomes.push_back(o);
    }

    const int n = static_cast<int>(ev.outcomes.size());
    for (Method m : {Method::baseline, Method::concept_aware}) {
        for (int k : ks) {
            int hits = 0;
            for (const auto& o : ev.outcomes) {
                if ((m == Method::baseline ? o.baseline_rank : o.concept_rank) <= k) ++hits;
            }
            ev.rows.push_back({m, k, static_cast<double>(hits) / n, n});
        }
    }
    return ev;
}

std::string topk_report(const TopkEvaluation& ev) {
    std::ostringstream out;
    out << "method,k,accuracy,n_queries\n";
    char buf[32];
    for (const auto& row : ev.rows) {
        std::snprintf(buf, sizeof buf, "%.6f", row.accuracy);
        out << method_name(row.method) << ',' << row.k << ',' << buf << ',' << row.n_queries << '\n';
    }
    return out.str();
}

}  // namespace cdisc
