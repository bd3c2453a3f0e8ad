#include "cdisc/service.hpp"

#include <charconv>
#include <sstream>
#include <vector>

// The default backlog of 5 resets bursts of concurrent clients.
#define CPPHTTPLIB_LISTEN_BACKLOG 512
#include <httplib.h>
#include <json.hpp>

#include "cdisc/binary_io.hpp"
#include "cdisc/thumbnail.hpp"

namespace cdisc {

using nlohmann::json;

QueryRequest parse_query_request(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception&) {
        throw RequestError("query body is not valid JSON");
    }
    if (!j.is_object()) throw RequestError("query body must be an object");
    QueryRequest r;
    try {
        if (!j.contains("image_id") || !j.contains("add_attribute")) {
            throw RequestError("query needs image_id and add_attribute");
        }
        r.image_id = j.at("image_id").get<ItemId>();
        r.add_attribute = j.at("add_attribute").get<std::string>();
        if (j.contains("method")) {
            const auto m = j.at("method").get<std::string>();
            if (m == "baseline") {
                r.method = Method::baseline;
            } else if (m == "concept") {
                r.method = Method::concept_aware;
            } else {
                throw RequestError("method must be \"baseline\" or \"concept\"");
            }
        }
        if (j.contains("k")) {
            const auto k = j.at("k").get<long long>();
            if (k < 1) throw RequestError("k must be at least 1");
            r.k = static_cast<std::size_t>(k);
        }
    } catch (const json::exception&) {
        throw RequestError("query field has the wrong type");
    }
    return r;
}

RankedResult handle_query(const ModelBundle& b, const QueryRequest& r) {
    if (r.image_id < 0 || static_cast<std::size_t>(r.image_id) >= b.dataset.size()) {
        throw NotFoundError("unknown item " + std::to_string(r.image_id));
    }
    const auto add = b.dataset.vocab.find(r.add_attribute);
    if (!add) throw NotFoundError("unknown attribute '" + r.add_attribute + "'");
    const Query q{r.image_id, *add, true};
    return run_query(r.method, q, b.images, b.embedding, b.gallery, b.subspaces, r.k);
}

Projection2D project_subspace(const ModelBundle& b, int concept_id, Split split, int grid_rows, int grid_cols) {
    const auto it = b.subspaces.models.find(concept_id);
    if (it == b.subspaces.models.end()) {
        throw NotFoundError("concept " + std::to_string(concept_id) + " has no subspace");
    }
    std::vector<ItemId> ids;
    for (ItemId id : b.dataset.splits.get(split)) {
        for (AttributeId a : it->second.attributes) {
            if (b.dataset.item(id).has(a)) {
                ids.push_back(id);
                break;
            }
        }
    }
    return project_items(concept_id, std::move(ids), b.subspace_features.at(concept_id), grid_rows, grid_cols);
}

namespace {

HttpResponse json_response(const json& j, int status = 200) { return {status, "application/json", j.dump()}; }

HttpResponse error_response(int status, const std::string& message) {
    return json_response({{"error", {{"status", status}, {"message", message}}}}, status);
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) parts.push_back(cur);
    return parts;
}

int parse_id(const std::string& s, const char* what) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw NotFoundError(std::string("unknown ") + what + " " + s);
    return v;
}

const Item& item_or_404(const ModelBundle& b, int id) {
    if (id < 0 || static_cast<std::size_t>(id) >= b.dataset.size()) {
        throw NotFoundError("unknown item " + std::to_string(id));
    }
    return b.dataset.item(id);
}

std::string split_of(const ModelBundle& b, ItemId id) {
    for (Split s : {Split::train, Split::val, Split::test}) {
        const auto& ids = b.dataset.splits.get(s);
        if (std::find(ids.begin(), ids.end(), id) != ids.end()) return std::string(split_name(s));
    }
    return {};
}

json labels(const ModelBundle& b, const std::vector<AttributeId>& ids) {
    json out = json::array();
    for (AttributeId a : ids) out.push_back(b.dataset.vocab.label(a));
    return out;
}

HttpResponse concepts_body(const ModelBundle& b) {
    json out = json::array();
    const auto& a = b.subspaces.assignment;
    for (int c = 0; c < a.k; ++c) {
        out.push_back({{"concept_id", c},
                       {"attributes", labels(b, a.members(c))},
                       {"has_subspace", b.subspaces.models.count(c) > 0}});
    }
    return json_response(out);
}

HttpResponse item_body(const ModelBundle& b, int id) {
    const Item& item = item_or_404(b, id);
    return json_response({{"id", id}, {"description", labels(b, item.description)}, {"splits", {split_of(b, id)}}});
}

HttpResponse thumbnail_body(const ModelBundle& b, int id) {
    const Item& item = item_or_404(b, id);
    std::vector<std::string> l;
    for (AttributeId a : item.description) l.push_back(b.dataset.vocab.label(a));
    return {200, "image/png", encode_png(render_thumbnail(id, l))};
}

HttpResponse projection_body(const ModelBundle& b, int cid, const std::map<std::string, std::string>& params) {
    Split split = Split::test;
    if (const auto it = params.find("split"); it != params.end()) {
        try {
            split = parse_split(it->second);
        } catch (const Error&) {
            throw RequestError("unknown split '" + it->second + "'");
        }
    }
    int rows = 0, cols = 0;
    if (const auto it = params.find("grid"); it != params.end()) {
        const auto& g = it->second;
        const auto x = g.find('x');
        auto parse = [&](std::string_view s, int& out) {
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
            return ec == std::errc{} && ptr == s.data() + s.size() && out > 0 && out <= 1024;
        };
        if (x == std::string::npos || !parse(std::string_view(g).substr(0, x), rows) ||
            !parse(std::string_view(g).substr(x + 1), cols)) {
            throw RequestError("grid must look like 24x24");
        }
    }
    Projection2D p;
    try {
        p = project_subspace(b, cid, split, rows, cols);
    } catch (const DataError& e) {
        throw RequestError(e.what());
    }
    json points = json::array();
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
        json pt{{"id", p.ids[i]},
                {"u", p.points(static_cast<Eigen::Index>(i), 0)},
                {"v", p.points(static_cast<Eigen::Index>(i), 1)}};
        if (!p.cells.empty()) {
            pt["row"] = p.cells[i].row;
            pt["col"] = p.cells[i].col;
        }
        points.push_back(pt);
    }
    json out{{"concept_id", cid}, {"split", split_name(split)}, {"points", points}};
    out["grid"] = rows > 0 ? json{{"rows", rows}, {"cols", cols}} : json(nullptr);
    return json_response(out);
}

HttpResponse query_body(const ModelBundle& b, const std::string& body) {
    const QueryRequest r = parse_query_request(body);
    const RankedResult res = handle_query(b, r);
    json results = json::array();
    for (const auto& it : res.items) results.push_back({{"id", it.id}, {"score", it.score}});
    json out{{"method", method_name(res.method)},
             {"results", results},
             {"detected_negative", res.negative ? json(b.dataset.vocab.label(*res.negative)) : json(nullptr)},
             {"fallback", res.fallback},
             {"no_subspace", res.no_subspace}};
    return json_response(out);
}

HttpResponse route(const ModelBundle& b, const HttpRequest& r) {
    const auto parts = split_path(r.path);
    if (parts.size() < 2 || parts[0] != "v1") return error_response(404, "no route for " + r.path);
    const bool get = r.method == "GET";
    const auto& head = parts[1];

    if (head == "healthz" && parts.size() == 2) {
        if (!get) return error_response(405, "use GET");
        return json_response({{"status", "ok"}, {"bundle_hash", hex64(b.bundle_hash)}});
    }
    if (head == "concepts" && parts.size() == 2) {
        if (!get) return error_response(405, "use GET");
        return concepts_body(b);
    }
    if (head == "items" && (parts.size() == 3 || (parts.size() == 4 && parts[3] == "thumbnail"))) {
        if (!get) return error_response(405, "use GET");
        const int id = parse_id(parts[2], "item");
        return parts.size() == 3 ? item_body(b, id) : thumbnail_body(b, id);
    }
    if (head == "subspaces" && parts.size() == 4 && parts[3] == "projection") {
        if (!get) return error_response(405, "use GET");
        return projection_body(b, parse_id(parts[2], "concept"), r.params);
    }
    if (head == "query" && parts.size() == 2) {
        if (r.method != "POST") return error_response(405, "use POST");
        return query_body(b, r.body);
    }
    return error_response(404, "no route for " + r.path);
}

}  // namespace

HttpResponse handle_request(const ModelBundle& b, const HttpRequest& r) {
    try {
        return route(b, r);
    } catch (const NotFoundError& e) {
        return error_response(404, e.what());
    } catch (const RequestError& e) {
        return error_response(400, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

struct Server::Impl {
    const ModelBundle& bundle;
    httplib::Server http;

    explicit Impl(const ModelBundle& b) : bundle(b) {
        auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            HttpRequest r{req.method, req.path, {}, req.body};
            for (const auto& [k, v] : req.params) r.params.emplace(k, v);
            const HttpResponse out = handle_request(bundle, r);
            res.status = out.status;
            res.set_content(out.body, out.content_type);
        };
        http.Get(".*", forward);
        http.Post(".*", forward);
    }
};

Server::Server(const ModelBundle& bundle) : impl_(std::make_unique<Impl>(bundle)) {}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->http.bind_to_any_port(host);
        if (p < 0) throw Error("cannot bind " + host);
        return p;
    }
    if (!impl_->http.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void Server::serve() { impl_->http.listen_after_bind(); }

void Server::stop() {
    if (impl_) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace cdisc
