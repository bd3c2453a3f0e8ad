#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "cdisc/service.hpp"
#include "fixtures.hpp"

#include <httplib.h>
#include <json.hpp>

using namespace cdisc;
using nlohmann::json;

namespace {

HttpResponse get(const std::string& path, std::map<std::string, std::string> params = {}) {
    return handle_request(test::small_bundle(), {"GET", path, std::move(params), ""});
}

HttpResponse post_query(const json& body) {
    return handle_request(test::small_bundle(), {"POST", "/v1/query", {}, body.dump()});
}

}  // namespace

TEST(Service, Healthz) {
    const auto r = get("/v1/healthz");
    ASSERT_EQ(r.status, 200);
    const auto j = json::parse(r.body);
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["bundle_hash"].get<std::string>().size(), 16u);
}

TEST(Service, ConceptsListEveryClusteredAttribute) {
    const auto& b = test::small_bundle();
    const auto j = json::parse(get("/v1/concepts").body);
    ASSERT_EQ(j.size(), static_cast<std::size_t>(b.subspaces.assignment.k));
    std::size_t n = 0;
    for (const auto& c : j) n += c["attributes"].size();
    EXPECT_EQ(n, b.subspaces.assignment.attributes.size());
}

TEST(Service, ItemAndThumbnail) {
    const auto& b = test::small_bundle();
    const ItemId id = b.dataset.splits.test.front();
    const auto j = json::parse(get("/v1/items/" + std::to_string(id)).body);
    EXPECT_EQ(j["id"], id);
    EXPECT_EQ(j["splits"], json::array({"test"}));
    EXPECT_EQ(j["description"].size(), b.dataset.item(id).description.size());
    const auto t = get("/v1/items/" + std::to_string(id) + "/thumbnail");
    EXPECT_EQ(t.status, 200);
    EXPECT_EQ(t.content_type, "image/png");
    EXPECT_EQ(t.body.substr(1, 3), "PNG");
    EXPECT_EQ(get("/v1/items/100000").status, 404);
    EXPECT_EQ(get("/v1/items/abc").status, 404);
}

TEST(Service, QueryEqualsLibraryCall) {
    const auto& b = test::small_bundle();
    for (ItemId q : {b.dataset.splits.test[0], b.dataset.splits.test[7]}) {
        for (const char* m : {"baseline", "concept"}) {
            const std::string add = b.dataset.vocab.label(12);
            const auto r = post_query({{"image_id", q}, {"add_attribute", add}, {"method", m}, {"k", 10}});
            ASSERT_EQ(r.status, 200) << r.body;
            const auto j = json::parse(r.body);
            const auto lib = run_query(parse_method(m), {q, 12, true}, b.images, b.embedding, b.gallery, b.subspaces, 10);
            ASSERT_EQ(j["results"].size(), lib.items.size());
            for (std::size_t i = 0; i < lib.items.size(); ++i) {
                EXPECT_EQ(j["results"][i]["id"], lib.items[i].id);
                EXPECT_EQ(j["results"][i]["score"].get<double>(), lib.items[i].score);
            }
            EXPECT_EQ(j["fallback"], lib.fallback);
            if (lib.negative) EXPECT_EQ(j["detected_negative"], b.dataset.vocab.label(*lib.negative));
            else EXPECT_TRUE(j["detected_negative"].is_null());
        }
    }
}

TEST(Service, QueryDefaultsAndTruncation) {
    const auto& b = test::small_bundle();
    const ItemId q = b.dataset.splits.test[2];
    const auto j = json::parse(post_query({{"image_id", q}, {"add_attribute", "red"}}).body);
    EXPECT_EQ(j["method"], "concept");
    EXPECT_EQ(j["results"].size(), 10u);
    const auto one = json::parse(post_query({{"image_id", q}, {"add_attribute", "red"}, {"k", 1}}).body);
    EXPECT_EQ(one["results"].size(), 1u);
}

TEST(Service, FallbackResponseEqualsBaseline) {
    const auto& b = test::small_bundle();
    const AttributeId mini = b.dataset.vocab.id("mini");
    int found = 0;
    for (ItemId q : b.dataset.splits.test) {
        const auto lib = concept_query({q, mini, true}, b.images, b.embedding, b.gallery, b.subspaces, 10);
        if (!lib.fallback) continue;
        ++found;
        const json req{{"image_id", q}, {"add_attribute", "mini"}};
        auto concept_req = req, base_req = req;
        concept_req["method"] = "concept";
        base_req["method"] = "baseline";
        const auto c = json::parse(post_query(concept_req).body);
        const auto base = json::parse(post_query(base_req).body);
        EXPECT_TRUE(c["fallback"].get<bool>());
        EXPECT_EQ(c["results"], base["results"]);
        if (found == 3) break;
    }
    EXPECT_GT(found, 0);
}

TEST(Service, QueryErrors) {
    EXPECT_EQ(post_query({{"image_id", 999999}, {"add_attribute", "red"}}).status, 404);
    EXPECT_EQ(post_query({{"image_id", 1}, {"add_attribute", "plaid-ish"}}).status, 404);
    EXPECT_EQ(post_query({{"image_id", 1}}).status, 400);
    EXPECT_EQ(post_query({{"image_id", "one"}, {"add_attribute", "red"}}).status, 400);
    EXPECT_EQ(post_query({{"image_id", 1}, {"add_attribute", "red"}, {"method", "magic"}}).status, 400);
    EXPECT_EQ(post_query({{"image_id", 1}, {"add_attribute", "red"}, {"k", 0}}).status, 400);
    const auto bad = handle_request(test::small_bundle(), {"POST", "/v1/query", {}, "{not json"});
    EXPECT_EQ(bad.status, 400);
    const auto err = json::parse(bad.body);
    EXPECT_EQ(err["error"]["status"], 400);
    EXPECT_TRUE(err["error"]["message"].is_string());
    EXPECT_EQ(get("/v1/query").status, 405);
    EXPECT_EQ(get("/v2/concepts").status, 404);
}

TEST(Service, Projection) {
    const auto& b = test::small_bundle();
    const int cid = b.subspaces.models.begin()->first;
    const auto r = get("/v1/subspaces/" + std::to_string(cid) + "/projection", {{"split", "test"}, {"grid", "24x24"}});
    ASSERT_EQ(r.status, 200) << r.body;
    const auto j = json::parse(r.body);
    EXPECT_EQ(j["grid"]["rows"], 24);
    std::set<std::pair<int, int>> cells;
    for (const auto& p : j["points"]) {
        EXPECT_TRUE(std::isfinite(p["u"].get<double>()));
        EXPECT_TRUE(cells.insert({p["row"].get<int>(), p["col"].get<int>()}).second);
    }
    const auto direct = project_subspace(b, cid, Split::test, 24, 24);
    EXPECT_EQ(j["points"].size(), direct.ids.size());

    EXPECT_EQ(get("/v1/subspaces/999/projection").status, 404);
    EXPECT_EQ(get("/v1/subspaces/" + std::to_string(cid) + "/projection", {{"grid", "24by24"}}).status, 400);
    EXPECT_EQ(get("/v1/subspaces/" + std::to_string(cid) + "/projection", {{"split", "dev"}}).status, 400);
}

TEST(Service, RepeatedRequestsIdentical) {
    const json req{{"image_id", test::small_bundle().dataset.splits.test[4]}, {"add_attribute", "silk"}};
    const auto first = post_query(req).body;
    for (int i = 0; i < 5; ++i) EXPECT_EQ(post_query(req).body, first);
}

TEST(Service, ConcurrentHttpStorm) {
    const auto& b = test::small_bundle();
    Server server(b);
    const int port = server.bind("127.0.0.1", 0);
    std::thread worker([&] { server.serve(); });
    server.wait_until_ready();

    const json req{{"image_id", b.dataset.splits.test[6]}, {"add_attribute", "denim"}, {"k", 20}};
    const std::string expected = post_query(req).body;
    constexpr int n = 64;
    std::vector<std::string> bodies(n);
    std::vector<int> statuses(n, 0);
    std::vector<std::thread> clients;
    for (int i = 0; i < n; ++i) {
        clients.emplace_back([&, i] {
            httplib::Client cli("127.0.0.1", port);
            cli.set_connection_timeout(10);
            cli.set_read_timeout(30);
            if (auto res = cli.Post("/v1/query", req.dump(), "application/json")) {
                statuses[static_cast<std::size_t>(i)] = res->status;
                bodies[static_cast<std::size_t>(i)] = res->body;
            }
        });
    }
    for (auto& t : clients) t.join();
    server.stop();
    worker.join();
    for (int i = 0; i < n; ++i) {
        EXPECT_EQ(statuses[static_cast<std::size_t>(i)], 200);
        EXPECT_EQ(bodies[static_cast<std::size_t>(i)], expected);
    }
}
