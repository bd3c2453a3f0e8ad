#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>

#include "cdisc/bundle.hpp"
#include "cdisc/error.hpp"
#include "cdisc/projection.hpp"
#include "cdisc/retrieval.hpp"

namespace cdisc {

// Malformed request; maps to HTTP 400.
class RequestError : public Error {
public:
    using Error::Error;
};

struct QueryRequest {
    ItemId image_id = 0;
    std::string add_attribute;  // label
    Method method = Method::concept_aware;
    std::size_t k = 10;
};

// JSON body {image_id, add_attribute, method, k}; method defaults to
// "concept" and k to 10.
QueryRequest parse_query_request(const std::string& body);

// Same call the retrieval library makes for the evaluation: the test-split
// gallery without the query image. Throws NotFoundError for unknown ids.
RankedResult handle_query(const ModelBundle& bundle, const QueryRequest& request);

// PCA of the concept's subspace features over the split items holding one
// of its attributes. Throws NotFoundError for a concept without subspace.
Projection2D project_subspace(const ModelBundle& bundle, int concept_id, Split split, int grid_rows = 0,
                              int grid_cols = 0);

struct HttpRequest {
    std::string method;  // "GET", "POST"
    std::string path;
    std::map<std::string, std::string> params;
    std::string body;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

// Pure routing over the bundle; every endpoint is read-only. Errors come
// back as {"error": {"status", "message"}} bodies.
HttpResponse handle_request(const ModelBundle& bundle, const HttpRequest& request);

// HTTP front end over handle_request.
class Server {
public:
    explicit Server(const ModelBundle& bundle);
    ~Server();
    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    // Binds without serving; port 0 picks a free port. Returns the bound
    // port or throws Error.
    int bind(const std::string& host, int port);
    // Serves until stop(); blocks.
    void serve();
    void stop();
    void wait_until_ready() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace cdisc
