#pragma once

// HTTP/JSON front end for fitted energy/time models.
//
//   POST /v1/predict  {"target", "features", "config"} -> {"prediction", "fingerprint", "kind"}
//   GET  /v1/health   status + loaded model fingerprints
//   GET  /v1/schema   feature names expected by /v1/predict
//
// The model map is fixed at construction and never mutated afterwards.

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dvfs/predictors.hpp"
#include "json.hpp"

namespace dvfs {

struct PredictRequest {
    Target target = Target::Energy;
    std::vector<double> features;  // raw profile, aligned to the served schema
    FrequencyConfig config;
};

struct PredictResponse {
    double prediction = 0.0;
    std::string fingerprint;
    std::string kind;
};

struct HttpReply {
    int status = 200;
    nlohmann::json body;
};

inline constexpr std::size_t kMaxRequestBytes = 1 << 20;

class ModelServer {
public:
    /// Every model must carry an input schema, and all must share it.
    explicit ModelServer(std::map<Target, FittedModel> models);
    ~ModelServer();
    ModelServer(const ModelServer&) = delete;
    ModelServer& operator=(const ModelServer&) = delete;

    // Request handling without a socket; the HTTP routes call these.
    HttpReply handle_predict(std::string_view body) const;
    HttpReply handle_health() const;
    HttpReply handle_schema() const;

    const std::map<Target, FittedModel>& models() const { return models_; }

    /// Binds the listening socket; port 0 picks a free port. Returns the bound
    /// port; throws Error when the address cannot be bound.
    int bind(const std::string& host, int port);
    /// Serves until stop(); in-flight requests finish before it returns.
    void run();
    void stop();
    void wait_until_ready() const;

private:
    std::map<Target, FittedModel> models_;
    std::vector<std::string> feature_names_;
    struct Http;
    std::unique_ptr<Http> http_;
};

/// JSON request body for the given request.
nlohmann::json request_to_json(const PredictRequest& r);

}  // namespace dvfs
