#include "dvfs/server.hpp"

#include <cmath>

#include "dvfs/error.hpp"
#include "httplib.h"

namespace dvfs {

using nlohmann::json;

struct ModelServer::Http {
    httplib::Server server;
};

namespace {

HttpReply error_reply(int status, std::string code, std::string message) {
    return {status, {{"error", {{"code", std::move(code)}, {"message", std::move(message)}}}}};
}

}  // namespace

ModelServer::ModelServer(std::map<Target, FittedModel> models) : models_(std::move(models)), http_(new Http) {
    if (models_.empty()) throw ValidationError("model server needs at least one model");
    const InputSpec* shared = nullptr;
    for (const auto& [target, m] : models_) {
        if (!m.input) throw ValidationError("served " + to_string(target) + " model carries no input schema");
        if (m.target != target)
            throw ValidationError("model registered as " + to_string(target) + " was trained for " + to_string(m.target));
        if (shared && *shared != *m.input) throw ValidationError("served models disagree on the input schema");
        shared = &*m.input;
    }
    feature_names_ = shared->feature_names;

    auto& srv = http_->server;
    srv.set_payload_max_length(kMaxRequestBytes);
    // httplib's default also sets SO_REUSEPORT, which would let a second
    // server silently share an occupied port.
    srv.set_socket_options([](socket_t sock) {
        int yes = 1;
        ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    auto send = [](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_content(reply.body.dump(), "application/json");
    };
    srv.Post("/v1/predict", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, handle_predict(req.body));
    });
    srv.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_health()); });
    srv.Get("/v1/schema", [this, send](const httplib::Request&, httplib::Response& res) { send(res, handle_schema()); });
    srv.set_error_handler([send](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;  // a route already produced a JSON error
        if (res.status == 413)
            send(res, error_reply(413, "payload_too_large", "request body exceeds 1 MiB"));
        else if (res.status == 404)
            send(res, error_reply(404, "not_found", "no such endpoint"));
        else
            send(res, error_reply(res.status, "http_error", "request failed"));
    });
}

ModelServer::~ModelServer() { stop(); }

HttpReply ModelServer::handle_predict(std::string_view body) const {
    json j = json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) return error_reply(400, "bad_request", "body must be a JSON object");

    if (!j.contains("target") || !j["target"].is_string())
        return error_reply(400, "bad_request", "'target' must be a string");
    if (!j.contains("features") || !j["features"].is_array())
        return error_reply(400, "bad_request", "'features' must be an array of numbers");
    if (!j.contains("config") || !j["config"].is_object())
        return error_reply(400, "bad_request", "'config' must be an object with mem_clock and core_clock");

    PredictRequest req;
    for (const auto& v : j["features"]) {
        if (!v.is_number()) return error_reply(400, "bad_request", "'features' must contain only numbers");
        const double x = v.get<double>();
        if (!std::isfinite(x)) return error_reply(400, "bad_request", "'features' must be finite");
        req.features.push_back(x);
    }
    const auto& cfg = j["config"];
    for (const char* key : {"mem_clock", "core_clock"}) {
        if (!cfg.contains(key) || !cfg[key].is_number_integer() || cfg[key].get<long long>() <= 0 ||
            cfg[key].get<long long>() > 1000000)
            return error_reply(400, "bad_request", std::string("config.") + key + " must be a positive integer (MHz)");
    }
    req.config = {cfg["mem_clock"].get<int>(), cfg["core_clock"].get<int>()};

    const auto target_name = j["target"].get<std::string>();
    auto it = models_.end();
    if (target_name == "energy" || target_name == "time") it = models_.find(parse_target(target_name));
    if (it == models_.end())
        return error_reply(404, "unknown_target", "no model is served for target '" + target_name + "'");
    const FittedModel& model = it->second;

    if (req.features.size() != feature_names_.size())
        return error_reply(422, "dimension_mismatch",
                           "expected " + std::to_string(feature_names_.size()) + " features, got " +
                               std::to_string(req.features.size()));

    const double prediction = predict_raw(model, req.features, req.config);
    if (!std::isfinite(prediction)) return error_reply(500, "non_finite_prediction", "model produced a non-finite value");
    return {200, {{"prediction", prediction}, {"fingerprint", model.fingerprint}, {"kind", kind_name(model.kind)}}};
}

HttpReply ModelServer::handle_health() const {
    json models = json::object();
    for (const auto& [target, m] : models_)
        models[to_string(target)] = {{"fingerprint", m.fingerprint}, {"kind", kind_name(m.kind)}};
    return {200, {{"status", "ok"}, {"models", std::move(models)}}};
}

HttpReply ModelServer::handle_schema() const {
    return {200,
            {{"feature_names", feature_names_},
             {"config_fields", {"mem_clock", "core_clock"}},
             {"targets", [this] {
                  json t = json::array();
                  for (const auto& [target, m] : models_) t.push_back(to_string(target));
                  return t;
              }()}}};
}

int ModelServer::bind(const std::string& host, int port) {
    auto& srv = http_->server;
    if (port == 0) {
        const int bound = srv.bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!srv.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void ModelServer::run() { http_->server.listen_after_bind(); }

void ModelServer::stop() {
    if (http_ && http_->server.is_running()) http_->server.stop();
}

void ModelServer::wait_until_ready() const { http_->server.wait_until_ready(); }

json request_to_json(const PredictRequest& r) {
    return {{"target", to_string(r.target)},
            {"features", r.features},
            {"config", {{"mem_clock", r.config.mem_clock}, {"core_clock", r.config.core_clock}}}};
}

}  // namespace dvfs
