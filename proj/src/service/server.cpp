#include "synthelite/service/server.hpp"

#include <atomic>

#include <httplib.h>

#include "synthelite/error.hpp"
#include "synthelite/util/log.hpp"

namespace synthelite::service {

using nlohmann::json;

namespace {

std::atomic<httplib::Server*> g_server{nullptr};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"code", code}, {"message", message}});
}

// Maps library errors onto HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F&& body) {
    return [body = std::forward<F>(body)](const httplib::Request& req, httplib::Response& res) {
        try {
            body(req, res);
        } catch (const json::exception& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const ValidationError& e) {
            send_error(res, 400, "validation_error", e.what());
        } catch (const NotFoundError& e) {
            send_error(res, 404, "not_found", e.what());
        } catch (const WrongStateError& e) {
            send_error(res, 409, "wrong_state", e.what());
        } catch (const CapacityError& e) {
            send_error(res, 503, "capacity", e.what());
        } catch (const std::exception& e) {
            util::log_error(std::string("request failed: ") + e.what());
            send_error(res, 500, "internal", e.what());
        }
    };
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    return json::parse(req.body);
}

} // namespace

json job_view(const JobManager& manager, const std::string& id) {
    const auto job = manager.status(id);
    json view = to_json(job);
    json attempts = json::array();
    for (const auto& a : manager.attempts(id)) {
        attempts.push_back({{"index", a.index},
                            {"solved", a.solved},
                            {"stop_reason", planner::to_string(a.stop_reason)},
                            {"reactions", a.reactions.size()},
                            {"blueprint", planner::to_json(a.blueprint)},
                            {"feedback", a.feedback ? llm::to_json(*a.feedback) : json(nullptr)}});
    }
    view["attempts"] = std::move(attempts);
    view["routes_count"] = manager.routes(id).size();
    return view;
}

void register_api(httplib::Server& server, JobManager& manager) {
    server.Get("/api/health", guarded([&manager](const httplib::Request&, httplib::Response& res) {
                   send_json(res, 200, {{"status", "ok"}, {"jobs", manager.counts()}});
               }));
    server.Post("/api/jobs", guarded([&manager](const httplib::Request& req, httplib::Response& res) {
                    const auto id = manager.submit(submit_request_from_json(parse_body(req)));
                    send_json(res, 201, {{"id", id}});
                }));
    server.Get(R"(/api/jobs/([^/]+))", guarded([&manager](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, 200, job_view(manager, req.matches[1]));
               }));
    server.Get(R"(/api/jobs/([^/]+)/routes)", guarded([&manager](const httplib::Request& req, httplib::Response& res) {
                   const std::string id = req.matches[1];
                   auto routes = manager.routes(id);
                   if (req.has_param("k")) {
                       long k = 0;
                       try {
                           k = std::stol(req.get_param_value("k"));
                       } catch (const std::exception&) {
                           throw ValidationError("k must be an integer");
                       }
                       if (k < 1) throw ValidationError("k must be >= 1");
                       if (routes.size() > static_cast<std::size_t>(k)) routes.resize(k);
                   }
                   json list = json::array();
                   for (const auto& r : routes) list.push_back(search::to_json(r));
                   send_json(res, 200, {{"id", id}, {"status", to_string(manager.status(id).status)}, {"routes", list}});
               }));
    server.Post(R"(/api/jobs/([^/]+)/feedback)",
                guarded([&manager](const httplib::Request& req, httplib::Response& res) {
                    const std::string id = req.matches[1];
                    const auto body = parse_body(req);
                    const auto text = body.is_object() ? body.value("text", std::string{}) : std::string{};
                    manager.add_feedback(id, text);
                    send_json(res, 200, {{"id", id}, {"status", to_string(manager.status(id).status)}});
                }));
}

bool serve(JobManager& manager, const std::string& host, int port, const std::filesystem::path& static_dir) {
    httplib::Server server;
    register_api(server, manager);
    if (!static_dir.empty() && !server.set_mount_point("/", static_dir.string())) {
        util::log_warn("cannot serve static files from " + static_dir.string());
    }
    if (!server.bind_to_port(host, port)) return false;
    g_server = &server;
    util::log_info("listening on " + host + ":" + std::to_string(port));
    server.listen_after_bind();
    g_server = nullptr;
    return true;
}

void stop_server() {
    if (auto* s = g_server.load()) s->stop();
}

} // namespace synthelite::service
