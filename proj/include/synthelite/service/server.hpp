#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "synthelite/service/jobs.hpp"

namespace httplib {
class Server;
}

namespace synthelite::service {

/// Wire form of a job: the record plus per-attempt summaries and the route count.
nlohmann::json job_view(const JobManager& manager, const std::string& id);

/// Installs the /api routes. Errors are answered as {code, message}.
void register_api(httplib::Server& server, JobManager& manager);

/// Serves the API (and `static_dir` at / when non-empty) until stop_server().
/// Returns false when the port cannot be bound.
bool serve(JobManager& manager, const std::string& host, int port, const std::filesystem::path& static_dir = {});
void stop_server();

} // namespace synthelite::service
