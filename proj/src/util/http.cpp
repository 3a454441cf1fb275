#include <httplib.h>

#include "synthelite/util/http.hpp"

#include "synthelite/error.hpp"

namespace synthelite::util {

HttpResult http_post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                          const std::string& body, int timeout_seconds) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw BackendError("bad URL " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_seconds, 0);
    client.set_read_timeout(timeout_seconds, 0);
    client.set_write_timeout(timeout_seconds, 0);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(path, h, body, "application/json");
    if (!res) throw BackendError("request to " + origin + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

} // namespace synthelite::util
