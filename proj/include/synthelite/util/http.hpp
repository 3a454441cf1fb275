#pragma once

#include <map>
#include <string>

namespace synthelite::util {

struct HttpResult {
    int status = 0;
    std::string body;
};

/// POSTs a JSON body to an http:// or https:// URL. Throws BackendError on
/// connection failure; HTTP error statuses are returned to the caller.
HttpResult http_post_json(const std::string& url, const std::map<std::string, std::string>& headers,
                          const std::string& body, int timeout_seconds = 120);

} // namespace synthelite::util
