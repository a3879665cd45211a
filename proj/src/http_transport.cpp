#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "cue/error.hpp"
#include "cue/neighbors.hpp"

namespace cue {

HttpTransport make_http_transport(const LiveProviderConfig& cfg) {
  const auto scheme_end = cfg.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::invalid_argument, "LLM endpoint must look like http[s]://host[:port]/path, got '" +
                                            cfg.endpoint + "'");
  }
  const auto path_start = cfg.endpoint.find('/', scheme_end + 3);
  const std::string origin = cfg.endpoint.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : cfg.endpoint.substr(path_start);

  // One client per request: batch queries may run concurrently.
  return [origin, path, key = cfg.api_key, timeout = cfg.timeout](const std::string& body) {
    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(timeout);
    if (!key.empty()) client.set_bearer_token_auth(key);
    TransportResult out;
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.ok = true;
    out.status = res->status;
    out.body = res->body;
    return out;
  };
}

}  // namespace cue
