#include <httplib.h>

#include <regex>

#include <fmt/format.h>

#include "reasonprobe/gateway.hpp"

namespace reasonprobe {

HttpBackend::HttpBackend(std::string base_url, std::string api_key) : api_key_(std::move(api_key)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(base_url, m, kUrl)) throw ApiError("malformed base_url '" + base_url + "'");
  scheme_host_port_ = m[1].str();
  path_prefix_ = m[2].str();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

json HttpBackend::post(std::string_view path, const json& body, const ModelEndpointConfig& config) {
  httplib::Client client(scheme_host_port_);
  const auto timeout = std::chrono::duration<double>(config.timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
  const std::string target = path_prefix_ + std::string(path);

  auto res = client.Post(target, headers, body.dump(), "application/json");
  if (!res) throw TransportError(fmt::format("POST {}: {}", target, httplib::to_string(res.error())));

  const int status = res->status;
  if (status == 401 || status == 403)
    throw FatalApiError(fmt::format("POST {}: authentication rejected (HTTP {})", target, status));
  if (status == 429) {
    if (res->body.find("insufficient_quota") != std::string::npos)
      throw FatalApiError(fmt::format("POST {}: quota exhausted (HTTP 429)", target));
    throw TransportError(fmt::format("POST {}: rate limited (HTTP 429)", target));
  }
  if (status == 408 || status >= 500) throw TransportError(fmt::format("POST {}: HTTP {}", target, status));
  if (status != 200) throw ApiError(fmt::format("POST {}: HTTP {}: {}", target, status, res->body.substr(0, 300)));
  try {
    return json::parse(res->body);
  } catch (const json::parse_error&) {
    throw TransportError(fmt::format("POST {}: response body is not JSON", target));
  }
}

}  // namespace reasonprobe
