#ifndef CAVG_EXTRACTOR_HPP
#define CAVG_EXTRACTOR_HPP

#include <httplib.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cavg/error.hpp"
#include "cavg/ontology.hpp"

// Client side of the extractor protocol. The extractor is either an HTTP
// service ("http://host:port[/prefix]", POST <prefix><route>?<params>) or a
// shell command that reads the request body on stdin and writes the
// response on stdout; the route and params are passed to it as environment
// variables CAVG_ROUTE and CAVG_<NAME>. Bodies are JSONL both ways.
namespace cavg {

struct EndpointRequest {
  std::string route;  // "/extract", "/translate"
  std::vector<std::pair<std::string, std::string>> params;
  std::string body;
};

inline bool is_http_endpoint(std::string_view endpoint) { return endpoint.starts_with("http://"); }

namespace detail {

inline std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

inline std::string env_name(std::string_view param) {
  std::string out = "CAVG_";
  for (char c : param) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    out += ok ? static_cast<char>(c >= 'a' && c <= 'z' ? c - 'a' + 'A' : c) : '_';
  }
  return out;
}

inline std::string call_http(const std::string& endpoint, const EndpointRequest& req) {
  const std::string rest = endpoint.substr(7);
  const auto slash = rest.find('/');
  const std::string host = rest.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : rest.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  if (host.empty()) throw ConfigError("endpoint has no host: " + endpoint);

  std::string path = prefix + req.route;
  char sep = '?';
  for (const auto& [k, v] : req.params) {
    path += sep + httplib::detail::encode_query_param(k) + "=" + httplib::detail::encode_query_param(v);
    sep = '&';
  }
  httplib::Client client("http://" + host);
  client.set_connection_timeout(10);
  // Extraction over a whole corpus can take a long time.
  client.set_read_timeout(6 * 3600);
  auto res = client.Post(path, req.body, "application/x-ndjson");
  if (!res) throw Error("extractor " + endpoint + " unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error("extractor " + endpoint + req.route + " returned HTTP " + std::to_string(res->status) + ": " +
                res->body.substr(0, 200));
  }
  return res->body;
}

inline std::string call_command(const std::string& command, const EndpointRequest& req,
                                const std::filesystem::path& workdir) {
  namespace fs = std::filesystem;
  const auto tmp = fs::temp_directory_path() / ("cavg-call-" + std::to_string(::getpid()) + "-" +
                                                 std::to_string(reinterpret_cast<std::uintptr_t>(&req)));
  fs::create_directories(tmp);
  struct Cleanup {
    fs::path dir;
    ~Cleanup() {
      std::error_code ec;
      fs::remove_all(dir, ec);
    }
  } cleanup{tmp};
  {
    std::ofstream in(tmp / "request.jsonl", std::ios::binary);
    in << req.body;
    if (!in) throw Error("cannot write extractor request");
  }
  std::string line = "cd " + shell_quote(workdir.string()) + " && CAVG_ROUTE=" + shell_quote(req.route);
  for (const auto& [k, v] : req.params) line += " " + env_name(k) + "=" + shell_quote(v);
  line += " " + command + " < " + shell_quote((tmp / "request.jsonl").string()) + " > " +
          shell_quote((tmp / "response.jsonl").string());
  const int status = std::system(line.c_str());
  if (status != 0) throw Error("extractor command failed (status " + std::to_string(status) + "): " + command);
  return read_file(tmp / "response.jsonl");
}

}  // namespace detail

// Sends one request; `workdir` is the working directory for command mode.
inline std::string call_endpoint(const std::string& endpoint, const EndpointRequest& req,
                                 const std::filesystem::path& workdir = ".") {
  if (endpoint.empty()) throw ConfigError("empty extractor endpoint");
  if (endpoint.starts_with("https://")) throw ConfigError("https endpoints are not supported: " + endpoint);
  if (is_http_endpoint(endpoint)) return detail::call_http(endpoint, req);
  return detail::call_command(endpoint, req, workdir);
}

}  // namespace cavg

#endif  // CAVG_EXTRACTOR_HPP
