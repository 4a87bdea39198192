#include "carelab/llm_client.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "carelab/errors.hpp"

namespace carelab {

namespace {

constexpr const char *kGeneratePath = "/api/generate";

struct SplitUrl {
  std::string base;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string &url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, kGeneratePath};
  std::string path = url.substr(path_start);
  if (path == "/") path = kGeneratePath;
  return {url.substr(0, path_start), path};
}

}  // namespace

struct OllamaTransport::Impl {
  httplib::Client client;
  std::string path;

  Impl(const SplitUrl &url, int timeout_ms) : client(url.base), path(url.path) {
    const auto timeout = std::chrono::milliseconds(timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
  }
};

OllamaTransport::OllamaTransport(std::string endpoint_url, std::string model_name, double temperature,
                                 int timeout_ms)
    : impl_(std::make_unique<Impl>(split_url(endpoint_url), timeout_ms)),
      model_name_(std::move(model_name)),
      temperature_(temperature) {}

OllamaTransport::~OllamaTransport() = default;

std::string OllamaTransport::request_body(const std::string &prompt) const {
  nlohmann::json body = {
      {"model", model_name_},
      {"prompt", prompt},
      {"stream", false},
      {"options", {{"temperature", temperature_}}},
  };
  return body.dump();
}

std::string OllamaTransport::complete(const std::string &prompt) {
  auto res = impl_->client.Post(impl_->path, request_body(prompt), "application/json");
  if (!res) throw TransportError("request to model endpoint failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError("model endpoint returned HTTP " + std::to_string(res->status));

  auto envelope = nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (envelope.is_object() && envelope.contains("response") && envelope["response"].is_string())
    return envelope["response"].get<std::string>();
  return res->body;
}

}  // namespace carelab
