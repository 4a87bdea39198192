#pragma once

#include <memory>
#include <string>

namespace carelab {

/// Something that turns a prompt into raw model text. Throws TransportError
/// on a failed attempt.
class LlmTransport {
 public:
  virtual ~LlmTransport() = default;
  virtual std::string complete(const std::string &prompt) = 0;
};

/// Non-streaming client for an Ollama-compatible /api/generate endpoint.
class OllamaTransport : public LlmTransport {
 public:
  OllamaTransport(std::string endpoint_url, std::string model_name, double temperature, int timeout_ms);
  ~OllamaTransport() override;

  OllamaTransport(const OllamaTransport &) = delete;
  OllamaTransport &operator=(const OllamaTransport &) = delete;

  /// Returns the generated text: the "response" field when the body is an
  /// Ollama envelope, otherwise the body verbatim.
  std::string complete(const std::string &prompt) override;

  /// Request body sent for `prompt`.
  std::string request_body(const std::string &prompt) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::string model_name_;
  double temperature_;
};

}  // namespace carelab
