#pragma once

#include "tsforge/records.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace tsforge::corpus {

// Chat-completions client interface shared by the caption, QA-generation,
// model, and judge services. Implementations must be safe to call from
// multiple threads.
class ChatClient {
 public:
  virtual ~ChatClient() = default;

  // Sends one chat request and returns the first choice's message content.
  // Throws ProviderError on failure.
  virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;

  virtual std::string model_name() const = 0;
};

// OpenAI-compatible endpoint client. POSTs {model, messages, temperature}
// to `url` + "/v1/chat/completions" with the credential from the
// TSFORGE_API_KEY environment variable; exponential backoff, max 3 retries.
class HttpChatClient : public ChatClient {
 public:
  HttpChatClient(std::string base_url, std::string model,
                 double temperature = 0.0, int max_retries = 3);

  std::string complete(const std::vector<ChatMessage>& messages) override;
  std::string model_name() const override { return model_; }

 private:
  std::string base_url_;
  std::string model_;
  double temperature_;
  int max_retries_;
};

// Deterministic in-process stub: replies are produced by a function of the
// request. Counts invocations so tests can assert cache behavior.
class StubChatClient : public ChatClient {
 public:
  using Responder =
      std::function<std::string(const std::vector<ChatMessage>&)>;

  StubChatClient(Responder responder, std::string model = "stub")
      : responder_(std::move(responder)), model_(std::move(model)) {}

  // Fixed-reply convenience stub.
  static std::unique_ptr<StubChatClient> fixed(std::string reply);

  std::string complete(const std::vector<ChatMessage>& messages) override {
    std::lock_guard<std::mutex> lock(mu_);
    ++calls_;
    return responder_(messages);
  }

  std::string model_name() const override { return model_; }
  int call_count() const { return calls_; }

 private:
  Responder responder_;
  std::string model_;
  mutable std::mutex mu_;
  int calls_ = 0;
};

// Directory-backed result cache: one file per key, filename = hex hash.
class FileCache {
 public:
  explicit FileCache(std::string dir);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& value) const;

 private:
  std::string dir_;
  mutable std::mutex mu_;
};

}  // namespace tsforge::corpus
