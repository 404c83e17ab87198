#include "tsforge/services.hpp"

#include "tsforge/errors.hpp"
#include "tsforge/textutil.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

namespace tsforge::corpus {

HttpChatClient::HttpChatClient(std::string base_url, std::string model,
                               double temperature, int max_retries)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      temperature_(temperature),
      max_retries_(max_retries) {}

std::string HttpChatClient::complete(
    const std::vector<ChatMessage>& messages) {
  nlohmann::json body;
  body["model"] = model_;
  body["temperature"] = temperature_;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }

  httplib::Client client(base_url_);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (const char* key = std::getenv("TSFORGE_API_KEY")) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= max_retries_; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(200LL << (attempt - 1)));
    }
    auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                           "application/json");
    if (!res) {
      last_error = "transport error";
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed reply: ") + e.what();
    }
  }
  throw ProviderError("chat completion failed against " + base_url_ + ": " +
                      last_error);
}

std::unique_ptr<StubChatClient> StubChatClient::fixed(std::string reply) {
  return std::make_unique<StubChatClient>(
      [reply = std::move(reply)](const std::vector<ChatMessage>&) {
        return reply;
      });
}

FileCache::FileCache(std::string dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::optional<std::string> FileCache::get(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto path = std::filesystem::path(dir_) / key;
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  return content;
}

void FileCache::put(const std::string& key, const std::string& value) const {
  std::lock_guard<std::mutex> lock(mu_);
  const auto path = std::filesystem::path(dir_) / key;
  // Write to a temp name then rename so readers never see partial files.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << value;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace tsforge::corpus
