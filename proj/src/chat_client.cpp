#include "refinery/chat_client.hpp"

#include <cstdlib>
#include <filesystem>

#include <httplib.h>

namespace refinery {

ojson request_to_json(const CompletionRequest& request) {
  ojson o = ojson::object();
  o["model"] = request.model;
  ojson messages = ojson::array();
  for (const auto& message : request.messages) {
    ojson m = ojson::object();
    m["role"] = std::string(role_name(message.role));
    m["content"] = message.content;
    messages.push_back(std::move(m));
  }
  o["messages"] = std::move(messages);
  o["temperature"] = request.temperature;
  return o;
}

std::string request_hash(const CompletionRequest& request) {
  const std::string canonical = request_to_json(request).dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  static const char* kHex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kHex[h & 0xF];
    h >>= 4;
  }
  return out;
}

RequestLimiter::RequestLimiter(int max_in_flight, int requests_per_minute,
                               ClockFn clock)
    : max_in_flight_(max_in_flight > 0 ? max_in_flight : 1),
      requests_per_minute_(requests_per_minute),
      clock_(std::move(clock)) {}

bool RequestLimiter::admissible_locked() const {
  if (in_flight_ >= max_in_flight_) return false;
  if (requests_per_minute_ > 0 &&
      static_cast<int>(request_times_.size()) >= requests_per_minute_) {
    return false;
  }
  return true;
}

void RequestLimiter::note_request_locked() {
  ++in_flight_;
  if (requests_per_minute_ > 0) request_times_.push_back(clock_());
}

void RequestLimiter::acquire() {
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = clock_();
    while (!request_times_.empty() &&
           now - request_times_.front() >= std::chrono::minutes(1)) {
      request_times_.pop_front();
    }
    if (admissible_locked()) {
      note_request_locked();
      return;
    }
    if (requests_per_minute_ > 0 && !request_times_.empty() &&
        in_flight_ < max_in_flight_) {
      cv_.wait_until(lock, request_times_.front() + std::chrono::minutes(1));
    } else {
      cv_.wait_for(lock, std::chrono::milliseconds(50));
    }
  }
}

bool RequestLimiter::try_acquire() {
  std::lock_guard lock(mutex_);
  const auto now = clock_();
  while (!request_times_.empty() &&
         now - request_times_.front() >= std::chrono::minutes(1)) {
    request_times_.pop_front();
  }
  if (!admissible_locked()) return false;
  note_request_locked();
  return true;
}

void RequestLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --in_flight_;
  }
  cv_.notify_all();
}

int RequestLimiter::in_flight() const {
  std::lock_guard lock(mutex_);
  return in_flight_;
}

HttpChatClient::HttpChatClient(EndpointConfig config, RequestLimiter* limiter)
    : config_(std::move(config)), limiter_(limiter) {}

std::string HttpChatClient::complete(const CompletionRequest& request) {
  LimiterSlot slot(limiter_);

  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);

  httplib::Headers headers;
  if (const char* token = std::getenv(config_.auth_env.c_str());
      token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const std::string body = request_to_json(request).dump();
  auto res = client.Post(config_.path, headers, body, "application/json");
  if (!res) {
    throw TransportError("request to " + config_.base_url + config_.path +
                         " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("endpoint returned HTTP " + std::to_string(res->status) +
                         ": " + res->body.substr(0, 400));
  }

  ojson doc;
  try {
    doc = parse_json_strict(res->body);
  } catch (const std::exception& e) {
    throw TransportError(std::string("malformed completion response: ") + e.what());
  }
  if (!doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty()) {
    throw TransportError("completion response has no choices");
  }
  const auto& first = doc["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw TransportError("completion response has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

DirectoryStubClient::DirectoryStubClient(std::string directory)
    : directory_(std::move(directory)) {}

std::string DirectoryStubClient::complete(const CompletionRequest& request) {
  const std::string path = directory_ + "/" + request_hash(request) + ".txt";
  if (!std::filesystem::exists(path)) {
    throw TransportError("no canned completion for request hash " +
                         request_hash(request) + " in " + directory_);
  }
  return read_file(path);
}

RecordingClient::RecordingClient(ChatClient& inner, std::string directory)
    : inner_(inner), directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

std::string RecordingClient::complete(const CompletionRequest& request) {
  std::string completion = inner_.complete(request);
  std::lock_guard lock(mutex_);
  write_file_atomic(directory_ + "/" + request_hash(request) + ".txt", completion);
  return completion;
}

}  // namespace refinery
