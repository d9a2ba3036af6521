#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "refinery/json_util.hpp"
#include "refinery/role.hpp"

namespace refinery {

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what, int calls_used = 0)
      : Error(what), calls_used(calls_used) {}
  int calls_used;
};

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
};

ojson request_to_json(const CompletionRequest& request);

/// Stable 64-bit FNV-1a hash of the canonical request JSON, as lowercase
/// hex. Keys stub completions on disk.
std::string request_hash(const CompletionRequest& request);

/// Shared client-side throttle: bounds concurrent requests and requests
/// per minute. The clock is injectable for tests.
class RequestLimiter {
 public:
  using Clock = std::chrono::steady_clock;
  using ClockFn = std::function<Clock::time_point()>;

  RequestLimiter(int max_in_flight, int requests_per_minute,
                 ClockFn clock = &Clock::now);

  /// Blocks until a slot and a request token are available.
  void acquire();
  /// Non-blocking variant; true when a slot was taken.
  bool try_acquire();
  void release();

  int in_flight() const;

 private:
  bool admissible_locked() const;
  void note_request_locked();

  const int max_in_flight_;
  const int requests_per_minute_;  // 0 disables the per-minute budget
  ClockFn clock_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  std::deque<Clock::time_point> request_times_;
};

/// RAII slot holder.
class LimiterSlot {
 public:
  explicit LimiterSlot(RequestLimiter* limiter) : limiter_(limiter) {
    if (limiter_) limiter_->acquire();
  }
  ~LimiterSlot() {
    if (limiter_) limiter_->release();
  }
  LimiterSlot(const LimiterSlot&) = delete;
  LimiterSlot& operator=(const LimiterSlot&) = delete;

 private:
  RequestLimiter* limiter_;
};

/// Abstract chat-completion transport. Implementations must be safe to
/// call from multiple threads.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Returns the first choice's message content. Throws TransportError.
  virtual std::string complete(const CompletionRequest& request) = 0;
};

struct EndpointConfig {
  std::string base_url;                      // e.g. http://127.0.0.1:8080
  std::string path = "/v1/chat/completions";
  std::string auth_env = "REFINERY_API_KEY";  // bearer token variable
  int timeout_seconds = 120;
};

/// POSTs {model, messages, temperature} and reads
/// choices[0].message.content from the response.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(EndpointConfig config, RequestLimiter* limiter = nullptr);
  std::string complete(const CompletionRequest& request) override;

 private:
  EndpointConfig config_;
  RequestLimiter* limiter_;
};

/// Replays canned completions from a directory of <request-hash>.txt
/// files; a missing file is a transport error. Enables offline end-to-end
/// runs.
class DirectoryStubClient : public ChatClient {
 public:
  explicit DirectoryStubClient(std::string directory);
  std::string complete(const CompletionRequest& request) override;

 private:
  std::string directory_;
};

/// Wraps another client and writes every (request hash, completion) pair
/// into a stub directory, so a scripted run can be replayed later.
class RecordingClient : public ChatClient {
 public:
  RecordingClient(ChatClient& inner, std::string directory);
  std::string complete(const CompletionRequest& request) override;

 private:
  ChatClient& inner_;
  std::string directory_;
  std::mutex mutex_;
};

}  // namespace refinery
