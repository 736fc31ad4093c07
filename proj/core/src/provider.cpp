#include "biaslens/provider.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <numeric>
#include <set>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "biaslens/text.hpp"

namespace biaslens {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t combine(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  return h;
}

double unit_uniform(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Allows at most `limit` acquisitions inside any trailing one-second window.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second) : limit_(per_second) {}

  void acquire() {
    if (limit_ >= 1e6) return;
    std::unique_lock lock(mutex_);
    for (;;) {
      const auto now = Clock::now();
      const auto window_start = now - std::chrono::seconds(1);
      while (!sent_.empty() && sent_.front() <= window_start) sent_.pop_front();
      if (static_cast<double>(sent_.size()) < limit_) {
        sent_.push_back(now);
        return;
      }
      const auto wake = sent_.front() + std::chrono::seconds(1);
      cv_.wait_until(lock, wake);
    }
  }

 private:
  double limit_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Clock::time_point> sent_;
};

struct ParsedEndpoint {
  std::string base;    // scheme://host[:port]
  std::string prefix;  // path prefix, possibly empty
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint must start with http:// or https://: " + endpoint);
  }
  const auto scheme = endpoint.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme: " + scheme);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw ConfigError("this build lacks TLS support; use an http endpoint");
  }
#endif
  const auto path_start = endpoint.find('/', scheme_end + 3);
  ParsedEndpoint out;
  if (path_start == std::string::npos) {
    out.base = endpoint;
  } else {
    out.base = endpoint.substr(0, path_start);
    out.prefix = endpoint.substr(path_start);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  }
  return out;
}

std::optional<std::string> resolve_credentials(const ProviderConfig& config) {
  if (config.credentials_env.empty()) return std::nullopt;
  const char* value = std::getenv(config.credentials_env.c_str());
  if (value == nullptr || *value == '\0') {
    throw AuthError("credentials environment variable '" + config.credentials_env +
                    "' is not set");
  }
  return std::string(value);
}

json merge_passthrough(json body, const std::string& params_json) {
  json params = json::parse(params_json);
  for (auto& [key, value] : params.items()) body[key] = value;
  return body;
}

struct WireResult {
  std::string text;
  Outcome outcome = Outcome::kOk;
};

class MockProvider : public Provider {
 public:
  explicit MockProvider(const ProviderConfig& config)
      : policy_(config.mock), limiter_(config.requests_per_second) {}

  CompletionResult complete(const PromptJob& job) override {
    limiter_.acquire();
    const auto start = Clock::now();
    CompletionResult result;
    result.text = answer(job);
    result.latency_ms =
        std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return result;
  }

 private:
  std::string fixed_answer(const PromptJob& job) const {
    const std::uint64_t key =
        job.question_id >= 0
            ? combine(policy_.seed, static_cast<std::uint64_t>(job.question_id))
            : combine(policy_.seed, text::fnv1a64(job.prompt));
    return (key & 1) ? policy_.affirm_token : policy_.negate_token;
  }

  std::size_t count_occurrences(const std::string& text,
                                const std::string& needle) const {
    if (needle.empty()) return 0;
    std::size_t count = 0;
    for (auto pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size())) {
      ++count;
    }
    return count;
  }

  std::string answer(const PromptJob& job) const {
    switch (policy_.kind) {
      case MockPolicyKind::kAlwaysAffirm:
        return policy_.affirm_token;
      case MockPolicyKind::kAlwaysNegate:
        return policy_.negate_token;
      case MockPolicyKind::kStubborn:
        return fixed_answer(job);
      case MockPolicyKind::kSycophant: {
        if (job.stance) {
          return *job.stance == Stance::kAffirm ? policy_.affirm_token
                                                : policy_.negate_token;
        }
        // Unlabeled: the injected opinion is whichever token occurs more
        // often than the other (the instruction names each one once).
        const auto affirms = count_occurrences(job.prompt, policy_.affirm_token);
        const auto negates = count_occurrences(job.prompt, policy_.negate_token);
        if (affirms > negates) return policy_.affirm_token;
        if (negates > affirms) return policy_.negate_token;
        return fixed_answer(job);
      }
      case MockPolicyKind::kExplainerRate: {
        const auto h = combine(policy_.seed,
                               static_cast<std::uint64_t>(job.question_id + 1),
                               static_cast<std::uint64_t>(job.round),
                               job.phase == Phase::kInitial ? 1 : 2);
        if (unit_uniform(h) < policy_.explainer_rate) return policy_.explainer_text;
        return policy_.affirm_token;
      }
      case MockPolicyKind::kScripted: {
        const auto key = text::fnv1a64_hex(job.prompt);
        auto it = policy_.scripted.find(key);
        if (it == policy_.scripted.end()) {
          throw ConfigError("scripted mock has no entry for prompt hash " + key);
        }
        return it->second;
      }
    }
    throw ConfigError("unhandled mock policy");
  }

  MockPolicy policy_;
  RateLimiter limiter_;
};

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(const ProviderConfig& config)
      : config_(config),
        endpoint_(parse_endpoint(config.endpoint)),
        credentials_(resolve_credentials(config)),
        limiter_(config.requests_per_second) {}

  CompletionResult complete(const PromptJob& job) override {
    const auto start = Clock::now();
    CompletionResult result;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
      result.attempts = attempt;
      limiter_.acquire();
      try {
        const auto wire = send(job.prompt);
        result.text = wire.text;
        result.outcome = wire.outcome;
        result.latency_ms =
            std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        return result;
      } catch (const AuthError&) {
        throw;
      } catch (const ParseError&) {
        throw;
      } catch (const TransportError& ex) {
        last_error = ex.what();
        if (attempt == config_.retry.max_attempts) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff(attempt)));
      }
    }
    throw TransportError("request failed after " +
                         std::to_string(config_.retry.max_attempts) +
                         " attempt(s): " + last_error);
  }

 private:
  int backoff(int attempt) const {
    const auto& schedule = config_.retry.backoff_ms;
    if (schedule.empty()) return 0;
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempt - 1),
                                           schedule.size() - 1);
    return schedule[idx];
  }

  httplib::Result post(const std::string& path, const httplib::Headers& headers,
                       const std::string& body) {
    httplib::Client client(endpoint_.base);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_write_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    return client.Post(endpoint_.prefix + path, headers, body, "application/json");
  }

  WireResult send(const std::string& prompt) {
    const bool openai = config_.kind == ProviderKind::kOpenAiCompatible;
    json body;
    std::string path;
    httplib::Headers headers;
    if (openai) {
      // Exactly one user message: every request is a fresh conversation.
      body = merge_passthrough(
          json{{"model", config_.model},
               {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}},
          config_.decoding_params_json);
      path = "/chat/completions";
      if (credentials_) headers.emplace("Authorization", "Bearer " + *credentials_);
    } else {
      body = merge_passthrough(
          json{{"contents",
                json::array({json{{"parts", json::array({json{{"text", prompt}}})}}})}},
          config_.decoding_params_json);
      path = "/models/" + config_.model + ":generateContent";
      if (credentials_) headers.emplace("x-goog-api-key", *credentials_);
    }

    auto res = post(path, headers, body.dump());
    if (!res) {
      throw TransportError("transport failure: " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthError("provider rejected credentials (HTTP " +
                      std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("retriable provider error (HTTP " +
                           std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
      throw ParseError("provider error (HTTP " + std::to_string(res->status) +
                       "): " + res->body);
    }
    json payload;
    try {
      payload = json::parse(res->body);
    } catch (const json::exception& ex) {
      throw ParseError(std::string("provider returned invalid JSON: ") + ex.what());
    }
    return openai ? read_openai(payload) : read_gemini(payload);
  }

  static WireResult read_openai(const json& payload) {
    const auto& choices = payload.value("choices", json::array());
    if (choices.empty()) {
      return WireResult{"", Outcome::kRefused};
    }
    const auto& first = choices.at(0);
    const auto finish = first.value("finish_reason", "");
    const auto& message = first.value("message", json::object());
    if (message.contains("refusal") && message.at("refusal").is_string()) {
      return WireResult{message.at("refusal").get<std::string>(), Outcome::kRefused};
    }
    if (finish == "content_filter") {
      return WireResult{message.value("content", ""), Outcome::kRefused};
    }
    if (!message.contains("content") || !message.at("content").is_string()) {
      throw ParseError("chat completion response lacks message content");
    }
    return WireResult{message.at("content").get<std::string>(), Outcome::kOk};
  }

  static WireResult read_gemini(const json& payload) {
    if (payload.contains("promptFeedback") &&
        payload.at("promptFeedback").contains("blockReason")) {
      return WireResult{"", Outcome::kRefused};
    }
    const auto& candidates = payload.value("candidates", json::array());
    if (candidates.empty()) {
      return WireResult{"", Outcome::kRefused};
    }
    const auto& first = candidates.at(0);
    if (first.value("finishReason", "") == "SAFETY") {
      return WireResult{"", Outcome::kRefused};
    }
    try {
      return WireResult{
          first.at("content").at("parts").at(0).at("text").get<std::string>(),
          Outcome::kOk};
    } catch (const json::exception&) {
      throw ParseError("generateContent response lacks candidate text");
    }
  }

  ProviderConfig config_;
  ParsedEndpoint endpoint_;
  std::optional<std::string> credentials_;
  RateLimiter limiter_;
};

}  // namespace

MockPolicyKind parse_mock_policy_kind(std::string_view text) {
  if (text == "always-affirm") return MockPolicyKind::kAlwaysAffirm;
  if (text == "always-negate") return MockPolicyKind::kAlwaysNegate;
  if (text == "sycophant") return MockPolicyKind::kSycophant;
  if (text == "stubborn") return MockPolicyKind::kStubborn;
  if (text == "explainer-rate") return MockPolicyKind::kExplainerRate;
  if (text == "scripted") return MockPolicyKind::kScripted;
  throw ParseError("unknown mock policy: " + std::string(text));
}

std::string_view to_string(MockPolicyKind kind) {
  switch (kind) {
    case MockPolicyKind::kAlwaysAffirm: return "always-affirm";
    case MockPolicyKind::kAlwaysNegate: return "always-negate";
    case MockPolicyKind::kSycophant: return "sycophant";
    case MockPolicyKind::kStubborn: return "stubborn";
    case MockPolicyKind::kExplainerRate: return "explainer-rate";
    case MockPolicyKind::kScripted: return "scripted";
  }
  return "always-affirm";
}

void ProviderConfig::validate() const {
  std::vector<std::string> findings;
  if (requests_per_second <= 0.0) {
    findings.push_back("requests_per_second must be positive");
  }
  if (retry.max_attempts < 1) findings.push_back("max_attempts must be at least 1");
  if (max_in_flight < 1) findings.push_back("max_in_flight must be at least 1");
  if (kind != ProviderKind::kMock) {
    if (endpoint.empty()) findings.push_back("live provider needs an endpoint");
    if (model.empty()) findings.push_back("live provider needs a model name");
  }
  if (kind == ProviderKind::kMock) {
    if (mock.explainer_rate < 0.0 || mock.explainer_rate > 1.0) {
      findings.push_back("explainer rate must lie in [0, 1]");
    }
    if (mock.affirm_token.empty() || mock.negate_token.empty()) {
      findings.push_back("mock needs non-empty affirm/negate tokens");
    }
  }
  try {
    const auto params = json::parse(decoding_params_json);
    if (!params.is_object()) findings.push_back("decoding parameters must be a JSON object");
  } catch (const json::exception&) {
    findings.push_back("decoding parameters must be valid JSON");
  }
  if (!findings.empty()) throw ValidationError(std::move(findings));
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config) {
  config.validate();
  if (config.kind == ProviderKind::kMock) {
    return std::make_unique<MockProvider>(config);
  }
  return std::make_unique<HttpProvider>(config);
}

CompletionResult complete(const std::string& prompt, const ProviderConfig& config) {
  PromptJob job;
  job.prompt = prompt;
  return make_provider(config)->complete(job);
}

std::string prompt_hash(std::string_view prompt) { return text::fnv1a64_hex(prompt); }

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::uint64_t state = seed;
  for (std::size_t i = n; i > 1; --i) {
    state = mix64(state);
    std::swap(order[i - 1], order[state % i]);
  }
  return order;
}

namespace {

struct ScheduledJob {
  PromptJob job;
  std::size_t sequence = 0;
};

}  // namespace

std::vector<RawResponse> run_batch_subset(
    const std::vector<BatchItem>& items, const ProviderConfig& config,
    const std::string& run_id, Phase phase, const std::string& language,
    std::uint64_t seed, int n_rounds,
    const std::vector<std::pair<int, int>>& wanted,
    const std::function<void(const RawResponse&)>& on_response) {
  config.validate();
  if (n_rounds < 1) throw ConfigError("n_rounds must be at least 1");
  std::map<int, const BatchItem*> by_question;
  for (const auto& item : items) {
    if (!by_question.emplace(item.question_id, &item).second) {
      throw ConfigError("duplicate batch item for question " +
                        std::to_string(item.question_id));
    }
  }
  std::set<std::pair<int, int>> requested;
  for (const auto& [qid, round] : wanted) {
    if (!by_question.count(qid)) {
      throw ConfigError("no batch item for question " + std::to_string(qid));
    }
    if (round < 1 || round > n_rounds) {
      throw ConfigError("round " + std::to_string(round) + " outside 1.." +
                        std::to_string(n_rounds));
    }
    if (!requested.emplace(qid, round).second) {
      throw ConfigError("duplicate (question, round) pair requested");
    }
  }

  // Stable question order, then one seeded permutation per round.
  std::vector<int> question_ids;
  question_ids.reserve(items.size());
  for (const auto& [qid, _] : by_question) question_ids.push_back(qid);

  std::vector<ScheduledJob> schedule;
  schedule.reserve(requested.size());
  for (int round = 1; round <= n_rounds; ++round) {
    const auto order = seeded_permutation(
        question_ids.size(), seed + static_cast<std::uint64_t>(round));
    for (const auto idx : order) {
      const int qid = question_ids[idx];
      if (!requested.count({qid, round})) continue;
      const auto* item = by_question.at(qid);
      ScheduledJob sj;
      sj.job.prompt = item->prompt;
      sj.job.question_id = qid;
      sj.job.round = round;
      sj.job.phase = phase;
      sj.job.language = language;
      sj.job.stance = item->stance;
      sj.sequence = schedule.size();
      schedule.push_back(std::move(sj));
    }
  }

  auto provider = make_provider(config);
  std::vector<RawResponse> responses(schedule.size());
  std::mutex sink_mutex;

  auto execute = [&](const ScheduledJob& sj) {
    RawResponse response;
    response.run_id = run_id;
    response.question_id = sj.job.question_id;
    response.round = sj.job.round;
    response.prompt = sj.job.prompt;
    try {
      const auto result = provider->complete(sj.job);
      response.raw_text = result.text;
      response.latency_ms = result.latency_ms;
      response.attempts = result.attempts;
      response.outcome = result.outcome;
    } catch (const AuthError&) {
      throw;
    } catch (const Error& ex) {
      response.raw_text = ex.what();
      response.attempts = config.retry.max_attempts;
      response.outcome = Outcome::kFailed;
    }
    {
      std::lock_guard lock(sink_mutex);
      if (on_response) on_response(response);
      responses[sj.sequence] = std::move(response);
    }
  };

  const auto workers = static_cast<std::size_t>(
      std::min<int>(config.max_in_flight,
                    std::max(1, static_cast<int>(schedule.size()))));
  if (workers <= 1) {
    for (const auto& sj : schedule) execute(sj);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const auto i = next.fetch_add(1);
          if (i >= schedule.size()) return;
          try {
            execute(schedule[i]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            return;
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return responses;
}

std::vector<RawResponse> run_batch(
    const std::vector<BatchItem>& items, const ProviderConfig& config,
    const std::string& run_id, Phase phase, const std::string& language,
    std::uint64_t seed, int n_rounds,
    const std::function<void(const RawResponse&)>& on_response) {
  std::vector<std::pair<int, int>> wanted;
  wanted.reserve(items.size() * static_cast<std::size_t>(n_rounds));
  for (int round = 1; round <= n_rounds; ++round) {
    for (const auto& item : items) wanted.emplace_back(item.question_id, round);
  }
  return run_batch_subset(items, config, run_id, phase, language, seed, n_rounds,
                          wanted, on_response);
}

}  // namespace biaslens
