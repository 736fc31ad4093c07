#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "biaslens/store.hpp"
#include "biaslens/types.hpp"

namespace biaslens {

enum class ProviderKind { kOpenAiCompatible, kGeminiCompatible, kMock };

inline std::string_view to_string(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::kOpenAiCompatible: return "openai-compatible";
    case ProviderKind::kGeminiCompatible: return "gemini-compatible";
    case ProviderKind::kMock: return "mock";
  }
  return "mock";
}

inline ProviderKind parse_provider_kind(std::string_view text) {
  if (text == "openai-compatible" || text == "openai") {
    return ProviderKind::kOpenAiCompatible;
  }
  if (text == "gemini-compatible" || text == "gemini") {
    return ProviderKind::kGeminiCompatible;
  }
  if (text == "mock") return ProviderKind::kMock;
  throw ParseError("unknown provider kind: " + std::string(text));
}

enum class MockPolicyKind {
  kAlwaysAffirm,
  kAlwaysNegate,
  kSycophant,     // echoes any injected opinion, otherwise a fixed answer
  kStubborn,      // fixed per-question answer from a seeded table
  kExplainerRate, // hedges with probability p, otherwise affirms
  kScripted,      // explicit prompt-hash -> output map
};

MockPolicyKind parse_mock_policy_kind(std::string_view text);
std::string_view to_string(MockPolicyKind kind);

struct MockPolicy {
  MockPolicyKind kind = MockPolicyKind::kAlwaysAffirm;
  double explainer_rate = 0.1;  // kExplainerRate only, in [0, 1]
  std::uint64_t seed = 0;
  std::string affirm_token = "Yes.";
  std::string negate_token = "No.";
  std::string explainer_text = "It depends on the situation and the context.";
  std::map<std::string, std::string> scripted;  // fnv1a64 hex of prompt -> output
};

struct RetryPolicy {
  int max_attempts = 3;
  std::vector<int> backoff_ms = {200, 500, 1000};  // clamped to the last entry
};

struct ProviderConfig {
  ProviderKind kind = ProviderKind::kMock;
  std::string endpoint;          // live kinds: scheme://host[:port][/prefix]
  std::string model;
  std::string credentials_env;   // name of the env var holding the key
  double requests_per_second = 8.0;
  RetryPolicy retry;
  int max_in_flight = 8;
  std::string decoding_params_json = "{}";  // opaque pass-through object
  MockPolicy mock;
  double timeout_seconds = 120.0;

  void validate() const;
};

// A prompt plus its run labels. Live providers send only the prompt; the
// mock uses the labels to keep per-question behavior stable across phases.
struct PromptJob {
  std::string prompt;
  int question_id = -1;
  int round = 0;
  Phase phase = Phase::kInitial;
  std::string language;
  std::optional<Stance> stance;  // opposing phase: the injected opinion
};

struct CompletionResult {
  std::string text;
  double latency_ms = 0.0;
  int attempts = 1;
  Outcome outcome = Outcome::kOk;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual CompletionResult complete(const PromptJob& job) = 0;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& config);

// Single-turn completion with no conversation context.
CompletionResult complete(const std::string& prompt, const ProviderConfig& config);

// Stable key for MockPolicy::scripted.
std::string prompt_hash(std::string_view prompt);

struct BatchItem {
  int question_id = 0;
  std::string prompt;
  std::optional<Stance> stance;
};

// Runs every (item, round) pair once. Question order is reshuffled per round
// with seed + round index; requests run concurrently up to max_in_flight and
// never above the configured rate; on_response is invoked serially.
// Per-prompt failures become Outcome::kFailed records; only configuration
// errors abort the batch.
std::vector<RawResponse> run_batch(
    const std::vector<BatchItem>& items, const ProviderConfig& config,
    const std::string& run_id, Phase phase, const std::string& language,
    std::uint64_t seed, int n_rounds,
    const std::function<void(const RawResponse&)>& on_response = {});

// Subset form used when resuming: only the listed (question, round) pairs.
std::vector<RawResponse> run_batch_subset(
    const std::vector<BatchItem>& items, const ProviderConfig& config,
    const std::string& run_id, Phase phase, const std::string& language,
    std::uint64_t seed, int n_rounds,
    const std::vector<std::pair<int, int>>& wanted,
    const std::function<void(const RawResponse&)>& on_response = {});

// Deterministic Fisher-Yates permutation of [0, n); independent of the
// standard library's distribution implementations.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace biaslens
