#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace cue {

struct GraphMeta {
  std::string provider;
  std::string model_id;
  std::size_t batch_size = 0;
  std::size_t max_neighbors = 0;
  std::string created_at;
};

/// Per-class semantic neighbor lists. Lists are sorted, duplicate-free,
/// in range, and never contain their own class.
struct NeighborGraph {
  std::vector<std::vector<std::size_t>> neighbors;
  GraphMeta meta;

  std::size_t size() const noexcept { return neighbors.size(); }
  bool contains(std::size_t cls, std::size_t other) const;
  /// Empty string if all invariants hold, otherwise the first violation.
  std::string check_invariants() const;
};

nlohmann::json to_json(const NeighborGraph& g, std::span<const std::string> classes);
NeighborGraph graph_from_json(const nlohmann::json& j);

inline constexpr std::size_t kDefaultBatchSize = 20;
inline constexpr std::size_t kDefaultMaxNeighbors = 5;

std::vector<std::vector<std::string>> batch_labels(std::span<const std::string> class_names,
                                                   std::size_t batch_size);

std::string render_prompt(std::span<const std::string> batch,
                          std::span<const std::string> vocabulary, std::size_t max_neighbors);

/// Short content hash used to key fixture files.
std::string prompt_hash(const std::string& prompt);

struct RawLlmResponse {
  std::string text;
  std::vector<std::pair<std::string, std::vector<std::string>>> parsed;
  bool parse_failed = false;
};

/// Pulls the first top-level JSON object out of `text` and reads it as a
/// class -> [names] mapping. Never throws; failures set parse_failed.
RawLlmResponse parse_response(std::string text);

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string model_id() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;
};

RawLlmResponse query_provider(const std::string& prompt, LlmProvider& provider);

/// Canned responses stored as `<dir>/<prompt_hash>.txt`.
class FixtureProvider : public LlmProvider {
 public:
  explicit FixtureProvider(std::filesystem::path dir) : dir_(std::move(dir)) {}
  std::string name() const override { return "fixture"; }
  std::string model_id() const override { return "fixture"; }
  std::string complete(const std::string& prompt) override;

  static void record(const std::filesystem::path& dir, const std::string& prompt,
                     const std::string& response);

 private:
  std::filesystem::path dir_;
};

struct TransportResult {
  bool ok = false;
  int status = 0;  // HTTP status, 0 when the connection failed
  std::string body;
  std::string error;
};

using HttpTransport = std::function<TransportResult(const std::string& json_body)>;

struct LiveProviderConfig {
  std::string endpoint;  // e.g. http://localhost:11434/api/generate
  std::string model;
  std::string api_key;   // sent as a Bearer token when non-empty
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};
};

inline constexpr const char* kLlmKeyEnv = "CUE_LLM_API_KEY";
inline constexpr const char* kLlmEndpointEnv = "CUE_LLM_ENDPOINT";
inline constexpr const char* kLlmModelEnv = "CUE_LLM_MODEL";

/// Fills endpoint, model and key from the environment where unset.
LiveProviderConfig live_config_from_env(LiveProviderConfig base);

/// Transport over cpp-httplib.
HttpTransport make_http_transport(const LiveProviderConfig& cfg);

/// POSTs {model, prompt, temperature: 0}. Connection failures, 429 and 5xx
/// are retried up to max_retries times with doubling backoff.
class LiveProvider : public LlmProvider {
 public:
  LiveProvider(LiveProviderConfig cfg, HttpTransport transport,
               std::function<void(std::chrono::milliseconds)> sleep = {});
  explicit LiveProvider(LiveProviderConfig cfg);

  std::string name() const override { return "live"; }
  std::string model_id() const override { return cfg_.model; }
  std::string complete(const std::string& prompt) override;

  int attempts() const noexcept { return attempts_; }

 private:
  LiveProviderConfig cfg_;
  HttpTransport transport_;
  std::function<void(std::chrono::milliseconds)> sleep_;
  std::atomic<int> attempts_{0};
};

/// Extracts completion text from the common response shapes:
/// {"response"}, {"text"}, {"output"}, {"choices":[{"text"} | {"message":{"content"}}]}.
std::string extract_completion_text(const std::string& body);

enum class DropReason { oov, self, duplicate, ambiguous };

const char* drop_reason_name(DropReason r);

struct FilterDrop {
  std::string cls;
  std::string dropped_name;
  DropReason reason;
};

struct FilterReport {
  std::vector<FilterDrop> drops;
  /// Classes that never appeared as keys in any response.
  std::vector<std::string> uncovered;
  std::size_t truncated = 0;
};

nlohmann::json to_json(const FilterReport& r);

/// Lowercase + trim; the matching key for class names.
std::string normalize_name(std::string_view name);

/// Merges parsed (class -> names) pairs into a graph over `class_names`.
/// Total: bad entries are dropped and logged, never thrown.
NeighborGraph filter_and_align(
    std::span<const std::vector<std::pair<std::string, std::vector<std::string>>>> parsed,
    std::span<const std::string> class_names, std::size_t max_neighbors, FilterReport* report);

struct NeighborPipelineConfig {
  std::size_t batch_size = kDefaultBatchSize;
  std::size_t max_neighbors = kDefaultMaxNeighbors;
  std::size_t concurrency = 1;
};

struct NeighborPipelineResult {
  NeighborGraph graph;
  FilterReport report;
  std::vector<RawLlmResponse> responses;
};

/// Batch -> prompt -> query -> filter. Batch queries run with bounded
/// concurrency; merge order is the batch order.
NeighborPipelineResult build_neighbor_graph(std::span<const std::string> class_names,
                                            LlmProvider& provider,
                                            const NeighborPipelineConfig& cfg);

}  // namespace cue
