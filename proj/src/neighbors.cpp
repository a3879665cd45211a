#include "cue/neighbors.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <fstream>
#include <future>
#include <iterator>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "cue/error.hpp"
#include "cue/hash.hpp"

namespace cue {

bool NeighborGraph::contains(std::size_t cls, std::size_t other) const {
  if (cls >= neighbors.size()) return false;
  return std::binary_search(neighbors[cls].begin(), neighbors[cls].end(), other);
}

std::string NeighborGraph::check_invariants() const {
  const auto C = neighbors.size();
  for (std::size_t c = 0; c < C; ++c) {
    const auto& list = neighbors[c];
    for (std::size_t j = 0; j < list.size(); ++j) {
      if (list[j] >= C) return "class " + std::to_string(c) + " has out-of-range neighbor";
      if (list[j] == c) return "class " + std::to_string(c) + " lists itself";
      if (j > 0 && list[j - 1] >= list[j]) {
        return "class " + std::to_string(c) + " list is not strictly ascending";
      }
    }
  }
  return {};
}

nlohmann::json to_json(const NeighborGraph& g, std::span<const std::string> classes) {
  return {{"classes", std::vector<std::string>(classes.begin(), classes.end())},
          {"neighbors", g.neighbors},
          {"meta",
           {{"provider", g.meta.provider},
            {"model_id", g.meta.model_id},
            {"batch_size", g.meta.batch_size},
            {"max_neighbors", g.meta.max_neighbors},
            {"created_at", g.meta.created_at}}}};
}

NeighborGraph graph_from_json(const nlohmann::json& j) {
  NeighborGraph g;
  g.neighbors = j.at("neighbors").get<std::vector<std::vector<std::size_t>>>();
  if (j.contains("meta")) {
    const auto& m = j.at("meta");
    g.meta.provider = m.value("provider", "");
    g.meta.model_id = m.value("model_id", "");
    g.meta.batch_size = m.value("batch_size", std::size_t{0});
    g.meta.max_neighbors = m.value("max_neighbors", std::size_t{0});
    g.meta.created_at = m.value("created_at", "");
  }
  if (j.contains("classes") && j.at("classes").size() != g.neighbors.size()) {
    throw Error(Errc::dimension_mismatch, "graph 'classes' and 'neighbors' lengths differ");
  }
  if (auto bad = g.check_invariants(); !bad.empty()) {
    throw Error(Errc::invalid_argument, "neighbor graph: " + bad);
  }
  return g;
}

std::vector<std::vector<std::string>> batch_labels(std::span<const std::string> class_names,
                                                   std::size_t batch_size) {
  if (batch_size == 0) throw Error(Errc::invalid_argument, "batch_size must be >= 1");
  std::vector<std::vector<std::string>> batches;
  for (std::size_t start = 0; start < class_names.size(); start += batch_size) {
    const auto end = std::min(class_names.size(), start + batch_size);
    batches.emplace_back(class_names.begin() + static_cast<std::ptrdiff_t>(start),
                         class_names.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::string render_prompt(std::span<const std::string> batch,
                          std::span<const std::string> vocabulary, std::size_t max_neighbors) {
  if (batch.empty()) throw Error(Errc::invalid_argument, "cannot render a prompt for an empty batch");
  for (const auto& name : batch) {
    if (std::find(vocabulary.begin(), vocabulary.end(), name) == vocabulary.end()) {
      throw Error(Errc::invalid_argument, "batch class '" + name + "' is not in the vocabulary");
    }
  }
  std::ostringstream p;
  p << "You are given the complete label vocabulary of an image classification dataset.\n"
    << "Treat it as the only candidate set and select semantic neighbors strictly from it.\n\n"
    << "Candidate vocabulary (" << vocabulary.size() << " classes):\n";
  for (const auto& name : vocabulary) p << "- " << name << "\n";
  p << "\nTarget classes (" << batch.size() << "):\n";
  for (const auto& name : batch) p << "- " << name << "\n";
  p << "\nFor each target class, list at most " << max_neighbors
    << " classes from the candidate vocabulary that are its nearest semantic neighbors, "
       "i.e. the categories it is most easily confused with. Never list the target class "
       "itself and never use names outside the vocabulary.\n\n"
    << "Respond with exactly one JSON object that maps every target class name to an array "
       "of neighbor names, with no other text. Example: {\"<target>\": [\"<neighbor>\", ...]}\n";
  return p.str();
}

std::string prompt_hash(const std::string& prompt) { return sha256_hex(prompt).substr(0, 16); }

namespace {

// Offsets of the first balanced {...} span starting at or after `from`,
// skipping braces inside string literals.
std::optional<std::pair<std::size_t, std::size_t>> balanced_object(const std::string& s,
                                                                   std::size_t from) {
  const auto open = s.find('{', from);
  if (open == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char ch = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (ch == '\\') {
        escaped = true;
      } else if (ch == '"') {
        in_string = false;
      }
      continue;
    }
    if (ch == '"') {
      in_string = true;
    } else if (ch == '{') {
      ++depth;
    } else if (ch == '}') {
      if (--depth == 0) return std::make_pair(open, i + 1);
    }
  }
  return std::make_pair(open, std::string::npos);
}

}  // namespace

RawLlmResponse parse_response(std::string text) {
  RawLlmResponse out;
  out.text = std::move(text);
  std::size_t from = 0;
  while (true) {
    const auto span = balanced_object(out.text, from);
    if (!span) break;
    const auto [begin, end] = *span;
    if (end == std::string::npos) {
      from = begin + 1;
      continue;
    }
    auto obj = nlohmann::ordered_json::parse(out.text.begin() + static_cast<std::ptrdiff_t>(begin),
                                             out.text.begin() + static_cast<std::ptrdiff_t>(end),
                                             nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded() || !obj.is_object()) {
      from = begin + 1;
      continue;
    }
    for (const auto& [key, value] : obj.items()) {
      std::vector<std::string> names;
      if (value.is_array()) {
        for (const auto& v : value) {
          if (v.is_string()) names.push_back(v.get<std::string>());
        }
      } else if (value.is_string()) {
        names.push_back(value.get<std::string>());
      } else {
        continue;
      }
      out.parsed.emplace_back(key, std::move(names));
    }
    return out;
  }
  out.parse_failed = true;
  return out;
}

RawLlmResponse query_provider(const std::string& prompt, LlmProvider& provider) {
  return parse_response(provider.complete(prompt));
}

std::string FixtureProvider::complete(const std::string& prompt) {
  const auto key = prompt_hash(prompt);
  const auto path = dir_ / (key + ".txt");
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::missing_fixture,
                "no fixture for prompt hash " + key + " in " + dir_.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void FixtureProvider::record(const std::filesystem::path& dir, const std::string& prompt,
                             const std::string& response) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / (prompt_hash(prompt) + ".txt"), std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_missing_file, "cannot write fixture into " + dir.string());
  out << response;
}

LiveProviderConfig live_config_from_env(LiveProviderConfig base) {
  const auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? v : "";
  };
  if (base.endpoint.empty()) base.endpoint = env(kLlmEndpointEnv);
  if (base.model.empty()) base.model = env(kLlmModelEnv);
  if (base.api_key.empty()) base.api_key = env(kLlmKeyEnv);
  return base;
}

std::string extract_completion_text(const std::string& body) {
  auto j = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::malformed_payload, "provider response is not a JSON object");
  }
  for (const char* key : {"response", "text", "output"}) {
    if (j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  }
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& first = j["choices"][0];
    if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
    if (first.contains("message") && first["message"].is_object() &&
        first["message"].contains("content") && first["message"]["content"].is_string()) {
      return first["message"]["content"].get<std::string>();
    }
  }
  throw Error(Errc::malformed_payload, "provider response has no completion text field");
}

LiveProvider::LiveProvider(LiveProviderConfig cfg, HttpTransport transport,
                           std::function<void(std::chrono::milliseconds)> sleep)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

LiveProvider::LiveProvider(LiveProviderConfig cfg)
    : LiveProvider(cfg, make_http_transport(cfg)) {}

std::string LiveProvider::complete(const std::string& prompt) {
  const nlohmann::json body{{"model", cfg_.model}, {"prompt", prompt}, {"temperature", 0}};
  const auto payload = body.dump();
  auto backoff = cfg_.initial_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleep_(backoff);
      backoff *= 2;
    }
    ++attempts_;
    const auto res = transport_(payload);
    if (res.ok && res.status >= 200 && res.status < 300) return extract_completion_text(res.body);
    const bool transient = !res.ok || res.status == 429 || res.status >= 500;
    last_error = res.ok ? "HTTP " + std::to_string(res.status) : res.error;
    if (!transient) {
      throw Error(Errc::provider_rejected, "provider rejected request: " + last_error);
    }
  }
  throw Error(Errc::retries_exhausted, "provider unreachable after " +
                                           std::to_string(cfg_.max_retries + 1) +
                                           " attempts: " + last_error);
}

const char* drop_reason_name(DropReason r) {
  switch (r) {
    case DropReason::oov: return "oov";
    case DropReason::self: return "self";
    case DropReason::duplicate: return "duplicate";
    case DropReason::ambiguous: return "ambiguous";
  }
  return "?";
}

nlohmann::json to_json(const FilterReport& r) {
  auto drops = nlohmann::json::array();
  for (const auto& d : r.drops) {
    drops.push_back({{"class", d.cls}, {"dropped_name", d.dropped_name},
                     {"reason", drop_reason_name(d.reason)}});
  }
  return {{"drops", drops}, {"uncovered", r.uncovered}, {"truncated", r.truncated}};
}

std::string normalize_name(std::string_view name) {
  auto is_space = [](unsigned char ch) { return std::isspace(ch) != 0; };
  std::size_t b = 0, e = name.size();
  while (b < e && is_space(static_cast<unsigned char>(name[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(name[e - 1]))) --e;
  std::string out(name.substr(b, e - b));
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

NeighborGraph filter_and_align(
    std::span<const std::vector<std::pair<std::string, std::vector<std::string>>>> parsed,
    std::span<const std::string> class_names, std::size_t max_neighbors, FilterReport* report) {
  FilterReport local;
  FilterReport& rep = report ? *report : local;

  // normalized name -> class index; a collision marks the name ambiguous
  constexpr std::size_t kAmbiguous = static_cast<std::size_t>(-1);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    auto [it, inserted] = index.emplace(normalize_name(class_names[c]), c);
    if (!inserted) it->second = kAmbiguous;
  }

  const std::size_t C = class_names.size();
  std::vector<std::vector<std::size_t>> ordered(C);
  std::vector<bool> covered(C, false);

  for (const auto& response : parsed) {
    for (const auto& [key, names] : response) {
      const auto kit = index.find(normalize_name(key));
      if (kit == index.end()) {
        rep.drops.push_back({key, key, DropReason::oov});
        continue;
      }
      if (kit->second == kAmbiguous) {
        rep.drops.push_back({key, key, DropReason::ambiguous});
        continue;
      }
      const std::size_t cls = kit->second;
      covered[cls] = true;
      auto& list = ordered[cls];
      for (const auto& name : names) {
        const auto it = index.find(normalize_name(name));
        if (it == index.end()) {
          rep.drops.push_back({class_names[cls], name, DropReason::oov});
        } else if (it->second == kAmbiguous) {
          rep.drops.push_back({class_names[cls], name, DropReason::ambiguous});
        } else if (it->second == cls) {
          rep.drops.push_back({class_names[cls], name, DropReason::self});
        } else if (std::find(list.begin(), list.end(), it->second) != list.end()) {
          rep.drops.push_back({class_names[cls], name, DropReason::duplicate});
        } else {
          list.push_back(it->second);
        }
      }
    }
  }

  NeighborGraph g;
  g.neighbors.resize(C);
  g.meta.max_neighbors = max_neighbors;
  for (std::size_t c = 0; c < C; ++c) {
    auto list = std::move(ordered[c]);
    if (max_neighbors > 0 && list.size() > max_neighbors) {
      rep.truncated += list.size() - max_neighbors;
      list.resize(max_neighbors);
    }
    std::sort(list.begin(), list.end());
    g.neighbors[c] = std::move(list);
    if (!covered[c]) rep.uncovered.push_back(class_names[c]);
  }
  return g;
}

NeighborPipelineResult build_neighbor_graph(std::span<const std::string> class_names,
                                            LlmProvider& provider,
                                            const NeighborPipelineConfig& cfg) {
  if (cfg.max_neighbors == 0) throw Error(Errc::invalid_argument, "max_neighbors must be >= 1");
  const auto batches = batch_labels(class_names, cfg.batch_size);
  std::vector<std::string> prompts;
  prompts.reserve(batches.size());
  for (const auto& b : batches) prompts.push_back(render_prompt(b, class_names, cfg.max_neighbors));

  NeighborPipelineResult out;
  out.responses.resize(prompts.size());
  const std::size_t width = std::max<std::size_t>(1, cfg.concurrency);
  for (std::size_t start = 0; start < prompts.size(); start += width) {
    const auto end = std::min(prompts.size(), start + width);
    if (width == 1) {
      out.responses[start] = query_provider(prompts[start], provider);
      continue;
    }
    std::vector<std::future<RawLlmResponse>> inflight;
    for (std::size_t i = start; i < end; ++i) {
      inflight.push_back(std::async(std::launch::async,
                                    [&, i] { return query_provider(prompts[i], provider); }));
    }
    for (std::size_t i = start; i < end; ++i) out.responses[i] = inflight[i - start].get();
  }

  std::vector<std::vector<std::pair<std::string, std::vector<std::string>>>> parsed;
  parsed.reserve(out.responses.size());
  for (const auto& r : out.responses) parsed.push_back(r.parsed);
  out.graph = filter_and_align(parsed, class_names, cfg.max_neighbors, &out.report);
  out.graph.meta.provider = provider.name();
  out.graph.meta.model_id = provider.model_id();
  out.graph.meta.batch_size = cfg.batch_size;

  const auto now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  out.graph.meta.created_at = stamp;
  return out;
}

}  // namespace cue
