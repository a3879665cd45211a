#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cue/dataset.hpp"
#include "cue/matrix.hpp"

namespace cue {

struct NeighborGraph;

/// N x C cosine similarities between embeddings and class prototypes. Raw,
/// no temperature: only the per-row ordering is consumed downstream.
Matrix zero_shot_logits(const Matrix& embeddings, const Matrix& prototypes);

using CueList = std::vector<std::size_t>;

enum class CueMode { top, random, last };

const char* cue_mode_name(CueMode m);
CueMode parse_cue_mode(const std::string& s);

struct CueSelection {
  std::vector<CueList> cues;
  /// Set when k exceeded C - 1 and was clamped.
  bool clamped = false;
};

/// The min(k, C-1) highest-scoring non-ground-truth classes per row, in
/// descending score order, ties to the smaller class index.
CueSelection topk_cues(const Matrix& scores, std::span<const Label> labels, std::size_t k);

/// top: same as topk_cues. last: the lowest-scoring non-ground-truth classes,
/// ascending by score. random: uniform draw without replacement, seeded.
CueSelection variant_cues(const Matrix& scores, std::span<const Label> labels, std::size_t k,
                          CueMode mode, std::uint64_t seed);

enum class CueKind { zs, llm };

/// Binary multi-label targets, one row per sample, stored as 0/1 bytes.
struct CueTargets {
  std::size_t num_classes = 0;
  std::vector<std::uint8_t> targets;  // N x C row-major
  CueKind kind = CueKind::zs;
  std::size_t k = 0;

  std::size_t size() const noexcept { return num_classes ? targets.size() / num_classes : 0; }
  std::span<const std::uint8_t> row(std::size_t i) const {
    return {targets.data() + i * num_classes, num_classes};
  }
  std::size_t ones(std::size_t i) const;
};

/// Row i is one at {y_i} U cues_i. Throws if a cue equals y_i or is out of range.
CueTargets expand_targets_zs(std::span<const CueList> cues, std::span<const Label> labels,
                             std::size_t num_classes);

/// Row i is one at {y_i} U N(y_i). Throws on out-of-range neighbor indices.
CueTargets expand_targets_llm(const NeighborGraph& graph, std::span<const Label> labels,
                              std::size_t num_classes);

/// One-hot rows; the degenerate target used when a cue term is disabled.
CueTargets one_hot_targets(std::span<const Label> labels, std::size_t num_classes, CueKind kind);

/// Persisted cue lists: {kind, k, mode, key, per_sample_cue_lists}.
struct CueCache {
  std::string kind = "zs";
  std::size_t k = 0;
  CueMode mode = CueMode::top;
  std::uint64_t seed = 0;
  /// Hash of the manifest and split descriptor the cues were mined from.
  std::string key;
  std::vector<CueList> per_sample_cue_lists;
};

nlohmann::json to_json(const CueCache& c);
CueCache cue_cache_from_json(const nlohmann::json& j);

}  // namespace cue
