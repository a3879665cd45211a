#include "cue/cues.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>

#include "cue/error.hpp"
#include "cue/kernels.hpp"
#include "cue/neighbors.hpp"

namespace cue {

Matrix zero_shot_logits(const Matrix& embeddings, const Matrix& prototypes) {
  return kernels::cosine_scores(embeddings, prototypes);
}

const char* cue_mode_name(CueMode m) {
  switch (m) {
    case CueMode::top: return "top";
    case CueMode::random: return "random";
    case CueMode::last: return "last";
  }
  return "?";
}

CueMode parse_cue_mode(const std::string& s) {
  if (s == "top") return CueMode::top;
  if (s == "random") return CueMode::random;
  if (s == "last") return CueMode::last;
  throw Error(Errc::invalid_argument, "unknown cue mode '" + s + "' (expected top|random|last)");
}

namespace {

void check_scores(const Matrix& scores, std::span<const Label> labels) {
  if (scores.rows() != labels.size()) {
    throw Error(Errc::dimension_mismatch, "scores have " + std::to_string(scores.rows()) +
                                              " rows, labels " + std::to_string(labels.size()));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= scores.cols()) {
      throw Error(Errc::label_out_of_range, "label " + std::to_string(labels[i]) + " at row " +
                                                std::to_string(i) + " is not < " +
                                                std::to_string(scores.cols()));
    }
  }
}

// Non-ground-truth classes of row i ordered by score (descending when
// `descending`, else ascending), ties to the smaller index either way.
CueList ranked_row(const Matrix& scores, std::size_t i, Label y, std::size_t take, bool descending) {
  CueList cand;
  cand.reserve(scores.cols() - 1);
  for (std::size_t c = 0; c < scores.cols(); ++c) {
    if (c != y) cand.push_back(c);
  }
  auto row = scores.row(i);
  auto cmp = [&](std::size_t a, std::size_t b) {
    if (row[a] != row[b]) return descending ? row[a] > row[b] : row[a] < row[b];
    return a < b;
  };
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end(), cmp);
  cand.resize(take);
  return cand;
}

}  // namespace

CueSelection topk_cues(const Matrix& scores, std::span<const Label> labels, std::size_t k) {
  return variant_cues(scores, labels, k, CueMode::top, 0);
}

CueSelection variant_cues(const Matrix& scores, std::span<const Label> labels, std::size_t k,
                          CueMode mode, std::uint64_t seed) {
  check_scores(scores, labels);
  CueSelection out;
  const std::size_t C = scores.cols();
  const std::size_t take = C == 0 ? 0 : std::min(k, C - 1);
  out.clamped = take < k;
  out.cues.resize(labels.size());
  if (take == 0) return out;

  if (mode == CueMode::random) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      CueList cand;
      for (std::size_t c = 0; c < C; ++c) {
        if (c != labels[i]) cand.push_back(c);
      }
      // partial Fisher-Yates: the first `take` slots are a uniform draw
      for (std::size_t j = 0; j < take; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, cand.size() - 1);
        std::swap(cand[j], cand[pick(rng)]);
      }
      cand.resize(take);
      out.cues[i] = std::move(cand);
    }
    return out;
  }

  const bool descending = mode == CueMode::top;
  const auto n = static_cast<std::int64_t>(labels.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out.cues[r] = ranked_row(scores, r, labels[r], take, descending);
  }
  return out;
}

std::size_t CueTargets::ones(std::size_t i) const {
  auto r = row(i);
  return static_cast<std::size_t>(std::count(r.begin(), r.end(), std::uint8_t{1}));
}

namespace {

CueTargets blank_targets(std::span<const Label> labels, std::size_t num_classes, CueKind kind) {
  CueTargets t;
  t.num_classes = num_classes;
  t.kind = kind;
  t.targets.assign(labels.size() * num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw Error(Errc::label_out_of_range, "label " + std::to_string(labels[i]) + " at row " +
                                                std::to_string(i) + " is not < " +
                                                std::to_string(num_classes));
    }
    t.targets[i * num_classes + labels[i]] = 1;
  }
  return t;
}

}  // namespace

CueTargets one_hot_targets(std::span<const Label> labels, std::size_t num_classes, CueKind kind) {
  return blank_targets(labels, num_classes, kind);
}

CueTargets expand_targets_zs(std::span<const CueList> cues, std::span<const Label> labels,
                             std::size_t num_classes) {
  if (cues.size() != labels.size()) {
    throw Error(Errc::dimension_mismatch, "cue lists (" + std::to_string(cues.size()) +
                                              ") and labels (" + std::to_string(labels.size()) +
                                              ") differ in length");
  }
  auto t = blank_targets(labels, num_classes, CueKind::zs);
  std::size_t k = 0;
  for (std::size_t i = 0; i < cues.size(); ++i) {
    k = std::max(k, cues[i].size());
    for (auto c : cues[i]) {
      if (c == labels[i]) {
        throw Error(Errc::invalid_argument,
                    "cue list of sample " + std::to_string(i) + " contains its ground truth");
      }
      if (c >= num_classes) {
        throw Error(Errc::label_out_of_range,
                    "cue " + std::to_string(c) + " of sample " + std::to_string(i) + " out of range");
      }
      t.targets[i * num_classes + c] = 1;
    }
  }
  t.k = k;
  return t;
}

CueTargets expand_targets_llm(const NeighborGraph& graph, std::span<const Label> labels,
                              std::size_t num_classes) {
  if (graph.size() != num_classes) {
    throw Error(Errc::dimension_mismatch, "graph covers " + std::to_string(graph.size()) +
                                              " classes, expected " + std::to_string(num_classes));
  }
  for (std::size_t c = 0; c < graph.size(); ++c) {
    for (auto nb : graph.neighbors[c]) {
      if (nb >= num_classes) {
        throw Error(Errc::label_out_of_range, "neighbor " + std::to_string(nb) + " of class " +
                                                  std::to_string(c) + " out of range");
      }
    }
  }
  auto t = blank_targets(labels, num_classes, CueKind::llm);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (auto nb : graph.neighbors[labels[i]]) t.targets[i * num_classes + nb] = 1;
  }
  return t;
}

nlohmann::json to_json(const CueCache& c) {
  return {{"kind", c.kind},
          {"k", c.k},
          {"mode", cue_mode_name(c.mode)},
          {"seed", c.seed},
          {"key", c.key},
          {"per_sample_cue_lists", c.per_sample_cue_lists}};
}

CueCache cue_cache_from_json(const nlohmann::json& j) {
  CueCache c;
  c.kind = j.at("kind").get<std::string>();
  c.k = j.at("k").get<std::size_t>();
  c.mode = parse_cue_mode(j.value("mode", "top"));
  c.seed = j.value("seed", std::uint64_t{0});
  c.key = j.value("key", "");
  c.per_sample_cue_lists = j.at("per_sample_cue_lists").get<std::vector<CueList>>();
  return c;
}

}  // namespace cue
