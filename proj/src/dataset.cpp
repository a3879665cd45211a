#include "cue/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "cue/error.hpp"

namespace cue {

void LabeledEmbeddings::validate() const {
  if (features.cols() == 0) throw Error(Errc::dimension_mismatch, "feature dimension must be > 0");
  if (features.rows() != labels.size()) {
    throw Error(Errc::dimension_mismatch, "features have " + std::to_string(features.rows()) +
                                              " rows but there are " +
                                              std::to_string(labels.size()) + " labels");
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : class_names) {
    if (!seen.insert(name).second) {
      throw Error(Errc::invalid_argument, "duplicate class name '" + name + "'");
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_names.size()) {
      throw Error(Errc::label_out_of_range, "label " + std::to_string(labels[i]) + " at row " +
                                                std::to_string(i) + " is not < " +
                                                std::to_string(class_names.size()));
    }
  }
}

LabeledEmbeddings LabeledEmbeddings::subset(std::span<const std::size_t> indices) const {
  LabeledEmbeddings out;
  out.features = features.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  out.class_names = class_names;
  return out;
}

ClassCounts count_labels(std::span<const Label> labels, std::size_t num_classes) {
  ClassCounts counts(num_classes, 0);
  for (auto y : labels) {
    if (y >= num_classes) {
      throw Error(Errc::label_out_of_range,
                  "label " + std::to_string(y) + " is not < " + std::to_string(num_classes));
    }
    ++counts[y];
  }
  return counts;
}

ClassPrior compute_prior(const ClassCounts& counts) {
  const auto total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw Error(Errc::invalid_argument, "class counts are all zero");
  ClassPrior prior;
  prior.pi.reserve(counts.size());
  for (auto n : counts) prior.pi.push_back(static_cast<double>(n) / static_cast<double>(total));
  return prior;
}

const char* shot_name(Shot s) {
  switch (s) {
    case Shot::Many: return "many";
    case Shot::Medium: return "medium";
    case Shot::Few: return "few";
  }
  return "?";
}

Shot shot_of(std::size_t count) {
  if (count > kManyShotAbove) return Shot::Many;
  if (count < kFewShotBelow) return Shot::Few;
  return Shot::Medium;
}

std::vector<Shot> assign_shot_split(const ClassCounts& counts) {
  std::vector<Shot> out;
  out.reserve(counts.size());
  for (auto n : counts) out.push_back(shot_of(n));
  return out;
}

std::vector<std::size_t> longtail_profile(std::size_t num_classes, std::size_t n_max, double ir) {
  if (!(ir >= 1.0) || !std::isfinite(ir)) {
    throw Error(Errc::invalid_argument, "imbalance ratio must be >= 1, got " + std::to_string(ir));
  }
  std::vector<std::size_t> sizes(num_classes, n_max);
  if (num_classes <= 1) return sizes;
  const double denom = static_cast<double>(num_classes - 1);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double n = static_cast<double>(n_max) * std::pow(ir, -static_cast<double>(c) / denom);
    sizes[c] = static_cast<std::size_t>(std::round(n));
  }
  return sizes;
}

std::vector<std::size_t> SplitDescriptor::flat_indices() const {
  std::vector<std::size_t> out;
  for (const auto& cls : selected_indices) out.insert(out.end(), cls.begin(), cls.end());
  std::sort(out.begin(), out.end());
  return out;
}

SplitDescriptor build_longtail_indices(std::span<const Label> labels, std::size_t num_classes,
                                       std::size_t n_max, double ir, std::uint64_t seed) {
  const auto profile = longtail_profile(num_classes, n_max, ir);

  std::vector<std::vector<std::size_t>> pool(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= num_classes) {
      throw Error(Errc::label_out_of_range, "label " + std::to_string(labels[i]) + " at row " +
                                                std::to_string(i) + " is not < " +
                                                std::to_string(num_classes));
    }
    pool[labels[i]].push_back(i);
  }

  std::vector<std::size_t> order(num_classes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pool[a].size() > pool[b].size();
  });

  SplitDescriptor split;
  split.seed = seed;
  split.ir = ir;
  split.n_max = n_max;
  split.per_class_counts.assign(num_classes, 0);
  split.selected_indices.resize(num_classes);

  std::mt19937_64 rng(seed);
  for (std::size_t rank = 0; rank < num_classes; ++rank) {
    const std::size_t cls = order[rank];
    const std::size_t want = profile[rank];
    if (want == 0) {
      throw Error(Errc::invalid_argument,
                  "profile assigns zero samples to class " + std::to_string(cls));
    }
    if (pool[cls].size() < want) {
      throw Error(Errc::insufficient_samples,
                  "class " + std::to_string(cls) + " has " + std::to_string(pool[cls].size()) +
                      " samples, needs " + std::to_string(want));
    }
    auto candidates = pool[cls];
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(want);
    std::sort(candidates.begin(), candidates.end());
    split.selected_indices[cls] = std::move(candidates);
    split.per_class_counts[cls] = want;
  }
  return split;
}

nlohmann::json to_json(const SplitDescriptor& split) {
  return {{"seed", split.seed},
          {"ir", split.ir},
          {"n_max", split.n_max},
          {"per_class_counts", split.per_class_counts},
          {"selected_indices", split.selected_indices},
          {"manifest_hash", split.manifest_hash}};
}

SplitDescriptor split_from_json(const nlohmann::json& j) {
  SplitDescriptor s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.ir = j.at("ir").get<double>();
  s.n_max = j.at("n_max").get<std::size_t>();
  s.per_class_counts = j.at("per_class_counts").get<ClassCounts>();
  s.selected_indices = j.at("selected_indices").get<std::vector<std::vector<std::size_t>>>();
  s.manifest_hash = j.value("manifest_hash", "");
  if (s.per_class_counts.size() != s.selected_indices.size()) {
    throw Error(Errc::dimension_mismatch, "split descriptor counts/indices length mismatch");
  }
  for (std::size_t c = 0; c < s.per_class_counts.size(); ++c) {
    if (s.per_class_counts[c] != s.selected_indices[c].size()) {
      throw Error(Errc::dimension_mismatch,
                  "split descriptor count for class " + std::to_string(c) + " does not match");
    }
  }
  return s;
}

}  // namespace cue
