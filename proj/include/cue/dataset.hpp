#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cue/matrix.hpp"

namespace cue {

using Label = std::uint32_t;

/// N feature rows with labels in [0, C) and a duplicate-free class vocabulary.
struct LabeledEmbeddings {
  Matrix features;
  std::vector<Label> labels;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }
  std::size_t dim() const noexcept { return features.cols(); }

  /// Throws if any invariant is violated (label range, row count, D > 0, names).
  void validate() const;

  /// Subset in the order given by `indices`.
  LabeledEmbeddings subset(std::span<const std::size_t> indices) const;
};

using ClassCounts = std::vector<std::size_t>;

ClassCounts count_labels(std::span<const Label> labels, std::size_t num_classes);

/// Empirical class prior pi_c = n_c / sum_j n_j.
struct ClassPrior {
  std::vector<double> pi;

  std::size_t size() const noexcept { return pi.size(); }
};

ClassPrior compute_prior(const ClassCounts& counts);

enum class Shot { Many, Medium, Few };

const char* shot_name(Shot s);

inline constexpr std::size_t kManyShotAbove = 100;
inline constexpr std::size_t kFewShotBelow = 20;

/// Many: count > 100. Medium: 20..100 inclusive. Few: count < 20.
Shot shot_of(std::size_t count);
std::vector<Shot> assign_shot_split(const ClassCounts& counts);

/// Per-class target sizes of the exponential long-tail profile,
/// n_c = round(n_max * ir^(-c/(C-1))), in profile order (largest first).
std::vector<std::size_t> longtail_profile(std::size_t num_classes, std::size_t n_max, double ir);

/// Long-tailed subset of a labelled pool.
struct SplitDescriptor {
  std::uint64_t seed = 0;
  double ir = 1.0;
  std::size_t n_max = 0;
  ClassCounts per_class_counts;
  /// selected_indices[c] holds pool row indices chosen for class c, ascending.
  std::vector<std::vector<std::size_t>> selected_indices;
  /// Hash of the pool manifest the indices refer to (empty if unknown).
  std::string manifest_hash;

  /// All selected pool indices, ascending. This is the training row order.
  std::vector<std::size_t> flat_indices() const;
};

/// Builds the per-class selection. Profile position is assigned by
/// descending pool size (ties by class index); sampling is without
/// replacement from a generator owned by this call.
SplitDescriptor build_longtail_indices(std::span<const Label> labels, std::size_t num_classes,
                                       std::size_t n_max, double ir, std::uint64_t seed);

nlohmann::json to_json(const SplitDescriptor& split);
SplitDescriptor split_from_json(const nlohmann::json& j);

}  // namespace cue
