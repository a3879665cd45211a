#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cue/dataset.hpp"

namespace cue {

struct NeighborGraph;

inline constexpr double kDefaultBalanceSigma = 0.1;

/// Mean (over Many/Medium/Few) with a slot per split; std::nullopt marks a split
/// with no classes.
using SplitValues = std::array<std::optional<double>, 3>;

struct EvalReport {
  double overall_acc = 0.0;
  SplitValues split_acc;
  std::vector<double> per_class_acc;
  std::vector<std::size_t> per_class_support;
  std::vector<std::size_t> per_class_wrong;
  std::vector<Shot> shot;
  double balancedness = 1.0;
  SplitValues mean_misclassified;

  std::optional<double> acc(Shot s) const { return split_acc[static_cast<int>(s)]; }
};

EvalReport evaluate(std::span<const std::size_t> predictions, std::span<const Label> labels,
                    const ClassCounts& train_counts, double sigma = kDefaultBalanceSigma);

/// Mean pairwise Gaussian similarity of class accuracies, i = j included.
double balancedness(std::span<const double> per_class_acc, double sigma);

SplitValues mean_misclassified(std::span<const std::size_t> predictions,
                               std::span<const Label> labels, std::span<const Shot> shot_split);

struct TransitionCell {
  std::size_t correct_correct = 0;  // zs right, ft right
  std::size_t correct_wrong = 0;    // zs right, ft wrong
  std::size_t wrong_correct = 0;
  std::size_t wrong_wrong = 0;

  std::size_t total() const noexcept {
    return correct_correct + correct_wrong + wrong_correct + wrong_wrong;
  }
};

struct TransitionReport {
  std::vector<TransitionCell> per_class;
  /// Share of zs-right/ft-wrong errors that land in N(true class).
  std::optional<double> neighbor_error_fraction;

  TransitionCell totals() const;
};

TransitionReport transition_analysis(std::span<const std::size_t> zs_predictions,
                                     std::span<const std::size_t> ft_predictions,
                                     std::span<const Label> labels, const NeighborGraph& graph);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(const TransitionReport& r);

/// Aligned-column text table of the split summary and per-class rows.
std::string format_table(const EvalReport& r, std::span<const std::string> class_names);
std::string format_table(const TransitionReport& r, std::span<const std::string> class_names);

/// class,name,shot,support,accuracy,wrong[,cc,cw,wc,ww]
std::string per_class_csv(const EvalReport& r, std::span<const std::string> class_names,
                          const TransitionReport* transitions = nullptr);

}  // namespace cue
