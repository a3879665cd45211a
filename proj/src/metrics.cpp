#include "cue/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "cue/error.hpp"
#include "cue/neighbors.hpp"

namespace cue {
namespace {

void check_aligned(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(Errc::dimension_mismatch, std::string(what) + ": " + std::to_string(a) + " vs " +
                                              std::to_string(b) + " entries");
  }
}

SplitValues split_means(std::span<const double> values, std::span<const Shot> shot,
                        std::span<const std::size_t> support) {
  std::array<double, 3> sum{};
  std::array<std::size_t, 3> n{};
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (support[c] == 0) continue;
    const auto s = static_cast<int>(shot[c]);
    sum[s] += values[c];
    ++n[s];
  }
  SplitValues out;
  for (int s = 0; s < 3; ++s) {
    if (n[s]) out[s] = sum[s] / static_cast<double>(n[s]);
  }
  return out;
}

nlohmann::json split_json(const SplitValues& v) {
  nlohmann::json j;
  const char* names[] = {"many", "medium", "few"};
  for (int s = 0; s < 3; ++s) j[names[s]] = v[s] ? nlohmann::json(*v[s]) : nlohmann::json(nullptr);
  return j;
}

std::string cell(const std::optional<double>& v, int precision = 4) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

}  // namespace

double balancedness(std::span<const double> acc, double sigma) {
  if (!(sigma > 0.0)) throw Error(Errc::invalid_argument, "sigma must be > 0");
  const std::size_t C = acc.size();
  if (C == 0) return 1.0;
  const double denom = 2.0 * sigma * sigma;
  double sum = 0.0;
  for (std::size_t i = 0; i < C; ++i) {
    for (std::size_t j = 0; j < C; ++j) {
      const double d = acc[i] - acc[j];
      sum += std::exp(-(d * d) / denom);
    }
  }
  return sum / static_cast<double>(C * C);
}

SplitValues mean_misclassified(std::span<const std::size_t> predictions,
                               std::span<const Label> labels, std::span<const Shot> shot_split) {
  check_aligned(predictions.size(), labels.size(), "mean_misclassified");
  std::vector<double> wrong(shot_split.size(), 0.0);
  std::vector<std::size_t> present(shot_split.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= shot_split.size()) {
      throw Error(Errc::label_out_of_range, "test label " + std::to_string(labels[i]) +
                                                " has no shot assignment");
    }
    ++present[labels[i]];
    if (predictions[i] != labels[i]) wrong[labels[i]] += 1.0;
  }
  return split_means(wrong, shot_split, present);
}

EvalReport evaluate(std::span<const std::size_t> predictions, std::span<const Label> labels,
                    const ClassCounts& train_counts, double sigma) {
  check_aligned(predictions.size(), labels.size(), "evaluate");
  const std::size_t C = train_counts.size();
  EvalReport r;
  r.shot = assign_shot_split(train_counts);
  r.per_class_support.assign(C, 0);
  r.per_class_wrong.assign(C, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= C) {
      throw Error(Errc::label_out_of_range, "test label " + std::to_string(labels[i]) +
                                                " is missing from the training counts");
    }
    ++r.per_class_support[labels[i]];
    if (predictions[i] == labels[i]) {
      ++correct;
    } else {
      ++r.per_class_wrong[labels[i]];
    }
  }
  r.overall_acc = labels.empty() ? 0.0 : static_cast<double>(correct) / labels.size();
  r.per_class_acc.assign(C, 0.0);
  std::vector<double> present_acc;
  for (std::size_t c = 0; c < C; ++c) {
    if (r.per_class_support[c] == 0) continue;
    r.per_class_acc[c] = 1.0 - static_cast<double>(r.per_class_wrong[c]) / r.per_class_support[c];
    present_acc.push_back(r.per_class_acc[c]);
  }
  r.split_acc = split_means(r.per_class_acc, r.shot, r.per_class_support);
  r.balancedness = balancedness(present_acc, sigma);
  r.mean_misclassified = mean_misclassified(predictions, labels, r.shot);
  return r;
}

TransitionCell TransitionReport::totals() const {
  TransitionCell t;
  for (const auto& c : per_class) {
    t.correct_correct += c.correct_correct;
    t.correct_wrong += c.correct_wrong;
    t.wrong_correct += c.wrong_correct;
    t.wrong_wrong += c.wrong_wrong;
  }
  return t;
}

TransitionReport transition_analysis(std::span<const std::size_t> zs_predictions,
                                     std::span<const std::size_t> ft_predictions,
                                     std::span<const Label> labels, const NeighborGraph& graph) {
  check_aligned(zs_predictions.size(), labels.size(), "transition_analysis (zero-shot)");
  check_aligned(ft_predictions.size(), labels.size(), "transition_analysis (fine-tuned)");
  TransitionReport r;
  r.per_class.resize(graph.size());
  std::size_t flipped = 0, into_neighbor = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = labels[i];
    if (y >= graph.size()) {
      throw Error(Errc::label_out_of_range, "label " + std::to_string(y) + " outside the graph");
    }
    const bool zs_ok = zs_predictions[i] == y;
    const bool ft_ok = ft_predictions[i] == y;
    auto& cell = r.per_class[y];
    if (zs_ok && ft_ok) {
      ++cell.correct_correct;
    } else if (zs_ok) {
      ++cell.correct_wrong;
      ++flipped;
      if (graph.contains(y, ft_predictions[i])) ++into_neighbor;
    } else if (ft_ok) {
      ++cell.wrong_correct;
    } else {
      ++cell.wrong_wrong;
    }
  }
  if (flipped) r.neighbor_error_fraction = static_cast<double>(into_neighbor) / flipped;
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  std::vector<std::string> shots;
  for (auto s : r.shot) shots.emplace_back(shot_name(s));
  return {{"overall_acc", r.overall_acc},
          {"split_acc", split_json(r.split_acc)},
          {"per_class_acc", r.per_class_acc},
          {"per_class_support", r.per_class_support},
          {"per_class_wrong", r.per_class_wrong},
          {"shot", shots},
          {"balancedness", r.balancedness},
          {"mean_misclassified", split_json(r.mean_misclassified)}};
}

nlohmann::json to_json(const TransitionReport& r) {
  auto rows = nlohmann::json::array();
  for (const auto& c : r.per_class) {
    rows.push_back({{"zs_correct_ft_correct", c.correct_correct},
                    {"zs_correct_ft_wrong", c.correct_wrong},
                    {"zs_wrong_ft_correct", c.wrong_correct},
                    {"zs_wrong_ft_wrong", c.wrong_wrong}});
  }
  const auto t = r.totals();
  return {{"per_class", rows},
          {"totals",
           {{"zs_correct_ft_correct", t.correct_correct},
            {"zs_correct_ft_wrong", t.correct_wrong},
            {"zs_wrong_ft_correct", t.wrong_correct},
            {"zs_wrong_ft_wrong", t.wrong_wrong}}},
          {"neighbor_error_fraction", r.neighbor_error_fraction
                                          ? nlohmann::json(*r.neighbor_error_fraction)
                                          : nlohmann::json(nullptr)}};
}

std::string format_table(const EvalReport& r, std::span<const std::string> class_names) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "split" << std::right << std::setw(10) << "acc"
     << std::setw(12) << "mean_wrong" << "\n";
  os << std::left << std::setw(10) << "all" << std::right << std::setw(10)
     << cell(r.overall_acc) << std::setw(12) << "" << "\n";
  for (auto s : {Shot::Many, Shot::Medium, Shot::Few}) {
    const auto i = static_cast<int>(s);
    os << std::left << std::setw(10) << shot_name(s) << std::right << std::setw(10)
       << cell(r.split_acc[i]) << std::setw(12) << cell(r.mean_misclassified[i], 2) << "\n";
  }
  os << "balancedness " << cell(r.balancedness) << "\n\n";

  std::size_t width = 5;
  for (const auto& n : class_names) width = std::max(width, n.size());
  os << std::right << std::setw(5) << "id" << "  " << std::left << std::setw(static_cast<int>(width))
     << "class" << std::right << std::setw(8) << "shot" << std::setw(9) << "support"
     << std::setw(10) << "acc" << "\n";
  for (std::size_t c = 0; c < r.per_class_acc.size(); ++c) {
    os << std::right << std::setw(5) << c << "  " << std::left << std::setw(static_cast<int>(width))
       << (c < class_names.size() ? class_names[c] : "") << std::right << std::setw(8)
       << shot_name(r.shot[c]) << std::setw(9) << r.per_class_support[c] << std::setw(10)
       << cell(r.per_class_acc[c]) << "\n";
  }
  return os.str();
}

std::string format_table(const TransitionReport& r, std::span<const std::string> class_names) {
  std::size_t width = 5;
  for (const auto& n : class_names) width = std::max(width, n.size());
  std::ostringstream os;
  os << std::right << std::setw(5) << "id" << "  " << std::left << std::setw(static_cast<int>(width))
     << "class" << std::right << std::setw(7) << "cc" << std::setw(7) << "cw" << std::setw(7)
     << "wc" << std::setw(7) << "ww" << "\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const auto& t = r.per_class[c];
    os << std::right << std::setw(5) << c << "  " << std::left << std::setw(static_cast<int>(width))
       << (c < class_names.size() ? class_names[c] : "") << std::right << std::setw(7)
       << t.correct_correct << std::setw(7) << t.correct_wrong << std::setw(7) << t.wrong_correct
       << std::setw(7) << t.wrong_wrong << "\n";
  }
  const auto t = r.totals();
  os << std::right << std::setw(5) << "" << "  " << std::left << std::setw(static_cast<int>(width))
     << "total" << std::right << std::setw(7) << t.correct_correct << std::setw(7)
     << t.correct_wrong << std::setw(7) << t.wrong_correct << std::setw(7) << t.wrong_wrong << "\n";
  os << "zs-correct -> ft-wrong errors into LLM neighbors: "
     << cell(r.neighbor_error_fraction) << "\n";
  return os.str();
}

std::string per_class_csv(const EvalReport& r, std::span<const std::string> class_names,
                          const TransitionReport* transitions) {
  std::ostringstream os;
  os << "class,name,shot,support,accuracy,wrong";
  if (transitions) os << ",zs_correct_ft_correct,zs_correct_ft_wrong,zs_wrong_ft_correct,zs_wrong_ft_wrong";
  os << "\n" << std::setprecision(17);
  for (std::size_t c = 0; c < r.per_class_acc.size(); ++c) {
    os << c << "," << (c < class_names.size() ? class_names[c] : "") << "," << shot_name(r.shot[c])
       << "," << r.per_class_support[c] << "," << r.per_class_acc[c] << "," << r.per_class_wrong[c];
    if (transitions && c < transitions->per_class.size()) {
      const auto& t = transitions->per_class[c];
      os << "," << t.correct_correct << "," << t.correct_wrong << "," << t.wrong_correct << ","
         << t.wrong_wrong;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace cue
