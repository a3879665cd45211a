#include "cue/experiment.hpp"

#include <iomanip>
#include <map>
#include <sstream>

namespace cue {

ExperimentInputs synthetic_inputs(const synthetic::Mixture& m, std::size_t n_max, double ir,
                                  std::uint64_t split_seed) {
  const auto split =
      build_longtail_indices(m.pool.labels, m.pool.num_classes(), n_max, ir, split_seed);
  ExperimentInputs in;
  in.train = m.pool.subset(split.flat_indices());
  in.train_counts = split.per_class_counts;
  in.prototypes = m.prototypes;
  in.train_zs_scores = zero_shot_logits(in.train.features, m.prototypes);
  in.test = m.test;
  in.graph = m.cluster_graph;
  return in;
}

TrainConfig benchmark_train_config() {
  TrainConfig c;
  c.epochs = 100;
  c.init = HeadInit::zero;
  return c;
}

std::vector<Arm> component_arms(double lambda_zs, double lambda_llm) {
  return {{"baseline", 0.0, 0.0, CueMode::top},
          {"vlm", lambda_zs, 0.0, CueMode::top},
          {"llm", 0.0, lambda_llm, CueMode::top},
          {"vlm+llm", lambda_zs, lambda_llm, CueMode::top}};
}

std::vector<Arm> cue_quality_arms(double lambda_zs, double lambda_llm) {
  return {{"top", lambda_zs, lambda_llm, CueMode::top},
          {"random", lambda_zs, lambda_llm, CueMode::random},
          {"last", lambda_zs, lambda_llm, CueMode::last}};
}

ArmResult run_arm(const ExperimentInputs& in, const Arm& arm, std::size_t k,
                  const TrainConfig& base, std::uint64_t seed, double sigma) {
  const auto C = in.train.num_classes();
  const auto cues = variant_cues(in.train_zs_scores, in.train.labels, k, arm.mode, seed);
  const auto t_zs = expand_targets_zs(cues.cues, in.train.labels, C);
  const auto t_llm = expand_targets_llm(in.graph, in.train.labels, C);

  TrainConfig cfg = base;
  cfg.seed = seed;
  cfg.loss.lambda_zs = arm.lambda_zs;
  cfg.loss.lambda_llm = arm.lambda_llm;

  ArmResult r;
  r.arm = arm;
  r.seed = seed;
  r.train = train(in.train, compute_prior(in.train_counts), t_zs, t_llm, cfg, &in.prototypes);
  const auto pred = predict(r.train.model, in.test.features);
  r.eval = evaluate(pred, in.test.labels, in.train_counts, sigma);
  return r;
}

std::vector<ArmSummary> summarize(const std::vector<ArmResult>& results) {
  std::vector<ArmSummary> out;
  std::map<std::string, std::size_t> slot;
  std::vector<std::size_t> n;
  std::vector<std::array<std::size_t, 3>> present;
  for (const auto& r : results) {
    auto [it, inserted] = slot.emplace(r.arm.name, out.size());
    if (inserted) {
      out.push_back({r.arm.name, 0.0, {0.0, 0.0, 0.0}});
      n.push_back(0);
      present.push_back({0, 0, 0});
    }
    auto& s = out[it->second];
    ++n[it->second];
    s.all += r.eval.overall_acc;
    for (int i = 0; i < 3; ++i) {
      if (r.eval.split_acc[i]) {
        *s.split[i] += *r.eval.split_acc[i];
        ++present[it->second][i];
      }
    }
  }
  for (std::size_t a = 0; a < out.size(); ++a) {
    out[a].all /= static_cast<double>(n[a]);
    for (int i = 0; i < 3; ++i) {
      if (present[a][i] == n[a]) {
        *out[a].split[i] /= static_cast<double>(n[a]);
      } else {
        out[a].split[i].reset();
      }
    }
  }
  return out;
}

nlohmann::json to_json(const std::vector<ArmResult>& results,
                       const std::vector<ArmSummary>& summary) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  auto rows = nlohmann::json::array();
  for (const auto& r : results) {
    rows.push_back({{"arm", r.arm.name},
                    {"seed", r.seed},
                    {"lambda_zs", r.arm.lambda_zs},
                    {"lambda_llm", r.arm.lambda_llm},
                    {"mode", cue_mode_name(r.arm.mode)},
                    {"all", r.eval.overall_acc},
                    {"many", opt(r.eval.split_acc[0])},
                    {"medium", opt(r.eval.split_acc[1])},
                    {"few", opt(r.eval.split_acc[2])},
                    {"balancedness", r.eval.balancedness},
                    {"model_digest", model_digest(r.train.model)}});
  }
  auto mean = nlohmann::json::array();
  for (const auto& s : summary) {
    mean.push_back({{"arm", s.name}, {"all", s.all}, {"many", opt(s.split[0])},
                    {"medium", opt(s.split[1])}, {"few", opt(s.split[2])}});
  }
  return {{"rows", rows}, {"mean", mean}};
}

std::string format_table(const std::vector<ArmSummary>& summary) {
  const auto pct = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << 100.0 * *v;
    return os.str();
  };
  std::ostringstream os;
  os << std::left << std::setw(12) << "arm" << std::right << std::setw(8) << "All" << std::setw(8)
     << "Many" << std::setw(8) << "Med." << std::setw(8) << "Few" << "\n";
  for (const auto& s : summary) {
    os << std::left << std::setw(12) << s.name << std::right << std::setw(8) << pct(s.all)
       << std::setw(8) << pct(s.split[0]) << std::setw(8) << pct(s.split[1]) << std::setw(8)
       << pct(s.split[2]) << "\n";
  }
  return os.str();
}

}  // namespace cue
