#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cue/cues.hpp"
#include "cue/dataset.hpp"
#include "cue/metrics.hpp"
#include "cue/neighbors.hpp"
#include "cue/synthetic.hpp"
#include "cue/trainer.hpp"

namespace cue {

/// Everything an arm needs that does not depend on the arm: the long-tailed
/// training rows, their zero-shot scores, the test rows, and the graph.
struct ExperimentInputs {
  LabeledEmbeddings train;
  Matrix train_zs_scores;
  Matrix prototypes;
  LabeledEmbeddings test;
  NeighborGraph graph;
  ClassCounts train_counts;
};

/// Long-tailed split of a mixture's pool, scored against its prototypes,
/// with the true cluster graph.
ExperimentInputs synthetic_inputs(const synthetic::Mixture& m, std::size_t n_max, double ir,
                                  std::uint64_t split_seed);

/// Training recipe used on the synthetic benchmark: the paper's optimizer
/// settings, zero init, 100 epochs.
TrainConfig benchmark_train_config();

struct Arm {
  std::string name;
  double lambda_zs = 0.0;
  double lambda_llm = 0.0;
  CueMode mode = CueMode::top;
};

/// Table-3 style component arms {neither, VLM, LLM, both} built from the
/// configured weights.
std::vector<Arm> component_arms(double lambda_zs, double lambda_llm);

/// Cue-quality arms {top, random, last}: full objective, only the VLM cue
/// selection changes. The top arm is the plain configured run.
std::vector<Arm> cue_quality_arms(double lambda_zs, double lambda_llm);

struct ArmResult {
  Arm arm;
  std::uint64_t seed = 0;
  EvalReport eval;
  TrainReport train;
};

/// Mines the arm's cues (random mode draws under `seed`), trains, evaluates.
ArmResult run_arm(const ExperimentInputs& in, const Arm& arm, std::size_t k,
                  const TrainConfig& base, std::uint64_t seed, double sigma = kDefaultBalanceSigma);

struct ArmSummary {
  std::string name;
  double all = 0.0;
  SplitValues split;  // mean over seeds; absent if absent for any seed
};

std::vector<ArmSummary> summarize(const std::vector<ArmResult>& results);

nlohmann::json to_json(const std::vector<ArmResult>& results,
                       const std::vector<ArmSummary>& summary);
std::string format_table(const std::vector<ArmSummary>& summary);

}  // namespace cue
