#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "cue/dataset.hpp"

namespace cue {

struct LossConfig {
  double tau = 1.0;        // LA prior temperature
  double tau_b = 1.0;      // BLA prior temperature
  double lambda_zs = 0.5;  // weight of the VLM instance-level cue term
  double lambda_llm = 0.5; // weight of the LLM class-level cue term

  void validate() const;
};

nlohmann::json to_json(const LossConfig& c);
LossConfig loss_config_from_json(const nlohmann::json& j);

struct ScalarGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Logit-adjusted softmax cross-entropy on theta + tau * log(pi).
/// Gradient w.r.t. theta is softmax(theta') - onehot(y).
ScalarGrad la_loss(std::span<const double> logits, std::size_t y, std::span<const double> pi,
                   double tau);

/// Logit-adjusted binary cross-entropy, averaged over the C classes.
/// Gradient is (sigmoid(theta~) - t) / C.
ScalarGrad bla_loss(std::span<const double> logits, std::span<const std::uint8_t> target,
                    std::span<const double> pi, double tau_b);

/// Real-valued target variant, used to build stationary test inputs.
ScalarGrad bla_loss(std::span<const double> logits, std::span<const double> target,
                    std::span<const double> pi, double tau_b);

struct LossValue {
  double total = 0.0;
  double la = 0.0;
  double bla_zs = 0.0;
  double bla_llm = 0.0;
  std::vector<double> grad;
};

/// total = la + lambda_zs * bla_zs + lambda_llm * bla_llm, gradient likewise.
/// A term with zero weight is skipped (its component value reads 0).
LossValue cue_loss(std::span<const double> logits, std::size_t y,
                   std::span<const std::uint8_t> t_zs, std::span<const std::uint8_t> t_llm,
                   std::span<const double> pi, const LossConfig& config);

/// Stable log(1 + exp(x)).
double softplus(double x);
double sigmoid(double x);

}  // namespace cue
