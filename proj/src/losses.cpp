#include "cue/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cue/error.hpp"

namespace cue {

void LossConfig::validate() const {
  if (!std::isfinite(tau) || !std::isfinite(tau_b)) {
    throw Error(Errc::invalid_argument, "loss temperatures must be finite");
  }
  if (!(lambda_zs >= 0.0) || !(lambda_llm >= 0.0) || !std::isfinite(lambda_zs) ||
      !std::isfinite(lambda_llm)) {
    throw Error(Errc::invalid_argument, "cue loss weights must be finite and >= 0");
  }
}

nlohmann::json to_json(const LossConfig& c) {
  return {{"tau", c.tau}, {"tau_b", c.tau_b}, {"lambda_zs", c.lambda_zs}, {"lambda_llm", c.lambda_llm}};
}

LossConfig loss_config_from_json(const nlohmann::json& j) {
  LossConfig c;
  c.tau = j.value("tau", c.tau);
  c.tau_b = j.value("tau_b", c.tau_b);
  c.lambda_zs = j.value("lambda_zs", c.lambda_zs);
  c.lambda_llm = j.value("lambda_llm", c.lambda_llm);
  c.validate();
  return c;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_inputs(std::span<const double> logits, std::span<const double> pi, std::size_t other,
                  const char* what) {
  if (logits.empty() || logits.size() != pi.size() || logits.size() != other) {
    throw Error(Errc::dimension_mismatch, std::string(what) + ": logits, prior and target sizes differ");
  }
  for (double v : logits) {
    if (!std::isfinite(v)) throw Error(Errc::non_finite, std::string(what) + ": non-finite logit");
  }
  for (double p : pi) {
    if (!(p > 0.0)) throw Error(Errc::invalid_argument, std::string(what) + ": prior must be > 0");
  }
}

template <typename Target>
ScalarGrad bla_impl(std::span<const double> logits, std::span<const Target> target,
                    std::span<const double> pi, double tau_b) {
  check_inputs(logits, pi, target.size(), "bla_loss");
  const auto C = logits.size();
  const double inv_c = 1.0 / static_cast<double>(C);
  ScalarGrad out;
  out.grad.resize(C);
  double sum = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    const double z = logits[c] + tau_b * std::log(pi[c]);
    const double t = static_cast<double>(target[c]);
    // -[t log s(z) + (1-t) log(1-s(z))] = softplus(z) - t z
    sum += softplus(z) - t * z;
    out.grad[c] = (sigmoid(z) - t) * inv_c;
  }
  out.loss = sum * inv_c;
  return out;
}

}  // namespace

ScalarGrad la_loss(std::span<const double> logits, std::size_t y, std::span<const double> pi,
                   double tau) {
  check_inputs(logits, pi, logits.size(), "la_loss");
  const auto C = logits.size();
  if (y >= C) throw Error(Errc::label_out_of_range, "la_loss: label out of range");
  std::vector<double> adj(C);
  for (std::size_t c = 0; c < C; ++c) adj[c] = logits[c] + tau * std::log(pi[c]);
  const double m = *std::max_element(adj.begin(), adj.end());
  double z = 0.0;
  for (double v : adj) z += std::exp(v - m);
  const double lse = m + std::log(z);

  ScalarGrad out;
  out.loss = lse - adj[y];
  out.grad.resize(C);
  for (std::size_t c = 0; c < C; ++c) out.grad[c] = std::exp(adj[c] - lse);
  out.grad[y] -= 1.0;
  return out;
}

ScalarGrad bla_loss(std::span<const double> logits, std::span<const std::uint8_t> target,
                    std::span<const double> pi, double tau_b) {
  return bla_impl(logits, target, pi, tau_b);
}

ScalarGrad bla_loss(std::span<const double> logits, std::span<const double> target,
                    std::span<const double> pi, double tau_b) {
  return bla_impl(logits, target, pi, tau_b);
}

LossValue cue_loss(std::span<const double> logits, std::size_t y,
                   std::span<const std::uint8_t> t_zs, std::span<const std::uint8_t> t_llm,
                   std::span<const double> pi, const LossConfig& config) {
  auto la = la_loss(logits, y, pi, config.tau);
  LossValue out;
  out.la = la.loss;
  out.grad = std::move(la.grad);
  out.total = out.la;

  const auto add_term = [&](std::span<const std::uint8_t> target, double weight, double& slot) {
    if (target.empty()) return;
    if (y >= target.size() || target[y] != 1) {
      throw Error(Errc::invalid_argument, "cue target is missing its ground-truth class");
    }
    auto term = bla_loss(logits, target, pi, config.tau_b);
    slot = term.loss;
    out.total += weight * term.loss;
    for (std::size_t c = 0; c < out.grad.size(); ++c) out.grad[c] += weight * term.grad[c];
  };
  add_term(t_zs, config.lambda_zs, out.bla_zs);
  add_term(t_llm, config.lambda_llm, out.bla_llm);
  return out;
}

}  // namespace cue
