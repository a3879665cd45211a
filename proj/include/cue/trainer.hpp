#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cue/cues.hpp"
#include "cue/dataset.hpp"
#include "cue/losses.hpp"
#include "cue/matrix.hpp"

namespace cue {

/// Classification head over frozen embeddings. With hidden_width == 0 it is
/// the linear map W x + b; otherwise W2 relu(W1 x + b1) + b2.
struct HeadModel {
  Matrix w;                  // C x D, or C x H with a hidden layer
  std::vector<float> b;      // C
  Matrix w_hidden;           // H x D (empty for the linear head)
  std::vector<float> b_hidden;

  std::size_t num_classes() const noexcept { return w.rows(); }
  std::size_t input_dim() const noexcept { return hidden() ? w_hidden.cols() : w.cols(); }
  bool hidden() const noexcept { return !w_hidden.empty(); }

  /// n x C logits for an n x D row block.
  std::vector<double> logits(std::span<const double> x, std::size_t n) const;
  std::vector<double> logits(const Matrix& x) const;

  friend bool operator==(const HeadModel&, const HeadModel&) = default;
};

/// Per-sample loss gradient pushed back through the head, averaged over the
/// block. Gradients are laid out like the parameters they belong to.
struct HeadGradient {
  std::vector<double> w, b, w_hidden, b_hidden;
};

enum class HeadInit { zero, prototype };

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::size_t batch_size = 128;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  LossConfig loss;
  HeadInit init = HeadInit::prototype;
  double init_scale = 1.0;
  std::size_t hidden_width = 0;

  void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct EpochLoss {
  double total = 0.0, la = 0.0, bla_zs = 0.0, bla_llm = 0.0;
};

struct TrainReport {
  std::vector<EpochLoss> history;
  HeadModel model;
  double wall_seconds = 0.0;
  std::string config_hash;
  TrainConfig config;
};

nlohmann::json to_json(const TrainReport& r);  // excludes the model weights

/// 0.5 * lr0 * (1 + cos(pi * t / T)).
double cosine_lr(double lr0, std::size_t step, std::size_t total_steps);

/// Coupled-L2 SGD with momentum: g' = g + wd * w; v = mu * v + g'; w -= lr * v.
void sgd_step(std::span<float> params, std::span<const double> grads, std::span<double> velocity,
              double lr, double momentum, double weight_decay);

HeadModel init_head(std::size_t num_classes, std::size_t dim, const TrainConfig& config,
                    const Matrix* prototypes);

/// Mean-over-block loss and parameter gradients for the rows `rows` of `x`.
LossValue batch_loss(const HeadModel& model, const Matrix& x, std::span<const std::size_t> rows,
                     std::span<const Label> labels, const CueTargets& t_zs,
                     const CueTargets& t_llm, std::span<const double> pi,
                     const LossConfig& config, HeadGradient* grad);

TrainReport train(const LabeledEmbeddings& data, const ClassPrior& prior, const CueTargets& t_zs,
                  const CueTargets& t_llm, const TrainConfig& config,
                  const Matrix* prototypes = nullptr);

std::vector<std::size_t> predict(const HeadModel& model, const Matrix& embeddings);

/// SHA-256 over the encoded parameter tensors; equal digests mean bitwise
/// equal weights.
std::string model_digest(const HeadModel& model);

/// Model header JSON plus one tensor file per parameter array.
void save_model(const std::filesystem::path& dir, const HeadModel& model,
                const nlohmann::json& header);
HeadModel load_model(const std::filesystem::path& dir);

}  // namespace cue
