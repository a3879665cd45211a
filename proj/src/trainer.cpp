#include "cue/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include "cue/error.hpp"
#include "cue/hash.hpp"
#include "cue/kernels.hpp"
#include "cue/tensorio.hpp"

namespace cue {
namespace {

std::vector<double> to_block(const Matrix& x, std::span<const std::size_t> rows) {
  const std::size_t d = x.cols();
  std::vector<double> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  return out;
}

std::vector<double> to_block(const Matrix& x) {
  std::vector<std::size_t> all(x.rows());
  std::iota(all.begin(), all.end(), 0);
  return to_block(x, all);
}

void relu_inplace(std::vector<double>& v) {
  for (auto& x : v) x = x > 0.0 ? x : 0.0;
}

}  // namespace

std::vector<double> HeadModel::logits(std::span<const double> x, std::size_t n) const {
  if (!hidden()) return kernels::affine(x, n, w, b);
  auto h = kernels::affine(x, n, w_hidden, b_hidden);
  relu_inplace(h);
  return kernels::affine(h, n, w, b);
}

std::vector<double> HeadModel::logits(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw Error(Errc::dimension_mismatch, "embeddings have dim " + std::to_string(x.cols()) +
                                              ", head expects " + std::to_string(input_dim()));
  }
  const auto block = to_block(x);
  return logits(block, x.rows());
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw Error(Errc::invalid_argument, "lr0 must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(Errc::invalid_argument, "momentum must be in [0, 1)");
  }
  if (!(weight_decay >= 0.0)) throw Error(Errc::invalid_argument, "weight_decay must be >= 0");
  if (batch_size == 0) throw Error(Errc::invalid_argument, "batch_size must be >= 1");
  loss.validate();
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr0", c.lr0},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"loss", to_json(c.loss)},
          {"init", c.init == HeadInit::zero ? "zero" : "prototype"},
          {"init_scale", c.init_scale},
          {"hidden_width", c.hidden_width}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.lr0 = j.value("lr0", c.lr0);
  c.momentum = j.value("momentum", c.momentum);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  if (j.contains("loss")) c.loss = loss_config_from_json(j.at("loss"));
  const auto init = j.value("init", std::string("prototype"));
  if (init == "zero") {
    c.init = HeadInit::zero;
  } else if (init == "prototype") {
    c.init = HeadInit::prototype;
  } else {
    throw Error(Errc::invalid_argument, "init must be 'zero' or 'prototype', got '" + init + "'");
  }
  c.init_scale = j.value("init_scale", c.init_scale);
  c.hidden_width = j.value("hidden_width", c.hidden_width);
  c.validate();
  return c;
}

nlohmann::json to_json(const TrainReport& r) {
  auto hist = nlohmann::json::array();
  for (const auto& e : r.history) {
    hist.push_back({{"total", e.total}, {"la", e.la}, {"bla_zs", e.bla_zs}, {"bla_llm", e.bla_llm}});
  }
  return {{"history", hist},
          {"wall_seconds", r.wall_seconds},
          {"config_hash", r.config_hash},
          {"config", to_json(r.config)}};
}

double cosine_lr(double lr0, std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) return lr0;
  const double frac = static_cast<double>(std::min(step, total_steps)) /
                      static_cast<double>(total_steps);
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * frac));
}

void sgd_step(std::span<float> params, std::span<const double> grads, std::span<double> velocity,
              double lr, double momentum, double weight_decay) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    throw Error(Errc::dimension_mismatch, "sgd_step: parameter, gradient and velocity sizes differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i] + weight_decay * params[i];
    velocity[i] = momentum * velocity[i] + g;
    params[i] = static_cast<float>(params[i] - lr * velocity[i]);
  }
}

HeadModel init_head(std::size_t num_classes, std::size_t dim, const TrainConfig& config,
                    const Matrix* prototypes) {
  HeadModel m;
  if (config.hidden_width > 0) {
    // Hidden layer: He-normal input weights, zero output layer.
    m.w_hidden = Matrix(config.hidden_width, dim);
    m.b_hidden.assign(config.hidden_width, 0.0f);
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, std::sqrt(2.0 / static_cast<double>(dim)));
    for (auto& v : m.w_hidden.data()) v = static_cast<float>(gauss(rng));
    m.w = Matrix(num_classes, config.hidden_width);
    m.b.assign(num_classes, 0.0f);
    return m;
  }
  m.w = Matrix(num_classes, dim);
  m.b.assign(num_classes, 0.0f);
  if (config.init == HeadInit::prototype) {
    if (!prototypes || prototypes->rows() != num_classes || prototypes->cols() != dim) {
      throw Error(Errc::dimension_mismatch, "prototype init needs a " + std::to_string(num_classes) +
                                                " x " + std::to_string(dim) + " prototype matrix");
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      auto p = prototypes->row(c);
      double sq = 0.0;
      for (float v : p) sq += static_cast<double>(v) * v;
      if (!(sq > 0.0)) throw Error(Errc::zero_norm_row, "prototype row " + std::to_string(c) + " is zero");
      const double s = config.init_scale / std::sqrt(sq);
      auto dst = m.w.row(c);
      for (std::size_t k = 0; k < dim; ++k) dst[k] = static_cast<float>(p[k] * s);
    }
  }
  return m;
}

LossValue batch_loss(const HeadModel& model, const Matrix& x, std::span<const std::size_t> rows,
                     std::span<const Label> labels, const CueTargets& t_zs,
                     const CueTargets& t_llm, std::span<const double> pi,
                     const LossConfig& config, HeadGradient* grad) {
  const std::size_t n = rows.size();
  const std::size_t C = model.num_classes();
  if (x.cols() != model.input_dim()) {
    throw Error(Errc::dimension_mismatch, "batch_loss: input dim does not match the head");
  }
  const auto xb = to_block(x, rows);

  std::vector<double> pre, hid;
  std::vector<double> logits;
  if (model.hidden()) {
    pre = kernels::affine(xb, n, model.w_hidden, model.b_hidden);
    hid = pre;
    relu_inplace(hid);
    logits = kernels::affine(hid, n, model.w, model.b);
  } else {
    logits = kernels::affine(xb, n, model.w, model.b);
  }

  std::vector<LossValue> per(n);
  std::exception_ptr failure;
  const bool use_zs = config.lambda_zs != 0.0 && t_zs.size() > 0;
  const bool use_llm = config.lambda_llm != 0.0 && t_llm.size() > 0;
  const auto rows_n = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (rows_n * static_cast<std::int64_t>(C) > 8192)
  for (std::int64_t ii = 0; ii < rows_n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto r = rows[i];
    std::span<const double> li(logits.data() + i * C, C);
    try {
      per[i] = cue_loss(li, labels[r], use_zs ? t_zs.row(r) : std::span<const std::uint8_t>{},
                        use_llm ? t_llm.row(r) : std::span<const std::uint8_t>{}, pi, config);
    } catch (...) {
#pragma omp critical(cue_batch_loss_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  LossValue mean;
  const double inv_n = n ? 1.0 / static_cast<double>(n) : 0.0;
  for (const auto& p : per) {
    mean.total += p.total;
    mean.la += p.la;
    mean.bla_zs += p.bla_zs;
    mean.bla_llm += p.bla_llm;
  }
  mean.total *= inv_n;
  mean.la *= inv_n;
  mean.bla_zs *= inv_n;
  mean.bla_llm *= inv_n;

  if (!grad || n == 0) return mean;

  std::vector<double> g(n * C);
  for (std::size_t i = 0; i < n; ++i) std::copy(per[i].grad.begin(), per[i].grad.end(), g.begin() + static_cast<std::ptrdiff_t>(i * C));

  grad->w.assign(model.w.rows() * model.w.cols(), 0.0);
  grad->b.assign(C, 0.0);
  if (!model.hidden()) {
    kernels::outer_accumulate(g, xb, n, inv_n, grad->w, grad->b);
    grad->w_hidden.clear();
    grad->b_hidden.clear();
    return mean;
  }

  kernels::outer_accumulate(g, hid, n, inv_n, grad->w, grad->b);
  const std::size_t H = model.w_hidden.rows();
  std::vector<double> dh(n * H, 0.0);
#pragma omp parallel for schedule(static) if (rows_n * static_cast<std::int64_t>(H * C) > 8192)
  for (std::int64_t ii = 0; ii < rows_n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t h = 0; h < H; ++h) {
      if (!(pre[i * H + h] > 0.0)) continue;
      double acc = 0.0;
      for (std::size_t c = 0; c < C; ++c) acc += g[i * C + c] * model.w(c, h);
      dh[i * H + h] = acc;
    }
  }
  grad->w_hidden.assign(H * model.w_hidden.cols(), 0.0);
  grad->b_hidden.assign(H, 0.0);
  kernels::outer_accumulate(dh, xb, n, inv_n, grad->w_hidden, grad->b_hidden);
  return mean;
}

TrainReport train(const LabeledEmbeddings& data, const ClassPrior& prior, const CueTargets& t_zs,
                  const CueTargets& t_llm, const TrainConfig& config, const Matrix* prototypes) {
  config.validate();
  data.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t N = data.size();
  const std::size_t C = data.num_classes();
  if (prior.size() != C) {
    throw Error(Errc::dimension_mismatch, "prior has " + std::to_string(prior.size()) +
                                              " classes, dataset " + std::to_string(C));
  }
  for (const auto* t : {&t_zs, &t_llm}) {
    if (t->size() != 0 && (t->size() != N || t->num_classes != C)) {
      throw Error(Errc::dimension_mismatch, "cue targets are not aligned with the training rows");
    }
  }

  TrainReport report;
  report.config = config;
  report.config_hash = sha256_hex(to_json(config).dump());
  report.model = init_head(C, data.dim(), config, prototypes);
  HeadModel& model = report.model;

  std::vector<double> vel_w(model.w.rows() * model.w.cols(), 0.0), vel_b(C, 0.0);
  std::vector<double> vel_wh(model.w_hidden.rows() * model.w_hidden.cols(), 0.0),
      vel_bh(model.b_hidden.size(), 0.0);

  const std::size_t steps_per_epoch = (N + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.epochs;
  std::vector<std::size_t> order(N);
  HeadGradient grad;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);

    EpochLoss acc;
    for (std::size_t start = 0; start < N; start += config.batch_size, ++step) {
      const auto end = std::min(N, start + config.batch_size);
      std::span<const std::size_t> rows(order.data() + start, end - start);
      LossValue loss;
      try {
        loss = batch_loss(model, data.features, rows, data.labels, t_zs, t_llm, prior.pi,
                          config.loss, &grad);
      } catch (const Error& e) {
        if (e.code() != Errc::non_finite) throw;
        throw Error(Errc::non_finite, std::string(e.what()) + " at step " + std::to_string(step));
      }
      if (!std::isfinite(loss.total)) {
        throw Error(Errc::non_finite, "non-finite loss at step " + std::to_string(step));
      }
      const double w = static_cast<double>(rows.size());
      acc.total += loss.total * w;
      acc.la += loss.la * w;
      acc.bla_zs += loss.bla_zs * w;
      acc.bla_llm += loss.bla_llm * w;

      const double lr = cosine_lr(config.lr0, step, total_steps);
      sgd_step(model.w.data(), grad.w, vel_w, lr, config.momentum, config.weight_decay);
      sgd_step(model.b, grad.b, vel_b, lr, config.momentum, 0.0);
      if (model.hidden()) {
        sgd_step(model.w_hidden.data(), grad.w_hidden, vel_wh, lr, config.momentum,
                 config.weight_decay);
        sgd_step(model.b_hidden, grad.b_hidden, vel_bh, lr, config.momentum, 0.0);
      }
    }
    const double inv = 1.0 / static_cast<double>(N);
    report.history.push_back({acc.total * inv, acc.la * inv, acc.bla_zs * inv, acc.bla_llm * inv});
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<std::size_t> predict(const HeadModel& model, const Matrix& embeddings) {
  return kernels::argmax_rows(model.logits(embeddings), model.num_classes());
}

std::string model_digest(const HeadModel& model) {
  std::string bytes;
  const auto append = [&](const Matrix& m) {
    const auto enc = tensorio::encode_tensor(m);
    bytes.append(enc.begin(), enc.end());
  };
  append(model.w);
  append(Matrix(model.b.size(), 1, model.b));
  append(model.w_hidden);
  append(Matrix(model.b_hidden.size(), 1, model.b_hidden));
  return sha256_hex(bytes);
}

void save_model(const std::filesystem::path& dir, const HeadModel& model,
                const nlohmann::json& header) {
  std::filesystem::create_directories(dir);
  nlohmann::json h = header;
  h["format"] = "cue-head-v1";
  h["num_classes"] = model.num_classes();
  h["input_dim"] = model.input_dim();
  h["hidden_width"] = model.hidden() ? model.w_hidden.rows() : 0;
  tensorio::write_tensor(dir / "W.cuet", model.w);
  tensorio::write_tensor(dir / "b.cuet", Matrix(model.b.size(), 1, model.b));
  if (model.hidden()) {
    tensorio::write_tensor(dir / "W_hidden.cuet", model.w_hidden);
    tensorio::write_tensor(dir / "b_hidden.cuet", Matrix(model.b_hidden.size(), 1, model.b_hidden));
  }
  std::ofstream out(dir / "model.json", std::ios::trunc);
  if (!out) throw Error(Errc::io_missing_file, "cannot write " + (dir / "model.json").string());
  out << h.dump(2) << "\n";
}

HeadModel load_model(const std::filesystem::path& dir) {
  const auto header_path = dir / "model.json";
  std::ifstream in(header_path);
  if (!in) throw Error(Errc::io_missing_file, "cannot open " + header_path.string());
  const auto h = nlohmann::json::parse(in);
  HeadModel m;
  m.w = tensorio::read_tensor(dir / "W.cuet");
  const auto b = tensorio::read_tensor(dir / "b.cuet");
  m.b.assign(b.data().begin(), b.data().end());
  if (h.value("hidden_width", 0) > 0) {
    m.w_hidden = tensorio::read_tensor(dir / "W_hidden.cuet");
    const auto bh = tensorio::read_tensor(dir / "b_hidden.cuet");
    m.b_hidden.assign(bh.data().begin(), bh.data().end());
  }
  if (m.b.size() != m.w.rows() || (m.hidden() && m.b_hidden.size() != m.w_hidden.rows()) ||
      (m.hidden() && m.w.cols() != m.w_hidden.rows())) {
    throw Error(Errc::dimension_mismatch, "model tensors in " + dir.string() + " are inconsistent");
  }
  return m;
}

}  // namespace cue
