#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "cue/neighbors.hpp"
#include "cue/tensorio.hpp"
#include "cue/trainer.hpp"
#include "support.hpp"

using namespace cue;
using cue::test::code_of;
using cue::test::scratch_dir;
using doctest::Approx;

namespace {

// Two Gaussian blobs far apart along the first axis.
LabeledEmbeddings separable(std::size_t per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> nd(0, 0.3f);
  LabeledEmbeddings d;
  d.class_names = {"left", "right"};
  d.features = Matrix(2 * per_class, 4);
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const Label y = static_cast<Label>(i % 2);
    d.labels.push_back(y);
    auto r = d.features.row(i);
    for (auto& v : r) v = nd(rng);
    r[0] += y ? 2.0f : -2.0f;
  }
  return d;
}

LabeledEmbeddings noise_data(std::mt19937_64& rng, std::size_t n, std::size_t D, std::size_t C) {
  std::normal_distribution<float> nd;
  LabeledEmbeddings d;
  for (std::size_t c = 0; c < C; ++c) d.class_names.push_back("c" + std::to_string(c));
  d.features = Matrix(n, D);
  for (auto& v : d.features.data()) v = nd(rng);
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<Label>(i % C));
  return d;
}

double accuracy(const std::vector<std::size_t>& pred, const std::vector<Label>& labels) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

}  // namespace

TEST_CASE("cosine_lr") {
  CHECK(cosine_lr(0.1, 0, 100) == Approx(0.1));
  CHECK(std::abs(cosine_lr(0.1, 100, 100)) < 1e-15);
  CHECK(cosine_lr(0.1, 50, 100) == Approx(0.05));
  CHECK(cosine_lr(0.1, 25, 100) == Approx(0.05 * (1 + std::cos(std::numbers::pi / 4))));
}

TEST_CASE("sgd_step hand iterations") {
  std::vector<float> w{0.0f};
  std::vector<double> v{0.0};
  const std::vector<double> zero{0.0}, one{1.0};

  sgd_step(w, zero, v, 0.1, 0.9, 0.0);
  CHECK(w[0] == 0.0f);
  CHECK(v[0] == 0.0);

  sgd_step(w, one, v, 0.1, 0.9, 0.0);
  CHECK(v[0] == Approx(1.0));
  CHECK(w[0] == Approx(-0.1));
  sgd_step(w, one, v, 0.1, 0.9, 0.0);
  CHECK(v[0] == Approx(1.9));
  CHECK(w[0] == Approx(-0.29));

  // coupled decay: g' = 0 + 0.5 * 2 = 1
  std::vector<float> w2{2.0f};
  std::vector<double> v2{0.0};
  sgd_step(w2, zero, v2, 0.1, 0.0, 0.5);
  CHECK(w2[0] == Approx(1.9));

  std::vector<double> short_v;
  CHECK(code_of([&] { sgd_step(w, one, short_v, 0.1, 0.9, 0.0); }) == Errc::dimension_mismatch);
}

TEST_CASE("predict examples") {
  HeadModel m;
  m.w = Matrix(3, 3, std::vector<float>{1, 0, 0, 0, 1, 0, 0, 0, 1});
  m.b = {0, 0, 0};
  CHECK(predict(m, Matrix(1, 3, std::vector<float>{0, 1, 0})) == std::vector<std::size_t>{1});

  HeadModel zero;
  zero.w = Matrix(4, 2);
  zero.b.assign(4, 0.0f);
  CHECK(predict(zero, Matrix(3, 2, 1.0f)) == std::vector<std::size_t>{0, 0, 0});

  HeadModel bias_only;
  bias_only.w = Matrix(2, 1);
  bias_only.b = {0.2f, 0.9f};
  CHECK(predict(bias_only, Matrix(1, 1, 5.0f)) == std::vector<std::size_t>{1});

  CHECK(code_of([&] { predict(m, Matrix(1, 2)); }) == Errc::dimension_mismatch);
}

TEST_CASE("zero epochs returns the initial head") {
  const auto d = separable(10, 1);
  const Matrix protos(2, 4, std::vector<float>{-3, 0, 0, 0, 0, 4, 0, 0});
  TrainConfig c;
  c.epochs = 0;
  c.init_scale = 2.0;
  const auto r = train(d, compute_prior(count_labels(d.labels, 2)), CueTargets{}, CueTargets{}, c,
                       &protos);
  CHECK(r.history.empty());
  CHECK(r.model == init_head(2, 4, c, &protos));
  CHECK(r.model.w(0, 0) == Approx(-2.0));
  CHECK(r.model.w(1, 1) == Approx(2.0));
  CHECK(r.config_hash.size() == 64);

  c.init = HeadInit::zero;
  const auto z = train(d, compute_prior(count_labels(d.labels, 2)), CueTargets{}, CueTargets{}, c);
  for (float v : z.model.w.data()) CHECK(v == 0.0f);
}

TEST_CASE("prototype init requires prototypes") {
  TrainConfig c;
  CHECK(code_of([&] { init_head(2, 4, c, nullptr); }) == Errc::dimension_mismatch);
}

TEST_CASE("separable two-class set is solved by the baseline") {
  const auto d = separable(100, 2);
  TrainConfig c;
  c.epochs = 50;
  c.batch_size = 16;
  c.init = HeadInit::zero;
  c.loss.lambda_zs = c.loss.lambda_llm = 0.0;
  const auto r = train(d, compute_prior(count_labels(d.labels, 2)), CueTargets{}, CueTargets{}, c);
  CHECK(r.history.size() == 50);
  CHECK(r.history.back().total < r.history.front().total);
  CHECK(accuracy(predict(r.model, d.features), d.labels) == 1.0);
}

TEST_CASE("training is deterministic and seed-dependent") {
  std::mt19937_64 rng(3);
  const auto d = noise_data(rng, 300, 8, 5);
  const auto prior = compute_prior(count_labels(d.labels, 5));
  std::vector<CueList> cues(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) cues[i] = {(d.labels[i] + 1) % 5};
  const auto tz = expand_targets_zs(cues, d.labels, 5);
  const auto tl = one_hot_targets(d.labels, 5, CueKind::llm);
  TrainConfig c;
  c.epochs = 4;
  c.batch_size = 32;
  c.init = HeadInit::zero;
  c.seed = 9;
  const auto a = train(d, prior, tz, tl, c);
  const auto b = train(d, prior, tz, tl, c);
  CHECK(a.model == b.model);
  CHECK(model_digest(a.model) == model_digest(b.model));
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].total == b.history[e].total);

  c.seed = 10;
  CHECK_FALSE(train(d, prior, tz, tl, c).model == a.model);
}

TEST_CASE("batch gradients match finite differences, linear and hidden heads") {
  std::mt19937_64 rng(5);
  const std::size_t C = 4, D = 6;
  const auto d = noise_data(rng, 12, D, C);
  const std::vector<double> pi{0.4, 0.3, 0.2, 0.1};
  std::vector<CueList> cues(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) cues[i] = {(d.labels[i] + 1) % C, (d.labels[i] + 2) % C};
  const auto tz = expand_targets_zs(cues, d.labels, C);
  NeighborGraph g;
  g.neighbors = {{1}, {0, 2}, {3}, {}};
  const auto tl = expand_targets_llm(g, d.labels, C);
  const LossConfig lc{0.9, 1.1, 0.5, 0.7};
  std::vector<std::size_t> rows(d.size());
  std::iota(rows.begin(), rows.end(), 0);

  for (std::size_t hidden : {0u, 5u}) {
    TrainConfig c;
    c.init = HeadInit::zero;
    c.hidden_width = hidden;
    c.seed = 4;
    auto m = init_head(C, D, c, nullptr);
    std::normal_distribution<float> nd(0, 0.5f);
    for (auto& v : m.w.data()) v = nd(rng);
    for (auto& v : m.b) v = nd(rng);
    for (auto& v : m.b_hidden) v = nd(rng);

    HeadGradient grad;
    batch_loss(m, d.features, rows, d.labels, tz, tl, pi, lc, &grad);

    const auto check = [&](std::span<float> params, const std::vector<double>& analytic) {
      REQUIRE(params.size() == analytic.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        const float orig = params[i];
        params[i] = orig + 1e-3f;
        const float up = params[i];
        const double lp = batch_loss(m, d.features, rows, d.labels, tz, tl, pi, lc, nullptr).total;
        params[i] = orig - 1e-3f;
        const float dn = params[i];
        const double lm = batch_loss(m, d.features, rows, d.labels, tz, tl, pi, lc, nullptr).total;
        params[i] = orig;
        const double fd = (lp - lm) / (static_cast<double>(up) - dn);
        CHECK(std::abs(fd - analytic[i]) <= 1e-4 * std::max(1.0, std::abs(analytic[i])));
      }
    };
    check(m.w.data(), grad.w);
    check(m.b, grad.b);
    if (hidden) {
      check(m.w_hidden.data(), grad.w_hidden);
      check(m.b_hidden, grad.b_hidden);
    }
  }
}

TEST_CASE("hidden head trains and round-trips through files") {
  std::mt19937_64 rng(8);
  const auto d = separable(60, 4);
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 16;
  c.hidden_width = 8;
  c.lr0 = 0.05;
  c.init = HeadInit::zero;
  c.loss.lambda_zs = c.loss.lambda_llm = 0.0;
  const auto r = train(d, compute_prior(count_labels(d.labels, 2)), CueTargets{}, CueTargets{}, c);
  CHECK(accuracy(predict(r.model, d.features), d.labels) > 0.95);

  const auto dir = scratch_dir("model_hidden");
  save_model(dir, r.model, {{"note", "x"}});
  const auto back = load_model(dir);
  CHECK(back == r.model);
  CHECK(std::filesystem::exists(dir / "W_hidden.cuet"));
}

TEST_CASE("linear head round-trips and load errors are explicit") {
  HeadModel m;
  m.w = Matrix(3, 2, std::vector<float>{1, -0.0f, 2, 3, 1e-40f, 5});
  m.b = {0.5f, -1, 2};
  const auto dir = scratch_dir("model_linear");
  save_model(dir, m, nlohmann::json::object());
  CHECK(load_model(dir) == m);
  CHECK(std::filesystem::file_size(dir / "b.cuet") == 16 + 12);

  tensorio::write_tensor(dir / "b.cuet", Matrix(2, 1));
  CHECK(code_of([&] { load_model(dir); }) == Errc::dimension_mismatch);
  CHECK(code_of([] { load_model("/nonexistent/model"); }) == Errc::io_missing_file);
}

TEST_CASE("train validates its inputs") {
  const auto d = separable(5, 1);
  const auto prior = compute_prior(count_labels(d.labels, 2));
  TrainConfig c;
  c.init = HeadInit::zero;
  c.lr0 = 0;
  CHECK(code_of([&] { train(d, prior, CueTargets{}, CueTargets{}, c); }) == Errc::invalid_argument);
  c.lr0 = 0.1;
  c.momentum = 1.0;
  CHECK(code_of([&] { train(d, prior, CueTargets{}, CueTargets{}, c); }) == Errc::invalid_argument);
  c.momentum = 0.9;
  CHECK(code_of([&] { train(d, ClassPrior{{1.0}}, CueTargets{}, CueTargets{}, c); }) ==
        Errc::dimension_mismatch);
  const std::vector<Label> short_labels{0};
  const auto misaligned = one_hot_targets(short_labels, 2, CueKind::zs);
  CHECK(code_of([&] { train(d, prior, misaligned, CueTargets{}, c); }) == Errc::dimension_mismatch);
}

TEST_CASE("divergence is reported with the step index") {
  const auto d = separable(20, 1);
  TrainConfig c;
  c.init = HeadInit::zero;
  c.lr0 = 1e30;
  c.momentum = 0.0;
  c.batch_size = 4;
  try {
    train(d, compute_prior(count_labels(d.labels, 2)), CueTargets{}, CueTargets{}, c);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::non_finite);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("TrainConfig JSON round trip") {
  TrainConfig c;
  c.lr0 = 0.02;
  c.epochs = 7;
  c.seed = 1ULL << 40;
  c.init = HeadInit::zero;
  c.hidden_width = 3;
  c.loss.lambda_llm = 0.25;
  const auto j = to_json(c);
  CHECK(to_json(train_config_from_json(j)) == j);
  auto bad = j;
  bad["init"] = "random";
  CHECK(code_of([&] { train_config_from_json(bad); }) == Errc::invalid_argument);
}
