#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cue/metrics.hpp"
#include "cue/neighbors.hpp"
#include "support.hpp"

using namespace cue;
using cue::test::code_of;
using doctest::Approx;

namespace {

constexpr int kMany = 0, kMed = 1, kFew = 2;

}  // namespace

TEST_CASE("perfect predictions") {
  const std::vector<Label> y{0, 1, 2, 2, 1, 0};
  const std::vector<std::size_t> pred(y.begin(), y.end());
  const auto r = evaluate(pred, y, {150, 50, 10});
  CHECK(r.overall_acc == 1.0);
  for (int s = 0; s < 3; ++s) CHECK(*r.split_acc[s] == 1.0);
  CHECK(r.balancedness == 1.0);
  for (int s = 0; s < 3; ++s) CHECK(*r.mean_misclassified[s] == 0.0);
}

TEST_CASE("overall accuracy is per sample") {
  const std::vector<Label> y{0, 0, 1, 1};
  const std::vector<std::size_t> pred{0, 0, 0, 0};
  const auto r = evaluate(pred, y, {150, 150});
  CHECK(r.overall_acc == 0.5);
  CHECK(r.per_class_acc == std::vector<double>{1.0, 0.0});
  CHECK(r.per_class_wrong == std::vector<std::size_t>{0, 2});
}

TEST_CASE("split means follow train counts") {
  // 5 test samples each; class 0 gets 4 right, class 1 gets 2 right
  const std::vector<Label> y{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const std::vector<std::size_t> pred{0, 0, 0, 0, 1, 1, 1, 0, 0, 0};
  const auto r = evaluate(pred, y, {150, 10});
  CHECK(*r.split_acc[kMany] == Approx(0.8));
  CHECK(*r.split_acc[kFew] == Approx(0.4));
  CHECK_FALSE(r.split_acc[kMed].has_value());
  CHECK_FALSE(r.mean_misclassified[kMed].has_value());
  CHECK(r.shot == std::vector<Shot>{Shot::Many, Shot::Few});
}

TEST_CASE("split accuracy is a macro mean") {
  // two Few classes with unequal support: 1/1 and 0/3 -> macro 0.5, micro 0.25
  const std::vector<Label> y{0, 1, 1, 1};
  const std::vector<std::size_t> pred{0, 0, 0, 0};
  const auto r = evaluate(pred, y, {5, 5});
  CHECK(*r.split_acc[kFew] == Approx(0.5));
  CHECK(r.overall_acc == Approx(0.25));
}

TEST_CASE("evaluate is permutation invariant") {
  std::mt19937_64 rng(1);
  std::vector<Label> y(200);
  std::vector<std::size_t> pred(200);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = static_cast<Label>(rng() % 6);
    pred[i] = rng() % 3 == 0 ? rng() % 6 : y[i];
  }
  const ClassCounts counts{300, 120, 60, 20, 10, 3};
  const auto a = evaluate(pred, y, counts);
  std::vector<std::size_t> perm(y.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<Label> y2(y.size());
  std::vector<std::size_t> p2(y.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    y2[i] = y[perm[i]];
    p2[i] = pred[perm[i]];
  }
  const auto b = evaluate(p2, y2, counts);
  CHECK(a.overall_acc == b.overall_acc);
  CHECK(a.per_class_acc == b.per_class_acc);
  CHECK(a.balancedness == b.balancedness);
}

TEST_CASE("evaluate rejects misaligned or unknown inputs") {
  const std::vector<Label> y{0, 1};
  const std::vector<std::size_t> pred{0};
  CHECK(code_of([&] { evaluate(pred, y, {5, 5}); }) == Errc::dimension_mismatch);
  const std::vector<std::size_t> pred2{0, 1};
  const std::vector<Label> y3{0, 3};
  CHECK(code_of([&] { evaluate(pred2, y3, {5, 5}); }) == Errc::label_out_of_range);
}

TEST_CASE("balancedness") {
  CHECK(balancedness(std::vector<double>{0.7, 0.7, 0.7}, 0.1) == Approx(1.0));
  CHECK(balancedness(std::vector<double>{1.0, 0.9}, 0.1) == Approx((2 + 2 * std::exp(-0.5)) / 4).epsilon(1e-12));
  CHECK(balancedness(std::vector<double>{1.0, 0.9}, 0.1) == Approx(0.803265).epsilon(1e-6));
  CHECK(balancedness(std::vector<double>{1.0, 0.0, 0.4}, 1e9) == Approx(1.0));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(7);
    for (auto& v : a) v = u(rng);
    const double base = balancedness(a, 0.1);
    CHECK(base > 0.0);
    CHECK(base <= 1.0);
    auto shifted = a;
    for (auto& v : shifted) v += 0.37;
    CHECK(balancedness(shifted, 0.1) == Approx(base).epsilon(1e-12));
    std::reverse(a.begin(), a.end());
    CHECK(balancedness(a, 0.1) == Approx(base).epsilon(1e-12));
  }
  CHECK(code_of([] { balancedness(std::vector<double>{1.0}, 0.0); }) == Errc::invalid_argument);
}

TEST_CASE("mean_misclassified") {
  const std::vector<Shot> split{Shot::Few, Shot::Few, Shot::Many};
  // class 0: 3 wrong, class 1: 1 wrong, class 2: 0 wrong
  const std::vector<Label> y{0, 0, 0, 1, 1, 2};
  const std::vector<std::size_t> pred{1, 1, 2, 1, 0, 2};
  const auto m = mean_misclassified(pred, y, split);
  CHECK(*m[kFew] == 2.0);
  CHECK(*m[kMany] == 0.0);
  CHECK_FALSE(m[kMed].has_value());
}

TEST_CASE("transition analysis examples") {
  NeighborGraph g;
  g.neighbors = {{1}, {0}, {}};
  const std::vector<Label> y{0};

  const auto same = transition_analysis(std::vector<std::size_t>{0}, std::vector<std::size_t>{0}, y, g);
  CHECK(same.totals().correct_wrong == 0);
  CHECK(same.totals().wrong_correct == 0);
  CHECK_FALSE(same.neighbor_error_fraction.has_value());

  const auto nb = transition_analysis(std::vector<std::size_t>{0}, std::vector<std::size_t>{1}, y, g);
  CHECK(nb.per_class[0].correct_wrong == 1);
  CHECK(*nb.neighbor_error_fraction == 1.0);

  const auto far = transition_analysis(std::vector<std::size_t>{0}, std::vector<std::size_t>{2}, y, g);
  CHECK(*far.neighbor_error_fraction == 0.0);
}

TEST_CASE("transition cells are conserved") {
  std::mt19937_64 rng(3);
  NeighborGraph g;
  g.neighbors = {{1, 2}, {0}, {0, 3}, {2}};
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 1 + rng() % 200;
    std::vector<Label> y(n);
    std::vector<std::size_t> zs(n), ft(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<Label>(rng() % 4);
      zs[i] = rng() % 4;
      ft[i] = rng() % 4;
    }
    const auto r = transition_analysis(zs, ft, y, g);
    CHECK(r.totals().total() == n);
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(r.per_class[c].total() == static_cast<std::size_t>(std::count(y.begin(), y.end(), c)));
    }
    if (r.neighbor_error_fraction) {
      CHECK(*r.neighbor_error_fraction >= 0.0);
      CHECK(*r.neighbor_error_fraction <= 1.0);
    }
    CHECK(transition_analysis(zs, zs, y, g).totals().correct_wrong == 0);
  }
  const std::vector<Label> y{0};
  CHECK(code_of([&] {
          transition_analysis(std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{0}, y, g);
        }) == Errc::dimension_mismatch);
}

TEST_CASE("reports serialize") {
  const std::vector<Label> y{0, 1, 1};
  const std::vector<std::size_t> pred{0, 1, 0};
  const auto r = evaluate(pred, y, {150, 50});
  const std::vector<std::string> names{"cat", "dog"};
  const auto j = to_json(r);
  CHECK(j["overall_acc"].get<double>() == Approx(2.0 / 3));
  CHECK(j["split_acc"]["few"].is_null());

  const auto table = format_table(r, names);
  CHECK(table.find("dog") != std::string::npos);
  CHECK(table.find("medium") != std::string::npos);

  NeighborGraph g;
  g.neighbors = {{1}, {0}};
  const auto tr = transition_analysis(std::vector<std::size_t>{0, 1, 1}, pred, y, g);
  const auto csv = per_class_csv(r, names, &tr);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(csv.rfind("class,name,shot,support,accuracy,wrong,zs_correct_ft_correct", 0) == 0);
  CHECK(to_json(tr)["neighbor_error_fraction"].get<double>() == 1.0);
}
