#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "cue/cues.hpp"
#include "cue/neighbors.hpp"
#include "support.hpp"

using namespace cue;
using cue::test::code_of;
using doctest::Approx;

namespace {

Matrix row_matrix(std::vector<float> v) {
  const auto n = v.size();
  return Matrix(1, n, std::move(v));
}

Matrix random_scores(std::mt19937_64& rng, std::size_t n, std::size_t C) {
  std::uniform_real_distribution<float> u(-1, 1);
  Matrix m(n, C);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

}  // namespace

TEST_CASE("zero-shot cosine examples") {
  const Matrix e(1, 2, std::vector<float>{1, 0});
  const Matrix p(3, 2, std::vector<float>{3, 0, 0, 2, 0.6f, 0.8f});
  const auto s = zero_shot_logits(e, p);
  CHECK(s(0, 0) == Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(s(0, 1)) < 1e-6);
  CHECK(s(0, 2) == Approx(0.6).epsilon(1e-6));
}

TEST_CASE("zero-shot scores ignore row scaling") {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> nd;
  Matrix e(6, 5), p(4, 5);
  for (auto& v : e.data()) v = nd(rng);
  for (auto& v : p.data()) v = nd(rng);
  const auto a = zero_shot_logits(e, p);
  Matrix e2 = e;
  for (std::size_t i = 0; i < e2.rows(); ++i)
    for (auto& v : e2.row(i)) v *= static_cast<float>(i + 1) * 3.5f;
  const auto b = zero_shot_logits(e2, p);
  for (std::size_t i = 0; i < a.data().size(); ++i) CHECK(a.data()[i] == Approx(b.data()[i]).epsilon(1e-6));
}

TEST_CASE("zero-norm rows are named in the error") {
  const Matrix e(2, 2, std::vector<float>{1, 0, 0, 0});
  const Matrix p(1, 2, std::vector<float>{1, 1});
  try {
    zero_shot_logits(e, p);
    FAIL("expected error");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::zero_norm_row);
    CHECK(std::string(err.what()).find("1") != std::string::npos);
  }
  CHECK(code_of([&] { zero_shot_logits(p, e); }) == Errc::zero_norm_row);
}

TEST_CASE("topk_cues examples") {
  const std::vector<Label> y1{1};
  const auto s = row_matrix({0.30f, 0.90f, 0.80f, 0.10f});
  CHECK(topk_cues(s, y1, 2).cues[0] == CueList{2, 0});
  CHECK(topk_cues(s, y1, 0).cues[0].empty());

  const std::vector<Label> y0{0};
  CHECK(topk_cues(row_matrix({0.5f, 0.5f, 0.5f}), y0, 2).cues[0] == CueList{1, 2});
}

TEST_CASE("k beyond C-1 clamps and flags it") {
  const std::vector<Label> y{0};
  const auto r = topk_cues(row_matrix({0.1f, 0.2f, 0.3f}), y, 10);
  CHECK(r.clamped);
  CHECK(r.cues[0] == CueList{2, 1});
  CHECK_FALSE(topk_cues(row_matrix({0.1f, 0.2f, 0.3f}), y, 2).clamped);
}

TEST_CASE("variant_cues examples") {
  const std::vector<Label> y1{1};
  const auto s = row_matrix({0.30f, 0.90f, 0.80f, 0.10f});
  CHECK(variant_cues(s, y1, 2, CueMode::last, 0).cues[0] == CueList{3, 0});

  const auto r = variant_cues(s, y1, 3, CueMode::random, 9).cues[0];
  CHECK(std::set<std::size_t>(r.begin(), r.end()) == std::set<std::size_t>{0, 2, 3});
}

TEST_CASE("top mode equals topk_cues on random inputs") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t C = 2 + trial % 12, n = 15;
    const auto s = random_scores(rng, n, C);
    std::vector<Label> y(n);
    for (auto& v : y) v = static_cast<Label>(rng() % C);
    const std::size_t k = trial % (C + 1);
    CHECK(variant_cues(s, y, k, CueMode::top, trial).cues == topk_cues(s, y, k).cues);
  }
}

TEST_CASE("random mode is seeded, uniform-ish and never picks the label") {
  std::mt19937_64 rng(4);
  const std::size_t C = 6, n = 3000;
  const auto s = random_scores(rng, n, C);
  std::vector<Label> y(n, 2);
  const auto a = variant_cues(s, y, 2, CueMode::random, 17);
  CHECK(a.cues == variant_cues(s, y, 2, CueMode::random, 17).cues);
  CHECK(a.cues != variant_cues(s, y, 2, CueMode::random, 18).cues);
  std::vector<std::size_t> hits(C, 0);
  for (const auto& l : a.cues) {
    CHECK(l.size() == 2);
    CHECK(l[0] != l[1]);
    for (auto c : l) ++hits[c];
  }
  CHECK(hits[2] == 0);
  // each of the 5 candidates expected 1200 times
  for (std::size_t c = 0; c < C; ++c) {
    if (c != 2) CHECK(std::abs(static_cast<double>(hits[c]) - 1200.0) < 150.0);
  }
}

TEST_CASE("top-k is invariant under strictly increasing transforms") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t C = 3 + trial % 20, n = 10;
    const auto s = random_scores(rng, n, C);
    std::vector<Label> y(n);
    for (auto& v : y) v = static_cast<Label>(rng() % C);
    Matrix t = s;
    for (auto& v : t.data()) v = std::exp(3.0f * v) + 7.0f;
    const std::size_t k = 1 + trial % (C - 1);
    CHECK(topk_cues(t, y, k).cues == topk_cues(s, y, k).cues);
  }
}

TEST_CASE("expand_targets_zs examples and counts") {
  const std::vector<CueList> c1{{0, 4}};
  const std::vector<Label> y3{3};
  const auto t = expand_targets_zs(c1, y3, 5);
  CHECK(std::vector<std::uint8_t>(t.row(0).begin(), t.row(0).end()) ==
        std::vector<std::uint8_t>{1, 0, 0, 1, 1});

  const std::vector<CueList> empty{{}};
  const std::vector<Label> y2{2};
  const auto t2 = expand_targets_zs(empty, y2, 3);
  CHECK(std::vector<std::uint8_t>(t2.row(0).begin(), t2.row(0).end()) ==
        std::vector<std::uint8_t>{0, 0, 1});

  const std::vector<CueList> all{{1, 2, 3}};
  const std::vector<Label> y0{0};
  CHECK(expand_targets_zs(all, y0, 4).ones(0) == 4);

  const std::vector<CueList> bad{{3}};
  CHECK(code_of([&] { expand_targets_zs(bad, y3, 5); }) == Errc::invalid_argument);
}

TEST_CASE("mined cue targets have k+1 ones per row") {
  std::mt19937_64 rng(8);
  const std::size_t C = 12, n = 40;
  const auto s = random_scores(rng, n, C);
  std::vector<Label> y(n);
  for (auto& v : y) v = static_cast<Label>(rng() % C);
  for (std::size_t k : {0u, 3u, 11u, 20u}) {
    const auto t = expand_targets_zs(topk_cues(s, y, k).cues, y, C);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(t.ones(i) == std::min(k, C - 1) + 1);
      CHECK(t.row(i)[y[i]] == 1);
    }
  }
}

TEST_CASE("expand_targets_llm examples") {
  NeighborGraph g;
  g.neighbors = {{}, {0, 2}, {}, {1}};
  const std::vector<Label> y{1, 1, 0};
  const auto t = expand_targets_llm(g, y, 4);
  CHECK(std::vector<std::uint8_t>(t.row(0).begin(), t.row(0).end()) ==
        std::vector<std::uint8_t>{1, 1, 1, 0});
  CHECK(std::equal(t.row(0).begin(), t.row(0).end(), t.row(1).begin()));
  CHECK(t.ones(2) == 1);

  NeighborGraph bad;
  bad.neighbors = {{}, {7}, {}, {}};
  CHECK(code_of([&] { expand_targets_llm(bad, y, 4); }) == Errc::label_out_of_range);
}

TEST_CASE("cue cache JSON round trip") {
  CueCache c;
  c.k = 2;
  c.mode = CueMode::last;
  c.seed = 12;
  c.key = "abc";
  c.per_sample_cue_lists = {{1, 2}, {0, 3}};
  const auto b = cue_cache_from_json(to_json(c));
  CHECK(b.kind == "zs");
  CHECK(b.k == 2);
  CHECK(b.mode == CueMode::last);
  CHECK(b.seed == 12);
  CHECK(b.key == "abc");
  CHECK(b.per_sample_cue_lists == c.per_sample_cue_lists);
  CHECK(parse_cue_mode("random") == CueMode::random);
  CHECK(code_of([] { parse_cue_mode("best"); }) == Errc::invalid_argument);
}
