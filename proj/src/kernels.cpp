#include "cue/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <string>

#include "cue/error.hpp"

namespace cue::kernels {
namespace {

std::vector<double> inverse_norms(const Matrix& m, const char* what) {
  std::vector<double> inv(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sq = 0.0;
    for (float v : m.row(r)) sq += static_cast<double>(v) * v;
    if (!(sq > 0.0) || !std::isfinite(sq)) {
      throw Error(Errc::zero_norm_row, std::string(what) + " row " + std::to_string(r) +
                                           " has zero (or non-finite) norm");
    }
    inv[r] = 1.0 / std::sqrt(sq);
  }
  return inv;
}

void check_cosine_shapes(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(Errc::dimension_mismatch, "embedding dims " + std::to_string(a.cols()) +
                                              " != prototype dims " + std::to_string(b.cols()));
  }
}

inline void cosine_row(const Matrix& a, const Matrix& b, const std::vector<double>& inv_a,
                       const std::vector<double>& inv_b, std::size_t i, Matrix& out) {
  auto ai = a.row(i);
  for (std::size_t c = 0; c < b.rows(); ++c) {
    auto bc = b.row(c);
    double dot = 0.0;
    for (std::size_t k = 0; k < ai.size(); ++k) dot += static_cast<double>(ai[k]) * bc[k];
    out(i, c) = static_cast<float>(dot * inv_a[i] * inv_b[c]);
  }
}

inline void affine_row(std::span<const double> x, std::size_t i, const Matrix& w,
                       std::span<const float> bias, std::vector<double>& out) {
  const std::size_t d = w.cols();
  const double* xi = x.data() + i * d;
  for (std::size_t c = 0; c < w.rows(); ++c) {
    auto wc = w.row(c);
    double acc = bias[c];
    for (std::size_t k = 0; k < d; ++k) acc += static_cast<double>(wc[k]) * xi[k];
    out[i * w.rows() + c] = acc;
  }
}

void check_affine(std::span<const double> x, std::size_t n, const Matrix& w,
                  std::span<const float> bias) {
  if (x.size() != n * w.cols() || bias.size() != w.rows()) {
    throw Error(Errc::dimension_mismatch, "affine: input is " + std::to_string(x.size()) +
                                              " values for " + std::to_string(n) + " rows of dim " +
                                              std::to_string(w.cols()));
  }
}

// One output row c of the weight gradient; i ascending.
inline void outer_row(std::span<const double> g, std::span<const double> x, std::size_t n,
                      std::size_t num_out, std::size_t d, double scale, std::size_t c,
                      std::span<double> grad_w, std::span<double> grad_b) {
  double* gw = grad_w.data() + c * d;
  double gb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i * num_out + c];
    if (gi == 0.0) continue;
    gb += gi;
    const double* xi = x.data() + i * d;
    for (std::size_t k = 0; k < d; ++k) gw[k] += scale * gi * xi[k];
  }
  grad_b[c] += scale * gb;
}

std::size_t checked_outer(std::span<const double> g, std::span<const double> x, std::size_t n,
                          std::span<double> grad_w, std::span<double> grad_b) {
  const std::size_t num_out = grad_b.size();
  if (n == 0) return 0;
  const std::size_t d = x.size() / n;
  if (g.size() != n * num_out || x.size() != n * d || grad_w.size() != num_out * d) {
    throw Error(Errc::dimension_mismatch, "outer_accumulate: inconsistent shapes");
  }
  return d;
}

inline std::size_t argmax_row(std::span<const double> scores, std::size_t cols, std::size_t i) {
  const double* row = scores.data() + i * cols;
  std::size_t best = 0;
  for (std::size_t c = 1; c < cols; ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

}  // namespace

Matrix cosine_scores(const Matrix& a, const Matrix& b) {
  check_cosine_shapes(a, b);
  const auto inv_a = inverse_norms(a, "embedding");
  const auto inv_b = inverse_norms(b, "prototype");
  Matrix out(a.rows(), b.rows());
  const auto n = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) cosine_row(a, b, inv_a, inv_b, static_cast<std::size_t>(i), out);
  return out;
}

Matrix cosine_scores_serial(const Matrix& a, const Matrix& b) {
  check_cosine_shapes(a, b);
  const auto inv_a = inverse_norms(a, "embedding");
  const auto inv_b = inverse_norms(b, "prototype");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) cosine_row(a, b, inv_a, inv_b, i, out);
  return out;
}

std::vector<double> affine(std::span<const double> x, std::size_t n, const Matrix& w,
                           std::span<const float> bias) {
  check_affine(x, n, w, bias);
  std::vector<double> out(n * w.rows());
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (rows * static_cast<std::int64_t>(w.rows() * w.cols()) > 4096)
  for (std::int64_t i = 0; i < rows; ++i) affine_row(x, static_cast<std::size_t>(i), w, bias, out);
  return out;
}

std::vector<double> affine_serial(std::span<const double> x, std::size_t n, const Matrix& w,
                                  std::span<const float> bias) {
  check_affine(x, n, w, bias);
  std::vector<double> out(n * w.rows());
  for (std::size_t i = 0; i < n; ++i) affine_row(x, i, w, bias, out);
  return out;
}

void outer_accumulate(std::span<const double> g, std::span<const double> x, std::size_t n,
                      double scale, std::span<double> grad_w, std::span<double> grad_b) {
  const std::size_t d = checked_outer(g, x, n, grad_w, grad_b);
  if (n == 0) return;
  const std::size_t num_out = grad_b.size();
  const auto outs = static_cast<std::int64_t>(num_out);
#pragma omp parallel for schedule(static) if (static_cast<std::int64_t>(n * d) * outs > 4096)
  for (std::int64_t c = 0; c < outs; ++c) {
    outer_row(g, x, n, num_out, d, scale, static_cast<std::size_t>(c), grad_w, grad_b);
  }
}

void outer_accumulate_serial(std::span<const double> g, std::span<const double> x, std::size_t n,
                             double scale, std::span<double> grad_w, std::span<double> grad_b) {
  const std::size_t d = checked_outer(g, x, n, grad_w, grad_b);
  if (n == 0) return;
  const std::size_t num_out = grad_b.size();
  for (std::size_t c = 0; c < num_out; ++c) outer_row(g, x, n, num_out, d, scale, c, grad_w, grad_b);
}

std::vector<std::size_t> argmax_rows(std::span<const double> scores, std::size_t cols) {
  const std::size_t n = cols ? scores.size() / cols : 0;
  std::vector<std::size_t> out(n);
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) if (rows > 1024)
  for (std::int64_t i = 0; i < rows; ++i) {
    out[static_cast<std::size_t>(i)] = argmax_row(scores, cols, static_cast<std::size_t>(i));
  }
  return out;
}

std::vector<std::size_t> argmax_rows_serial(std::span<const double> scores, std::size_t cols) {
  const std::size_t n = cols ? scores.size() / cols : 0;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = argmax_row(scores, cols, i);
  return out;
}

}  // namespace cue::kernels
