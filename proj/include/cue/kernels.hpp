#pragma once

// Row-parallel numeric kernels. Every OpenMP kernel has a `_serial`
// reference twin; the parallel form must be bit-identical to it. That holds
// because each output element is written by exactly one thread using the
// same fixed-order accumulation as the serial loop.

#include <cstddef>
#include <span>
#include <vector>

#include "cue/matrix.hpp"

namespace cue::kernels {

/// out(i, c) = <a_i, b_c> / (|a_i| |b_c|). Throws zero_norm_row.
Matrix cosine_scores(const Matrix& a, const Matrix& b);
Matrix cosine_scores_serial(const Matrix& a, const Matrix& b);

/// y(i, :) = W x_i + bias for an n x D row block `x`; returns n x W.rows().
std::vector<double> affine(std::span<const double> x, std::size_t n, const Matrix& w,
                           std::span<const float> bias);
std::vector<double> affine_serial(std::span<const double> x, std::size_t n, const Matrix& w,
                                  std::span<const float> bias);

/// grad_w(c, :) += scale * sum_i g(i, c) x_i and grad_b(c) += scale * sum_i g(i, c),
/// with i ascending for every c. `g` is n x C, `x` is n x D.
void outer_accumulate(std::span<const double> g, std::span<const double> x, std::size_t n,
                      double scale, std::span<double> grad_w, std::span<double> grad_b);
void outer_accumulate_serial(std::span<const double> g, std::span<const double> x, std::size_t n,
                             double scale, std::span<double> grad_w, std::span<double> grad_b);

/// Row-wise argmax of an n x cols buffer, ties to the smaller index.
std::vector<std::size_t> argmax_rows(std::span<const double> scores, std::size_t cols);
std::vector<std::size_t> argmax_rows_serial(std::span<const double> scores, std::size_t cols);

}  // namespace cue::kernels
