#include "cue/matrix.hpp"

#include <algorithm>
#include <string>

#include "cue/error.hpp"

namespace cue {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(Errc::dimension_mismatch,
                "matrix data has " + std::to_string(data_.size()) + " elements, expected " +
                    std::to_string(rows_ * cols_));
  }
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) {
      throw Error(Errc::invalid_argument, "row index " + std::to_string(indices[i]) +
                                              " out of range for " + std::to_string(rows_) +
                                              " rows");
    }
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace cue
