#pragma once

#include <Eigen/Core>

#include "floodcast/tensor/tensor.hpp"

namespace floodcast {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Views a rank-2 tensor (or a rank-N tensor flattened to rows x cols) as an
// Eigen matrix without copying.
inline Eigen::Map<RowMajorMatrix> as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return {t.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
inline Eigen::Map<const RowMajorMatrix> as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return {t.data().data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
}
inline Eigen::Map<RowMajorMatrix> as_matrix(Tensor& t) { return as_matrix(t, t.dim(0), t.dim(1)); }
inline Eigen::Map<const RowMajorMatrix> as_matrix(const Tensor& t) { return as_matrix(t, t.dim(0), t.dim(1)); }

}  // namespace floodcast
