#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace glt {

using Index = std::ptrdiff_t;

// Row-major storage throughout: flattened mask indices follow data() order.
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using SparseMatrixX = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using SparseMatrix = SparseMatrixX<double>;

}  // namespace glt
