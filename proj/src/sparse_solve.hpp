#pragma once

#include <Eigen/KLUSupport>

#include "fitnet/error.hpp"
#include "fitnet/grid.hpp"

namespace fitnet::detail {

// Sparse LU (KLU) that reuses its symbolic analysis while the sparsity
// pattern (nonzero count and dimension) stays the same.
class SparseDirectSolver {
 public:
  Vector solve(SparseMatrix& A, const Vector& b) {
    A.makeCompressed();
    if (!analyzed_ || A.rows() != rows_ || A.nonZeros() != nnz_) {
      lu_.analyzePattern(A);
      analyzed_ = true;
      rows_ = A.rows();
      nnz_ = A.nonZeros();
    }
    lu_.factorize(A);
    if (lu_.info() != Eigen::Success) {
      throw Error(ErrorCode::singular_system, "sparse LU factorization failed");
    }
    Vector x = lu_.solve(b);
    if (lu_.info() != Eigen::Success || !x.allFinite()) {
      throw Error(ErrorCode::singular_system, "sparse LU solve failed");
    }
    return x;
  }

 private:
  Eigen::KLU<SparseMatrix> lu_;
  bool analyzed_ = false;
  Eigen::Index rows_ = 0;
  Eigen::Index nnz_ = 0;
};

}  // namespace fitnet::detail
