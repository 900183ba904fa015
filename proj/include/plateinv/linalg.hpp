#pragma once

#include <memory>

#include "plateinv/assemble.hpp"

namespace plateinv {

// Factorization of a sparse SPD matrix: sparse LDLT by default, switching to
// diagonally preconditioned conjugate gradients for systems larger than the
// direct-solver size limit.
class SpdFactorization {
 public:
  SpdFactorization() = default;
  explicit SpdFactorization(const SparseMatrix& a, int direct_size_limit);

  DenseVector solve(const DenseVector& rhs) const;
  DenseMatrix solve_matrix(const DenseMatrix& rhs) const;

  int rows() const { return n_; }
  bool used_iterative() const { return iterative_; }
  // True once any CG solve stopped at the iteration cap instead of the
  // residual tolerance.
  bool iteration_cap_reached() const { return cap_reached_; }

  static int default_direct_limit();
  static void set_default_direct_limit(int limit);

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
  int n_ = 0;
  bool iterative_ = false;
  mutable bool cap_reached_ = false;
};

SpdFactorization factor_spd(const SparseMatrix& a);

std::vector<DenseVector> solve_many(const SpdFactorization& f,
                                    const std::vector<DenseVector>& rhs);

// Solves (W^T W + alpha C) x = rhs. Dispatches between a dense normal-
// equations solve (small C) and the Woodbury identity
//   x = z - Y (I + W Y)^{-1} W z,  z = (alpha C)^{-1} rhs,  Y = (alpha C)^{-1} W^T,
// which only factors the sparse C and an N-by-N capacitance matrix.
DenseVector solve_tikhonov_system(const DenseMatrix& w, const SparseMatrix& c,
                                  double alpha, const DenseVector& rhs);
DenseVector solve_tikhonov_dense(const DenseMatrix& w, const SparseMatrix& c,
                                 double alpha, const DenseVector& rhs);
DenseVector solve_tikhonov_woodbury(const DenseMatrix& w, const SparseMatrix& c,
                                    double alpha, const DenseVector& rhs);

}  // namespace plateinv
