#include "plateinv/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace plateinv {

namespace {

std::atomic<int> g_direct_limit{1 << 30};

}  // namespace

struct SpdFactorization::Impl {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  SparseMatrix matrix;  // kept alive for the iterative path
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
};

int SpdFactorization::default_direct_limit() { return g_direct_limit.load(); }

void SpdFactorization::set_default_direct_limit(int limit) { g_direct_limit.store(limit); }

SpdFactorization::SpdFactorization(const SparseMatrix& a, int direct_size_limit) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("factor_spd: matrix must be square");
  }
  n_ = static_cast<int>(a.rows());
  impl_ = std::make_shared<Impl>();
  iterative_ = n_ > direct_size_limit;
  if (iterative_) {
    impl_->matrix = a;
    impl_->cg.setTolerance(1e-12);
    impl_->cg.setMaxIterations(static_cast<int>(20.0 * std::sqrt(static_cast<double>(n_))) + 1);
    impl_->cg.compute(impl_->matrix);
    if (impl_->cg.info() != Eigen::Success) {
      throw std::runtime_error("factor_spd: iterative setup failed");
    }
    return;
  }
  impl_->ldlt.compute(a);
  if (impl_->ldlt.info() != Eigen::Success) {
    throw std::runtime_error("factor_spd: sparse factorization failed");
  }
  const auto& d = impl_->ldlt.vectorD();
  for (int i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "factor_spd: matrix is not positive definite (pivot %.3e at elimination step %d)",
                    d[i], i);
      throw std::runtime_error(buf);
    }
  }
}

DenseVector SpdFactorization::solve(const DenseVector& rhs) const {
  if (!impl_) throw std::logic_error("SpdFactorization::solve: empty factorization");
  if (rhs.size() != n_) {
    throw std::invalid_argument("SpdFactorization::solve: right-hand side size mismatch");
  }
  if (!iterative_) return impl_->ldlt.solve(rhs);
  DenseVector x = impl_->cg.solve(rhs);
  if (impl_->cg.info() != Eigen::Success && !cap_reached_) {
    cap_reached_ = true;
    std::fprintf(stderr,
                 "warning: conjugate gradient stopped at the iteration cap "
                 "(%ld iterations, residual %.3e)\n",
                 static_cast<long>(impl_->cg.iterations()), impl_->cg.error());
  }
  return x;
}

DenseMatrix SpdFactorization::solve_matrix(const DenseMatrix& rhs) const {
  if (!impl_) throw std::logic_error("SpdFactorization::solve_matrix: empty factorization");
  if (rhs.rows() != n_) {
    throw std::invalid_argument("SpdFactorization::solve_matrix: right-hand side size mismatch");
  }
  if (!iterative_) return impl_->ldlt.solve(rhs);
  DenseMatrix x(rhs.rows(), rhs.cols());
  for (int j = 0; j < rhs.cols(); ++j) x.col(j) = solve(rhs.col(j));
  return x;
}

SpdFactorization factor_spd(const SparseMatrix& a) {
  return SpdFactorization(a, SpdFactorization::default_direct_limit());
}

std::vector<DenseVector> solve_many(const SpdFactorization& f,
                                    const std::vector<DenseVector>& rhs) {
  std::vector<DenseVector> out;
  out.reserve(rhs.size());
  for (const DenseVector& b : rhs) out.push_back(f.solve(b));
  return out;
}

namespace {

void check_tikhonov_args(const DenseMatrix& w, const SparseMatrix& c, double alpha,
                         const DenseVector& rhs) {
  if (!(alpha > 0.0)) {
    throw std::invalid_argument("solve_tikhonov_system: alpha must be positive");
  }
  if (c.rows() != c.cols()) {
    throw std::invalid_argument("solve_tikhonov_system: regularizer must be square");
  }
  if (w.cols() != c.rows()) {
    throw std::invalid_argument("solve_tikhonov_system: W and C have incompatible sizes");
  }
  if (rhs.size() != c.rows()) {
    throw std::invalid_argument("solve_tikhonov_system: right-hand side size mismatch");
  }
}

}  // namespace

DenseVector solve_tikhonov_dense(const DenseMatrix& w, const SparseMatrix& c, double alpha,
                                 const DenseVector& rhs) {
  check_tikhonov_args(w, c, alpha, rhs);
  DenseMatrix b = alpha * DenseMatrix(c);
  b.noalias() += w.transpose() * w;
  Eigen::LLT<DenseMatrix> llt(b);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("solve_tikhonov_system: normal matrix is not positive definite");
  }
  return llt.solve(rhs);
}

DenseVector solve_tikhonov_woodbury(const DenseMatrix& w, const SparseMatrix& c, double alpha,
                                    const DenseVector& rhs) {
  check_tikhonov_args(w, c, alpha, rhs);
  const int n_meas = static_cast<int>(w.rows());
  SpdFactorization cf = factor_spd(c);
  DenseVector z = cf.solve(rhs) / alpha;
  DenseMatrix y = cf.solve_matrix(w.transpose()) / alpha;
  DenseMatrix cap = DenseMatrix::Identity(n_meas, n_meas);
  cap.noalias() += w * y;
  Eigen::LLT<DenseMatrix> llt(cap);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("solve_tikhonov_system: capacitance matrix solve failed");
  }
  return z - y * llt.solve(w * z);
}

DenseVector solve_tikhonov_system(const DenseMatrix& w, const SparseMatrix& c, double alpha,
                                  const DenseVector& rhs) {
  check_tikhonov_args(w, c, alpha, rhs);
  if (c.rows() < 2000) return solve_tikhonov_dense(w, c, alpha, rhs);
  return solve_tikhonov_woodbury(w, c, alpha, rhs);
}

}  // namespace plateinv
