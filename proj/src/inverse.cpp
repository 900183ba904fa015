#include "plateinv/inverse.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <random>
#include <stdexcept>

namespace plateinv {

RegularizationKind regularization_from_k(int k) {
  if (k < 0 || k > 2) {
    throw std::invalid_argument("regularization: k must be 0, 1, or 2");
  }
  return static_cast<RegularizationKind>(k);
}

FormKind regularization_form(RegularizationKind reg) {
  switch (reg) {
    case RegularizationKind::L2: return FormKind::Mass;
    case RegularizationKind::H1: return FormKind::H1;
    case RegularizationKind::Plate: return FormKind::Biharmonic;
  }
  throw std::invalid_argument("regularization: invalid kind");
}

SparseMatrix assemble_regularizer(const Mesh& mesh, ElementKind source_kind,
                                  RegularizationKind reg) {
  DofMap dm = build_dof_map(mesh, source_kind);
  return assemble_form(mesh, source_kind, regularization_form(reg), dm);
}

FemFunction reconstruct(const InverseProblem& problem) {
  if (!problem.mesh || !problem.source_map) {
    throw std::invalid_argument("reconstruct: problem is missing its source space");
  }
  if (problem.w.rows() != problem.m.size()) {
    throw std::invalid_argument("reconstruct: W and m have incompatible sizes");
  }
  if (problem.w.cols() != problem.source_map->n_free) {
    throw std::invalid_argument("reconstruct: W does not match the source space");
  }
  DenseVector rhs = problem.w.transpose() * problem.m;
  DenseVector coeffs = solve_tikhonov_system(problem.w, problem.c, problem.alpha, rhs);
  return FemFunction{problem.mesh, problem.source_kind, problem.source_map, std::move(coeffs)};
}

DenseVector add_noise(const DenseVector& m, double delta, std::uint64_t seed) {
  if (delta < 0.0) throw std::invalid_argument("add_noise: delta must be nonnegative");
  if (delta == 0.0 || m.size() == 0) return m;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DenseVector n(m.size());
  double norm = 0.0;
  do {
    for (int i = 0; i < n.size(); ++i) n[i] = gauss(rng);
    norm = n.norm();
  } while (norm == 0.0);
  return m + (delta / norm) * n;
}

double alpha_rule(double delta, double c) {
  if (!(delta > 0.0)) throw std::invalid_argument("alpha_rule: delta must be positive");
  if (!(c > 0.0)) throw std::invalid_argument("alpha_rule: c must be positive");
  return c * std::cbrt(delta * delta);
}

namespace {

double power_iteration_lambda_max(const DenseMatrix& a) {
  const int n = static_cast<int>(a.rows());
  DenseVector v = DenseVector::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = 0.0;
  for (int iter = 0; iter < 10000; ++iter) {
    DenseVector w = a * v;
    double next = v.dot(w);
    double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    if (iter > 0 && std::abs(next - lambda) <= 1e-8 * std::abs(next)) return next;
    lambda = next;
  }
  return lambda;
}

}  // namespace

BasisDiagnostics reconstruction_basis_diagnostics(std::shared_ptr<const Mesh> mesh,
                                                  ElementKind state_kind,
                                                  ElementKind source_kind,
                                                  const MeasurementSet& ms,
                                                  RegularizationKind reg, double alpha) {
  if (!mesh) throw std::invalid_argument("reconstruction_basis_diagnostics: null mesh");
  DofMap dm_state = build_dof_map(*mesh, state_kind);
  auto dm_source = std::make_shared<DofMap>(build_dof_map(*mesh, source_kind));
  SparseMatrix a = assemble_form(*mesh, state_kind, FormKind::Biharmonic, dm_state);
  SparseMatrix s = assemble_coupling(*mesh, source_kind, state_kind, *dm_source, dm_state);
  SparseMatrix c = assemble_form(*mesh, source_kind, regularization_form(reg), *dm_source);
  int state_degree = state_kind == ElementKind::BFS ? 8 : 6;
  int source_degree = source_kind == ElementKind::BFS ? 8 : 6;
  SparseMatrix phi_state = measurement_matrix(ms, *mesh, dm_state, state_degree);
  SparseMatrix phi_source = measurement_matrix(ms, *mesh, *dm_source, source_degree);

  // Representers: beta_i solves the plate problem with the averaging load,
  // r_i = S^T beta_i carries it to the source space, eta_i = C^{-1} r_i.
  SpdFactorization fa = factor_spd(a);
  DenseMatrix beta = fa.solve_matrix(DenseMatrix(phi_state.transpose()));
  DenseMatrix r = s.transpose() * beta;
  SpdFactorization fc = factor_spd(c);
  DenseMatrix eta = fc.solve_matrix(r);

  BasisDiagnostics diag;
  diag.gram = eta.transpose() * r;  // = eta^T C eta
  diag.lambda_max = power_iteration_lambda_max(diag.gram);

  DenseMatrix r_direct = DenseMatrix(phi_source.transpose());
  DenseMatrix eta_direct = fc.solve_matrix(r_direct);
  diag.gram_direct = eta_direct.transpose() * r_direct;
  double gram_norm = diag.gram.norm();
  diag.variant_gap = gram_norm > 0.0 ? (diag.gram - diag.gram_direct).norm() / gram_norm : 0.0;

  // A reconstruction from synthetic data, projected onto span{eta_i} in the
  // C-inner product; the relative C-norm of the remainder is the residual.
  DenseMatrix w = r.transpose();  // W = Phi A^{-1} S
  DenseVector m = DenseVector::Ones(ms.size());
  DenseVector f = solve_tikhonov_system(w, c, alpha, w.transpose() * m);
  DenseVector cf = c * f;
  DenseVector d = diag.gram.ldlt().solve(eta.transpose() * cf);
  DenseVector resid = f - eta * d;
  double f_c = std::sqrt(f.dot(cf));
  double resid_c = std::sqrt(resid.dot(DenseVector(c * resid)));
  diag.span_residual = f_c > 0.0 ? resid_c / f_c : 0.0;
  return diag;
}

}  // namespace plateinv
