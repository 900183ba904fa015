#pragma once

#include "plateinv/forward.hpp"

namespace plateinv {

// Smoothness index k of the Tikhonov penalty |f|_k^2: the L2 mass form,
// the H1 gradient form, or the same fourth-order form as the plate energy.
enum class RegularizationKind { L2 = 0, H1 = 1, Plate = 2 };

RegularizationKind regularization_from_k(int k);
FormKind regularization_form(RegularizationKind reg);

SparseMatrix assemble_regularizer(const Mesh& mesh, ElementKind source_kind,
                                  RegularizationKind reg);

struct InverseProblem {
  DenseMatrix w;           // measurement operator, N x n_free
  SparseMatrix c;          // regularizer Gram matrix, n_free x n_free
  DenseVector m;           // measured data, length N
  double alpha = 0;
  std::shared_ptr<const Mesh> mesh;
  ElementKind source_kind = ElementKind::BFS;
  std::shared_ptr<const DofMap> source_map;
};

// Minimizer of |W f - m|^2 + alpha |f|_C^2 over the source space.
FemFunction reconstruct(const InverseProblem& problem);

// Adds a deterministic pseudorandom perturbation of exact Euclidean norm
// delta (delta = 0 returns m unchanged).
DenseVector add_noise(const DenseVector& m, double delta, std::uint64_t seed);

// A priori parameter choice alpha = c * delta^(2/3).
double alpha_rule(double delta, double c);

// Gram matrix and spectral data of the discrete representer basis
// eta_i = C^{-1} W^T e_i that spans every reconstruction. The direct variant
// applies the averaging functionals straight to the source basis instead of
// going through the plate solve; its gap to the representer Gram quantifies
// how far the two constructions drift apart.
struct BasisDiagnostics {
  DenseMatrix gram;         // [b(eta_j, eta_i)]
  double lambda_max = 0;    // largest eigenvalue of gram, by power iteration
  double span_residual = 0; // C-norm distance of a reconstruction from span{eta_i}, relative
  DenseMatrix gram_direct;
  double variant_gap = 0;   // |gram - gram_direct|_F / |gram|_F
};

BasisDiagnostics reconstruction_basis_diagnostics(std::shared_ptr<const Mesh> mesh,
                                                  ElementKind state_kind,
                                                  ElementKind source_kind,
                                                  const MeasurementSet& ms,
                                                  RegularizationKind reg, double alpha);

}  // namespace plateinv
