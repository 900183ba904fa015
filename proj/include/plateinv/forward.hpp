#pragma once

#include <memory>

#include "plateinv/linalg.hpp"

namespace plateinv {

// A finite element function given by its free-dof coefficient vector;
// constrained dofs are zero (clamped boundary). Point evaluation locates the
// containing cell (lowest cell index wins on shared edges) and evaluates the
// local basis there.
struct FemFunction {
  std::shared_ptr<const Mesh> mesh;
  ElementKind kind = ElementKind::BFS;
  std::shared_ptr<const DofMap> dof_map;
  DenseVector coeffs;

  double value(Point2 p) const;
  Eigen::Vector2d gradient(Point2 p) const;
  Eigen::Matrix2d hessian(Point2 p) const;

  int locate_cell(Point2 p) const;  // -1 when p is outside the mesh
  DenseVector cell_coeffs(int cell) const;
  double derivative_in_cell(int cell, Point2 p, Deriv d) const;
};

// Axis-aligned averaging window [x0,x1] x [y0,y1].
struct RectRegion {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct MeasurementSet {
  std::vector<RectRegion> regions;
  int size() const { return static_cast<int>(regions.size()); }
};

MeasurementSet default_measurement_set(Domain domain);

struct ForwardOptions {
  int load_degree = 10;
  // Raises the load quadrature degree on cells touching the given corner,
  // where manufactured L-shape sources have unbounded derivatives.
  bool corner_boost = false;
  Point2 corner{0.0, 0.0};
  int corner_degree = 14;
};

// Solves the clamped plate problem a(u_h, v) = (f, v) on the given space.
FemFunction solve_forward(std::shared_ptr<const Mesh> mesh, ElementKind kind,
                          const std::function<double(Point2)>& f,
                          const ForwardOptions& options = {});

// Region averages (1/|w_i|) * integral of the argument over region i. Regions
// must lie inside the meshed domain; the clipped quadrature pieces of each
// region are checked to tile its full area.
DenseVector apply_measurement(const MeasurementSet& ms, const FemFunction& u, int degree = 8);
DenseVector apply_measurement(const MeasurementSet& ms, const std::function<double(Point2)>& u,
                              const Mesh& mesh, int degree = 8);

// Sparse N-by-n_free matrix of the averaging functionals against the free
// basis of dof_map, so row i applied to a coefficient vector is measurement i.
SparseMatrix measurement_matrix(const MeasurementSet& ms, const Mesh& mesh,
                                const DofMap& dof_map, int degree = 8);

// Measurement operator column by column: W(:,k) is the measurement vector of
// the plate solve whose load is the k-th free basis function of the source
// space. Both spaces live on the same mesh.
DenseMatrix build_w(std::shared_ptr<const Mesh> mesh, ElementKind state_kind,
                    ElementKind source_kind, const MeasurementSet& ms);

// Broken Sobolev norms of order k in {0, 1, 2}, integrated cell by cell.
double fem_norm(const FemFunction& v, int k);
// Norm of a - b where the two functions live on (possibly different) meshes
// of one nested refinement family; integration runs on the finer mesh.
double fem_norm_diff(const FemFunction& a, const FemFunction& b, int k);

}  // namespace plateinv
