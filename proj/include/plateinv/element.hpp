#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "plateinv/mesh.hpp"

namespace plateinv {

enum class ElementKind { BFS, Morley };

enum class LocalDofKind { Value, Dx, Dy, Dxy, EdgeNormal };

// One local degree of freedom: its functional kind and the cell-local vertex
// or edge it is attached to.
struct LocalDof {
  LocalDofKind kind = LocalDofKind::Value;
  int entity = 0;
};

// Local dof layout. BFS: 16 dofs, {Value, Dx, Dy, Dxy} at each of the 4
// corners in cell order. Morley: 6 dofs, Value at the 3 vertices followed by
// EdgeNormal at the midpoint of the edge opposite each vertex, taken along
// the outward normal.
int dof_count(ElementKind kind);
LocalDof local_dof(ElementKind kind, int index);

enum class FormKind { Biharmonic, H1, Mass };

// Quadrature rule in reference coordinates: unit square for rectangles, unit
// right triangle (0,0),(1,0),(0,1) for triangles. Weights sum to the
// reference measure; monomials up to exact_degree integrate to 1e-13.
struct Quadrature {
  std::vector<Point2> points;
  std::vector<double> weights;
  int exact_degree = 0;
};

// Physical cell geometry, corners in counterclockwise order (rectangles start
// at the lower-left corner; triangles use the first three entries).
struct CellGeometry {
  CellKind kind = CellKind::Rectangle;
  std::array<Point2, 4> v;
};

CellGeometry rect_geometry(double x0, double y0, double x1, double y1);
CellGeometry tri_geometry(Point2 a, Point2 b, Point2 c);
CellGeometry cell_geometry(const Mesh& mesh, int cell);

// Derivative multi-index (dx, dy) with dx + dy <= 2.
struct Deriv {
  int dx = 0;
  int dy = 0;
};

// Bicubic Hermite shape function of the given dof, evaluated at a physical
// point of the rectangle. Derivative dofs are dual to physical derivatives
// (they scale with the cell edge lengths).
double bfs_basis(const CellGeometry& cell, Point2 p, const LocalDof& dof, Deriv deriv);

// Quadratic Morley shape function of the given dof at a physical point of the
// triangle. Edge dofs are dual to outward-normal midpoint derivatives.
double morley_basis(const CellGeometry& cell, Point2 p, const LocalDof& dof, Deriv deriv);

// Rectangles: tensor Gauss-Legendre with ceil((degree+1)/2) points per axis.
// Triangles: symmetric rules; unsupported degrees fall back to the next
// higher available rule, never lower.
Quadrature quadrature_rule(CellKind kind, int degree);

// Element matrix of the requested bilinear form. Biharmonic is
// (Laplacian, Laplacian) for BFS and the full Hessian contraction for Morley.
Eigen::MatrixXd local_matrix(ElementKind kind, const CellGeometry& cell, FormKind form);

// Element load vector of f against the shape functions, integrated with a
// rule of the requested degree.
Eigen::VectorXd local_load(ElementKind kind, const CellGeometry& cell,
                           const std::function<double(Point2)>& f, int degree);

// All shape functions (or one derivative thereof) at one point; used by
// assembly and evaluation loops.
struct MappedPoint {
  Point2 p;
  double w = 0.0;
};

// Reference-to-physical map; weights carry the Jacobian determinant, so they
// sum to the cell area.
void map_quadrature(const CellGeometry& cell, const Quadrature& q, std::vector<MappedPoint>& out);

// Degree that integrates every product of two basis derivatives of the family
// exactly on an affine cell.
int form_quadrature_degree(ElementKind kind);

void basis_row(ElementKind kind, const CellGeometry& cell, Point2 p, Deriv deriv,
               Eigen::VectorXd& out);

}  // namespace plateinv
