#pragma once

#include <Eigen/SparseCore>
#include <iosfwd>

#include "plateinv/element.hpp"

namespace plateinv {

using SparseMatrix = Eigen::SparseMatrix<double>;
using DenseVector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

// Global dof numbering with clamped-boundary elimination. BFS numbers the
// {Value, Dx, Dy, Dxy} quadruple 4*vertex+component and constrains all four
// at boundary vertices. Morley numbers vertex values first and edge-normal
// dofs after them (n_vertices + edge), constraining boundary vertices and
// boundary edges. Free dofs are numbered in increasing global-dof order.
struct DofMap {
  ElementKind kind = ElementKind::BFS;
  int n_total = 0;
  int n_free = 0;
  std::vector<std::vector<int>> cell_to_global;
  // Per-cell, per-local-dof factor relating the element's outward-normal dof
  // convention to the mesh's global edge normal: +1 or -1 for Morley edge
  // dofs, +1 everywhere else.
  std::vector<std::vector<double>> cell_dof_sign;
  std::vector<int> free_index;  // global dof -> free index, or -1 if constrained
};

DofMap build_dof_map(const Mesh& mesh, ElementKind kind);

// Sum of element matrices of the form, restricted to free rows and columns.
SparseMatrix assemble_form(const Mesh& mesh, ElementKind kind, FormKind form,
                           const DofMap& dof_map);

// Load vector of f against the free basis functions, with quadrature of the
// given degree (optionally per cell).
DenseVector assemble_load(const Mesh& mesh, ElementKind kind,
                          const std::function<double(Point2)>& f, const DofMap& dof_map,
                          int degree);
DenseVector assemble_load(const Mesh& mesh, ElementKind kind,
                          const std::function<double(Point2)>& f, const DofMap& dof_map,
                          const std::function<int(int)>& degree_of_cell);

// Mixed mass matrix [integral of test_i * trial_j] between two element
// families on one shared mesh; rows belong to the test space, columns to the
// trial space. Equal kinds reproduce the Mass form matrix.
SparseMatrix assemble_coupling(const Mesh& mesh, ElementKind trial_kind, ElementKind test_kind,
                               const DofMap& trial_map, const DofMap& test_map);

// Plain-text dump, one "row col value" line per entry, 1-based indices.
void write_matrix_text(const SparseMatrix& m, std::ostream& out);

}  // namespace plateinv
