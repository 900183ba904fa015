#include "plateinv/assemble.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace plateinv {

namespace {

// Outward unit normal of local edge i (opposite vertex i) of a ccw triangle.
Point2 tri_outward_normal(const CellGeometry& g, int i) {
  const Point2& p = g.v[(i + 1) % 3];
  const Point2& q = g.v[(i + 2) % 3];
  double tx = q.x - p.x;
  double ty = q.y - p.y;
  double len = std::hypot(tx, ty);
  return {ty / len, -tx / len};
}

void check_kind_matches(const Mesh& mesh, ElementKind kind, const char* op) {
  CellKind want = kind == ElementKind::BFS ? CellKind::Rectangle : CellKind::Triangle;
  if (mesh.cell_kind != want) {
    throw std::invalid_argument(std::string(op) + ": element family does not match the mesh cell shape");
  }
}

}  // namespace

DofMap build_dof_map(const Mesh& mesh, ElementKind kind) {
  check_kind_matches(mesh, kind, "build_dof_map");
  DofMap dm;
  dm.kind = kind;
  int nd = dof_count(kind);
  dm.cell_to_global.assign(mesh.n_cells(), std::vector<int>(nd, -1));
  dm.cell_dof_sign.assign(mesh.n_cells(), std::vector<double>(nd, 1.0));
  std::vector<char> constrained;

  if (kind == ElementKind::BFS) {
    dm.n_total = 4 * mesh.n_vertices();
    constrained.assign(dm.n_total, 0);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      if (mesh.boundary_vertex[v]) {
        for (int comp = 0; comp < 4; ++comp) constrained[4 * v + comp] = 1;
      }
    }
    for (int c = 0; c < mesh.n_cells(); ++c) {
      for (int i = 0; i < nd; ++i) {
        dm.cell_to_global[c][i] = 4 * mesh.cells[c][i / 4] + i % 4;
      }
    }
  } else {
    dm.n_total = mesh.n_vertices() + mesh.n_edges();
    constrained.assign(dm.n_total, 0);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      if (mesh.boundary_vertex[v]) constrained[v] = 1;
    }
    for (int e = 0; e < mesh.n_edges(); ++e) {
      if (mesh.edges[e].boundary) constrained[mesh.n_vertices() + e] = 1;
    }
    for (int c = 0; c < mesh.n_cells(); ++c) {
      CellGeometry g = cell_geometry(mesh, c);
      for (int i = 0; i < 3; ++i) {
        dm.cell_to_global[c][i] = mesh.cells[c][i];
        int e = mesh.cell_edges[c][i];
        dm.cell_to_global[c][3 + i] = mesh.n_vertices() + e;
        Point2 out = tri_outward_normal(g, i);
        const Point2& gn = mesh.edges[e].normal;
        dm.cell_dof_sign[c][3 + i] = out.x * gn.x + out.y * gn.y > 0 ? 1.0 : -1.0;
      }
    }
  }

  dm.free_index.assign(dm.n_total, -1);
  for (int d = 0; d < dm.n_total; ++d) {
    if (!constrained[d]) dm.free_index[d] = dm.n_free++;
  }
  return dm;
}

SparseMatrix assemble_form(const Mesh& mesh, ElementKind kind, FormKind form,
                           const DofMap& dof_map) {
  check_kind_matches(mesh, kind, "assemble_form");
  int nd = dof_count(kind);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.n_cells()) * nd * nd);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    Eigen::MatrixXd local = local_matrix(kind, cell_geometry(mesh, c), form);
    const auto& glob = dof_map.cell_to_global[c];
    const auto& sign = dof_map.cell_dof_sign[c];
    for (int i = 0; i < nd; ++i) {
      int fi = dof_map.free_index[glob[i]];
      if (fi < 0) continue;
      for (int j = 0; j < nd; ++j) {
        int fj = dof_map.free_index[glob[j]];
        if (fj < 0) continue;
        trips.emplace_back(fi, fj, sign[i] * sign[j] * local(i, j));
      }
    }
  }
  SparseMatrix a(dof_map.n_free, dof_map.n_free);
  a.setFromTriplets(trips.begin(), trips.end());
  a.makeCompressed();
  return a;
}

DenseVector assemble_load(const Mesh& mesh, ElementKind kind,
                          const std::function<double(Point2)>& f, const DofMap& dof_map,
                          const std::function<int(int)>& degree_of_cell) {
  check_kind_matches(mesh, kind, "assemble_load");
  int nd = dof_count(kind);
  DenseVector rhs = DenseVector::Zero(dof_map.n_free);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    Eigen::VectorXd local = local_load(kind, cell_geometry(mesh, c), f, degree_of_cell(c));
    const auto& glob = dof_map.cell_to_global[c];
    const auto& sign = dof_map.cell_dof_sign[c];
    for (int i = 0; i < nd; ++i) {
      int fi = dof_map.free_index[glob[i]];
      if (fi >= 0) rhs[fi] += sign[i] * local[i];
    }
  }
  return rhs;
}

DenseVector assemble_load(const Mesh& mesh, ElementKind kind,
                          const std::function<double(Point2)>& f, const DofMap& dof_map,
                          int degree) {
  return assemble_load(mesh, kind, f, dof_map, [degree](int) { return degree; });
}

SparseMatrix assemble_coupling(const Mesh& mesh, ElementKind trial_kind, ElementKind test_kind,
                               const DofMap& trial_map, const DofMap& test_map) {
  check_kind_matches(mesh, trial_kind, "assemble_coupling");
  check_kind_matches(mesh, test_kind, "assemble_coupling");
  int nt = dof_count(test_kind);
  int nu = dof_count(trial_kind);
  int degree = std::max(form_quadrature_degree(trial_kind), form_quadrature_degree(test_kind));
  Quadrature rule = quadrature_rule(mesh.cell_kind, degree);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(mesh.n_cells()) * nt * nu);
  Eigen::VectorXd row_test(nt), row_trial(nu);
  std::vector<MappedPoint> pts;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellGeometry g = cell_geometry(mesh, c);
    map_quadrature(g, rule, pts);
    Eigen::MatrixXd local = Eigen::MatrixXd::Zero(nt, nu);
    for (const MappedPoint& mp : pts) {
      basis_row(test_kind, g, mp.p, {0, 0}, row_test);
      basis_row(trial_kind, g, mp.p, {0, 0}, row_trial);
      local.noalias() += mp.w * row_test * row_trial.transpose();
    }
    const auto& gt = test_map.cell_to_global[c];
    const auto& st = test_map.cell_dof_sign[c];
    const auto& gu = trial_map.cell_to_global[c];
    const auto& su = trial_map.cell_dof_sign[c];
    for (int i = 0; i < nt; ++i) {
      int fi = test_map.free_index[gt[i]];
      if (fi < 0) continue;
      for (int j = 0; j < nu; ++j) {
        int fj = trial_map.free_index[gu[j]];
        if (fj < 0) continue;
        trips.emplace_back(fi, fj, st[i] * su[j] * local(i, j));
      }
    }
  }
  SparseMatrix s(test_map.n_free, trial_map.n_free);
  s.setFromTriplets(trips.begin(), trips.end());
  s.makeCompressed();
  return s;
}

void write_matrix_text(const SparseMatrix& m, std::ostream& out) {
  char buf[96];
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(it.row()) + 1,
                    static_cast<long>(it.col()) + 1, it.value());
      out << buf;
    }
  }
}

}  // namespace plateinv
