#include "plateinv/forward.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace plateinv {

namespace {

constexpr double kGeomTol = 1e-12;

bool rect_contains(const CellGeometry& g, Point2 p) {
  return p.x >= g.v[0].x - kGeomTol && p.x <= g.v[2].x + kGeomTol &&
         p.y >= g.v[0].y - kGeomTol && p.y <= g.v[2].y + kGeomTol;
}

bool tri_contains(const CellGeometry& g, Point2 p) {
  const Point2& a = g.v[0];
  const Point2& b = g.v[1];
  const Point2& c = g.v[2];
  double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  double l1 = ((b.x - p.x) * (c.y - p.y) - (c.x - p.x) * (b.y - p.y)) / det;
  double l2 = ((c.x - p.x) * (a.y - p.y) - (a.x - p.x) * (c.y - p.y)) / det;
  double l3 = 1.0 - l1 - l2;
  double tol = 1e-10;
  return l1 >= -tol && l2 >= -tol && l3 >= -tol;
}

bool cell_contains(const CellGeometry& g, Point2 p) {
  return g.kind == CellKind::Rectangle ? rect_contains(g, p) : tri_contains(g, p);
}

double polygon_area(const std::vector<Point2>& poly) {
  double s = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    s += p.x * q.y - q.x * p.y;
  }
  return 0.5 * s;
}

// One Sutherland-Hodgman pass: keep the part of the (ccw) polygon with
// sign*(coord - bound) >= 0, where coord is x (axis 0) or y (axis 1).
std::vector<Point2> clip_half_plane(const std::vector<Point2>& poly, int axis, double bound,
                                    double sign) {
  std::vector<Point2> out;
  out.reserve(poly.size() + 2);
  auto coord = [axis](const Point2& p) { return axis == 0 ? p.x : p.y; };
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2& p = poly[i];
    const Point2& q = poly[(i + 1) % poly.size()];
    double sp = sign * (coord(p) - bound);
    double sq = sign * (coord(q) - bound);
    if ((sp >= 0.0) != (sq >= 0.0)) {
      double t = sp / (sp - sq);
      out.push_back({p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)});
    }
    if (sq >= 0.0) out.push_back(q);
  }
  return out;
}

// Quadrature for region ∩ cell: exact interval intersection for rectangles,
// polygon clipping plus fan triangulation for triangles. Returns false when
// the intersection is empty; weights sum to the intersection area.
bool clip_region_to_cell(const Mesh& mesh, int cell, const RectRegion& r, int degree,
                         std::vector<MappedPoint>& out) {
  out.clear();
  CellGeometry g = cell_geometry(mesh, cell);
  if (g.kind == CellKind::Rectangle) {
    double x0 = std::max(r.x0, g.v[0].x), x1 = std::min(r.x1, g.v[2].x);
    double y0 = std::max(r.y0, g.v[0].y), y1 = std::min(r.y1, g.v[2].y);
    if (x1 - x0 <= 0.0 || y1 - y0 <= 0.0) return false;
    map_quadrature(rect_geometry(x0, y0, x1, y1), quadrature_rule(CellKind::Rectangle, degree),
                   out);
    return true;
  }
  std::vector<Point2> poly = {g.v[0], g.v[1], g.v[2]};
  poly = clip_half_plane(poly, 0, r.x0, 1.0);
  if (poly.size() >= 3) poly = clip_half_plane(poly, 0, r.x1, -1.0);
  if (poly.size() >= 3) poly = clip_half_plane(poly, 1, r.y0, 1.0);
  if (poly.size() >= 3) poly = clip_half_plane(poly, 1, r.y1, -1.0);
  if (poly.size() < 3) return false;
  double cell_size = cell_area(mesh, cell);
  if (polygon_area(poly) <= 1e-14 * cell_size) return false;
  const Quadrature& rule = quadrature_rule(CellKind::Triangle, degree);
  std::vector<MappedPoint> piece;
  for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
    map_quadrature(tri_geometry(poly[0], poly[k], poly[k + 1]), rule, piece);
    out.insert(out.end(), piece.begin(), piece.end());
  }
  return true;
}

void check_region(const RectRegion& r, int index) {
  if (!(r.x1 > r.x0) || !(r.y1 > r.y0)) {
    throw std::invalid_argument("apply_measurement: region " + std::to_string(index + 1) +
                                " has nonpositive area");
  }
}

void check_coverage(double covered, const RectRegion& r, int index) {
  if (std::abs(covered - r.area()) > 1e-9 * r.area()) {
    throw std::runtime_error("apply_measurement: region " + std::to_string(index + 1) +
                             " is not fully inside the meshed domain");
  }
}

double eval_dof_vector(const DofMap& dm, const DenseVector& coeffs, int cell, int local) {
  int fi = dm.free_index[dm.cell_to_global[cell][local]];
  return fi < 0 ? 0.0 : dm.cell_dof_sign[cell][local] * coeffs[fi];
}

bool cell_touches_point(const Mesh& mesh, int cell, Point2 p) {
  return cell_contains(cell_geometry(mesh, cell), p);
}

}  // namespace

int FemFunction::locate_cell(Point2 p) const {
  for (int c = 0; c < mesh->n_cells(); ++c) {
    if (cell_contains(cell_geometry(*mesh, c), p)) return c;
  }
  return -1;
}

DenseVector FemFunction::cell_coeffs(int cell) const {
  int nd = dof_count(kind);
  DenseVector local(nd);
  for (int i = 0; i < nd; ++i) local[i] = eval_dof_vector(*dof_map, coeffs, cell, i);
  return local;
}

double FemFunction::derivative_in_cell(int cell, Point2 p, Deriv d) const {
  CellGeometry g = cell_geometry(*mesh, cell);
  Eigen::VectorXd row;
  basis_row(kind, g, p, d, row);
  return row.dot(cell_coeffs(cell));
}

double FemFunction::value(Point2 p) const {
  int c = locate_cell(p);
  if (c < 0) throw std::domain_error("FemFunction::value: point outside the mesh");
  return derivative_in_cell(c, p, {0, 0});
}

Eigen::Vector2d FemFunction::gradient(Point2 p) const {
  int c = locate_cell(p);
  if (c < 0) throw std::domain_error("FemFunction::gradient: point outside the mesh");
  return {derivative_in_cell(c, p, {1, 0}), derivative_in_cell(c, p, {0, 1})};
}

Eigen::Matrix2d FemFunction::hessian(Point2 p) const {
  int c = locate_cell(p);
  if (c < 0) throw std::domain_error("FemFunction::hessian: point outside the mesh");
  double dxx = derivative_in_cell(c, p, {2, 0});
  double dxy = derivative_in_cell(c, p, {1, 1});
  double dyy = derivative_in_cell(c, p, {0, 2});
  Eigen::Matrix2d h;
  h << dxx, dxy, dxy, dyy;
  return h;
}

MeasurementSet default_measurement_set(Domain domain) {
  if (domain == Domain::Square) {
    return {{{0.25, 0.25, 0.5, 0.5}, {0.5, 0.5, 0.75, 0.75}}};
  }
  return {{{-0.75, 0.25, -0.25, 0.75}}};
}

FemFunction solve_forward(std::shared_ptr<const Mesh> mesh, ElementKind kind,
                          const std::function<double(Point2)>& f,
                          const ForwardOptions& options) {
  if (!mesh) throw std::invalid_argument("solve_forward: null mesh");
  auto dm = std::make_shared<DofMap>(build_dof_map(*mesh, kind));
  SparseMatrix a = assemble_form(*mesh, kind, FormKind::Biharmonic, *dm);
  DenseVector rhs;
  if (options.corner_boost) {
    const Mesh& m = *mesh;
    Point2 corner = options.corner;
    rhs = assemble_load(m, kind, f, *dm, [&m, corner, &options](int c) {
      return cell_touches_point(m, c, corner) ? options.corner_degree : options.load_degree;
    });
  } else {
    rhs = assemble_load(*mesh, kind, f, *dm, options.load_degree);
  }
  SpdFactorization fac = factor_spd(a);
  return FemFunction{std::move(mesh), kind, std::move(dm), fac.solve(rhs)};
}

DenseVector apply_measurement(const MeasurementSet& ms, const FemFunction& u, int degree) {
  if (!u.mesh) throw std::invalid_argument("apply_measurement: empty function");
  DenseVector out(ms.size());
  std::vector<MappedPoint> pts;
  for (int i = 0; i < ms.size(); ++i) {
    const RectRegion& r = ms.regions[i];
    check_region(r, i);
    double acc = 0.0, covered = 0.0;
    for (int c = 0; c < u.mesh->n_cells(); ++c) {
      if (!clip_region_to_cell(*u.mesh, c, r, degree, pts)) continue;
      CellGeometry g = cell_geometry(*u.mesh, c);
      DenseVector local = u.cell_coeffs(c);
      Eigen::VectorXd row;
      for (const MappedPoint& mp : pts) {
        basis_row(u.kind, g, mp.p, {0, 0}, row);
        acc += mp.w * row.dot(local);
        covered += mp.w;
      }
    }
    check_coverage(covered, r, i);
    out[i] = acc / r.area();
  }
  return out;
}

DenseVector apply_measurement(const MeasurementSet& ms, const std::function<double(Point2)>& u,
                              const Mesh& mesh, int degree) {
  DenseVector out(ms.size());
  std::vector<MappedPoint> pts;
  for (int i = 0; i < ms.size(); ++i) {
    const RectRegion& r = ms.regions[i];
    check_region(r, i);
    double acc = 0.0, covered = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      if (!clip_region_to_cell(mesh, c, r, degree, pts)) continue;
      for (const MappedPoint& mp : pts) {
        acc += mp.w * u(mp.p);
        covered += mp.w;
      }
    }
    check_coverage(covered, r, i);
    out[i] = acc / r.area();
  }
  return out;
}

SparseMatrix measurement_matrix(const MeasurementSet& ms, const Mesh& mesh,
                                const DofMap& dof_map, int degree) {
  int nd = dof_count(dof_map.kind);
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<MappedPoint> pts;
  Eigen::VectorXd row(nd), local(nd);
  for (int i = 0; i < ms.size(); ++i) {
    const RectRegion& r = ms.regions[i];
    check_region(r, i);
    double covered = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      if (!clip_region_to_cell(mesh, c, r, degree, pts)) continue;
      CellGeometry g = cell_geometry(mesh, c);
      local.setZero();
      for (const MappedPoint& mp : pts) {
        basis_row(dof_map.kind, g, mp.p, {0, 0}, row);
        local += mp.w * row;
        covered += mp.w;
      }
      for (int j = 0; j < nd; ++j) {
        int fj = dof_map.free_index[dof_map.cell_to_global[c][j]];
        if (fj < 0) continue;
        trips.emplace_back(i, fj, dof_map.cell_dof_sign[c][j] * local[j] / r.area());
      }
    }
    check_coverage(covered, r, i);
  }
  SparseMatrix phi(ms.size(), dof_map.n_free);
  phi.setFromTriplets(trips.begin(), trips.end());
  phi.makeCompressed();
  return phi;
}

DenseMatrix build_w(std::shared_ptr<const Mesh> mesh, ElementKind state_kind,
                    ElementKind source_kind, const MeasurementSet& ms) {
  if (!mesh) throw std::invalid_argument("build_w: null mesh");
  DofMap dm_state = build_dof_map(*mesh, state_kind);
  DofMap dm_source = build_dof_map(*mesh, source_kind);
  SparseMatrix a = assemble_form(*mesh, state_kind, FormKind::Biharmonic, dm_state);
  SparseMatrix s = assemble_coupling(*mesh, source_kind, state_kind, dm_source, dm_state);
  int degree = state_kind == ElementKind::BFS ? 8 : 6;
  SparseMatrix phi = measurement_matrix(ms, *mesh, dm_state, degree);
  SpdFactorization fac = factor_spd(a);
  DenseMatrix w(ms.size(), dm_source.n_free);
  const int chunk = 256;
  for (int k0 = 0; k0 < dm_source.n_free; k0 += chunk) {
    int nc = std::min(chunk, dm_source.n_free - k0);
    DenseMatrix rhs = DenseMatrix(s.middleCols(k0, nc));
    DenseMatrix x = fac.solve_matrix(rhs);
    w.middleCols(k0, nc) = phi * x;
  }
  return w;
}

namespace {

double accumulate_norm_sq(const FemFunction& v, int k, const CellGeometry& g,
                          const std::vector<MappedPoint>& pts, const DenseVector& local) {
  Eigen::VectorXd row;
  double acc = 0.0;
  for (const MappedPoint& mp : pts) {
    if (k == 0) {
      basis_row(v.kind, g, mp.p, {0, 0}, row);
      double val = row.dot(local);
      acc += mp.w * val * val;
    } else if (k == 1) {
      basis_row(v.kind, g, mp.p, {1, 0}, row);
      double gx = row.dot(local);
      basis_row(v.kind, g, mp.p, {0, 1}, row);
      double gy = row.dot(local);
      acc += mp.w * (gx * gx + gy * gy);
    } else {
      basis_row(v.kind, g, mp.p, {2, 0}, row);
      double dxx = row.dot(local);
      basis_row(v.kind, g, mp.p, {1, 1}, row);
      double dxy = row.dot(local);
      basis_row(v.kind, g, mp.p, {0, 2}, row);
      double dyy = row.dot(local);
      acc += mp.w * (dxx * dxx + 2.0 * dxy * dxy + dyy * dyy);
    }
  }
  return acc;
}

void check_norm_order(int k) {
  if (k < 0 || k > 2) throw std::invalid_argument("fem_norm: k must be 0, 1, or 2");
}

}  // namespace

double fem_norm(const FemFunction& v, int k) {
  check_norm_order(k);
  if (!v.mesh) throw std::invalid_argument("fem_norm: empty function");
  Quadrature rule = quadrature_rule(v.mesh->cell_kind, form_quadrature_degree(v.kind));
  std::vector<MappedPoint> pts;
  double acc = 0.0;
  for (int c = 0; c < v.mesh->n_cells(); ++c) {
    CellGeometry g = cell_geometry(*v.mesh, c);
    map_quadrature(g, rule, pts);
    acc += accumulate_norm_sq(v, k, g, pts, v.cell_coeffs(c));
  }
  return std::sqrt(acc);
}

double fem_norm_diff(const FemFunction& a, const FemFunction& b, int k) {
  check_norm_order(k);
  if (!a.mesh || !b.mesh) throw std::invalid_argument("fem_norm_diff: empty function");
  if (a.kind != b.kind) {
    throw std::invalid_argument("fem_norm_diff: functions use different element families");
  }
  const FemFunction& fine = a.mesh->level >= b.mesh->level ? a : b;
  const FemFunction& coarse = a.mesh->level >= b.mesh->level ? b : a;
  int gap = fine.mesh->level - coarse.mesh->level;

  const Mesh* anc = fine.mesh.get();
  for (int s = 0; s < gap; ++s) {
    if (!anc->parent) {
      throw std::invalid_argument("fem_norm_diff: meshes are not from one refinement family");
    }
    anc = anc->parent.get();
  }
  if (anc->n_cells() != coarse.mesh->n_cells()) {
    throw std::invalid_argument("fem_norm_diff: meshes are not from one refinement family");
  }

  Quadrature rule = quadrature_rule(fine.mesh->cell_kind, form_quadrature_degree(fine.kind));
  std::vector<MappedPoint> pts;
  Eigen::VectorXd row;
  double acc = 0.0;
  for (int c = 0; c < fine.mesh->n_cells(); ++c) {
    int idx = c;
    const Mesh* m = fine.mesh.get();
    for (int s = 0; s < gap; ++s) {
      idx = m->parent_cell[idx];
      m = m->parent.get();
    }
    CellGeometry gf = cell_geometry(*fine.mesh, c);
    CellGeometry gc = cell_geometry(*coarse.mesh, idx);
    DenseVector lf = fine.cell_coeffs(c);
    DenseVector lc = coarse.cell_coeffs(idx);
    map_quadrature(gf, rule, pts);
    auto diff = [&](Point2 p, Deriv d) {
      basis_row(fine.kind, gf, p, d, row);
      double vf = row.dot(lf);
      basis_row(coarse.kind, gc, p, d, row);
      return vf - row.dot(lc);
    };
    for (const MappedPoint& mp : pts) {
      if (k == 0) {
        double v = diff(mp.p, {0, 0});
        acc += mp.w * v * v;
      } else if (k == 1) {
        double gx = diff(mp.p, {1, 0});
        double gy = diff(mp.p, {0, 1});
        acc += mp.w * (gx * gx + gy * gy);
      } else {
        double dxx = diff(mp.p, {2, 0});
        double dxy = diff(mp.p, {1, 1});
        double dyy = diff(mp.p, {0, 2});
        acc += mp.w * (dxx * dxx + 2.0 * dxy * dxy + dyy * dyy);
      }
    }
  }
  return std::sqrt(acc);
}

}  // namespace plateinv
