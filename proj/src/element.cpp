#include "plateinv/element.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace plateinv {

namespace {

// Cubic Hermite basis on [0,1]: value/slope pairs at both endpoints.
// which: 0 = value at 0, 1 = slope at 0, 2 = value at 1, 3 = slope at 1.
double hermite1d(int which, int order, double t) {
  switch (which * 3 + order) {
    case 0: return 1.0 - 3.0 * t * t + 2.0 * t * t * t;
    case 1: return -6.0 * t + 6.0 * t * t;
    case 2: return -6.0 + 12.0 * t;
    case 3: return t - 2.0 * t * t + t * t * t;
    case 4: return 1.0 - 4.0 * t + 3.0 * t * t;
    case 5: return -4.0 + 6.0 * t;
    case 6: return 3.0 * t * t - 2.0 * t * t * t;
    case 7: return 6.0 * t - 6.0 * t * t;
    case 8: return 6.0 - 12.0 * t;
    case 9: return -t * t + t * t * t;
    case 10: return -2.0 * t + 3.0 * t * t;
    case 11: return -2.0 + 6.0 * t;
    default: throw std::invalid_argument("hermite1d: derivative order > 2");
  }
}

void check_deriv(Deriv d) {
  if (d.dx < 0 || d.dy < 0 || d.dx + d.dy > 2) {
    throw std::invalid_argument("basis derivative order must satisfy 0 <= dx+dy <= 2");
  }
}

struct Barycentric {
  // lambda_i(x, y) = alpha[i] + beta[i] * x + gamma[i] * y
  std::array<double, 3> alpha, beta, gamma;
  double area = 0.0;
};

Barycentric barycentric_coeffs(const CellGeometry& cell) {
  const Point2& p0 = cell.v[0];
  const Point2& p1 = cell.v[1];
  const Point2& p2 = cell.v[2];
  const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  const double area = 0.5 * det;
  if (std::abs(area) < 1e-14) {
    throw std::invalid_argument("morley_basis: degenerate triangle (area < 1e-14)");
  }
  Barycentric b;
  b.area = area;
  const std::array<Point2, 3> p = {p0, p1, p2};
  for (int i = 0; i < 3; ++i) {
    const Point2& pa = p[(i + 1) % 3];
    const Point2& pb = p[(i + 2) % 3];
    b.beta[i] = (pa.y - pb.y) / det;
    b.gamma[i] = (pb.x - pa.x) / det;
    b.alpha[i] = (pa.x * pb.y - pb.x * pa.y) / det;
  }
  return b;
}

// Morley shapes written as sum_j a_j (lambda_j^2 - lambda_j) + sum_j b_j lambda_j.
struct MorleyShape {
  std::array<double, 3> a{};
  std::array<double, 3> b{};
};

MorleyShape morley_shape(const Barycentric& bc, const LocalDof& dof) {
  auto grad_dot = [&](int i, int j) { return bc.beta[i] * bc.beta[j] + bc.gamma[i] * bc.gamma[j]; };
  MorleyShape s;
  if (dof.kind == LocalDofKind::EdgeNormal) {
    const int i = dof.entity;
    s.a[i] = 1.0 / std::sqrt(grad_dot(i, i));
  } else if (dof.kind == LocalDofKind::Value) {
    const int i = dof.entity;
    s.a[i] = 1.0;
    s.b[i] = 1.0;
    for (int j = 0; j < 3; ++j) {
      if (j != i) s.a[j] = grad_dot(i, j) / grad_dot(j, j);
    }
  } else {
    throw std::invalid_argument("morley_basis: dof kind must be Value or EdgeNormal");
  }
  return s;
}

double eval_morley(const Barycentric& bc, const MorleyShape& s, Point2 p, Deriv d) {
  double out = 0.0;
  for (int j = 0; j < 3; ++j) {
    const double lam = bc.alpha[j] + bc.beta[j] * p.x + bc.gamma[j] * p.y;
    if (d.dx == 0 && d.dy == 0) {
      out += s.a[j] * (lam * lam - lam) + s.b[j] * lam;
    } else if (d.dx == 1 && d.dy == 0) {
      out += (s.a[j] * (2.0 * lam - 1.0) + s.b[j]) * bc.beta[j];
    } else if (d.dx == 0 && d.dy == 1) {
      out += (s.a[j] * (2.0 * lam - 1.0) + s.b[j]) * bc.gamma[j];
    } else if (d.dx == 2) {
      out += 2.0 * s.a[j] * bc.beta[j] * bc.beta[j];
    } else if (d.dy == 2) {
      out += 2.0 * s.a[j] * bc.gamma[j] * bc.gamma[j];
    } else {
      out += 2.0 * s.a[j] * bc.beta[j] * bc.gamma[j];
    }
  }
  return out;
}

// Gauss-Legendre nodes/weights on [0,1].
void gauss_legendre_01(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (4.0 * i + 3.0) / (4.0 * n + 2.0));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double step = p1 / dp;
      t -= step;
      if (std::abs(step) < 1e-15) break;
    }
    x[i] = 0.5 * (1.0 + t);
    w[i] = 1.0 / ((1.0 - t * t) * dp * dp);
  }
}

Quadrature tensor_gauss(int degree) {
  const int n = std::max(1, (degree + 2) / 2);
  std::vector<double> x, w;
  gauss_legendre_01(n, x, w);
  Quadrature q;
  q.exact_degree = 2 * n - 1;
  q.points.reserve(n * n);
  q.weights.reserve(n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      q.points.push_back({x[i], x[j]});
      q.weights.push_back(w[i] * w[j]);
    }
  }
  return q;
}

void push_barycentric(Quadrature& q, double b1, double b2, double b3, double weight) {
  q.points.push_back({b2, b3});
  q.weights.push_back(weight);
  (void)b1;
}

Quadrature triangle_rule_deg1() {
  Quadrature q;
  q.exact_degree = 1;
  push_barycentric(q, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0.5);
  return q;
}

Quadrature triangle_rule_deg2() {
  Quadrature q;
  q.exact_degree = 2;
  const double a = 1.0 / 6, b = 2.0 / 3, w = 1.0 / 6;
  push_barycentric(q, b, a, a, w);
  push_barycentric(q, a, b, a, w);
  push_barycentric(q, a, a, b, w);
  return q;
}

Quadrature triangle_rule_deg5() {
  Quadrature q;
  q.exact_degree = 5;
  const double s15 = std::sqrt(15.0);
  const double a1 = (6.0 - s15) / 21.0, w1 = (155.0 - s15) / 1200.0 * 0.5;
  const double a2 = (6.0 + s15) / 21.0, w2 = (155.0 + s15) / 1200.0 * 0.5;
  push_barycentric(q, 1.0 / 3, 1.0 / 3, 1.0 / 3, 9.0 / 40.0 * 0.5);
  for (auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
    const double c = 1.0 - 2.0 * a;
    push_barycentric(q, c, a, a, w);
    push_barycentric(q, a, c, a, w);
    push_barycentric(q, a, a, c, w);
  }
  return q;
}

// Collapsed tensor rule on the reference triangle, symmetrized over the six
// barycentric permutations so affine symmetries are integrated exactly.
Quadrature triangle_rule_general(int degree) {
  const int nv = (degree + 2) / 2;      // 2*nv - 1 >= degree
  const int nu = (degree + 3) / 2;      // 2*nu - 1 >= degree + 1
  std::vector<double> xu, wu, xv, wv;
  gauss_legendre_01(nu, xu, wu);
  gauss_legendre_01(nv, xv, wv);
  Quadrature q;
  q.exact_degree = degree;
  q.points.reserve(6 * nu * nv);
  q.weights.reserve(6 * nu * nv);
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const double x = xu[i];
      const double y = xv[j] * (1.0 - xu[i]);
      const double w = wu[i] * wv[j] * (1.0 - xu[i]) / 6.0;
      const double b1 = 1.0 - x - y, b2 = x, b3 = y;
      push_barycentric(q, b1, b2, b3, w);
      push_barycentric(q, b1, b3, b2, w);
      push_barycentric(q, b2, b1, b3, w);
      push_barycentric(q, b2, b3, b1, w);
      push_barycentric(q, b3, b1, b2, w);
      push_barycentric(q, b3, b2, b1, w);
    }
  }
  return q;
}

const Quadrature& cached_rule(CellKind kind, int degree) {
  static std::map<std::pair<int, int>, Quadrature> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto key = std::make_pair(static_cast<int>(kind), degree);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, quadrature_rule(kind, degree)).first;
  return it->second;
}

}  // namespace

// Reference-to-physical map; weights carry the Jacobian determinant.
void map_quadrature(const CellGeometry& cell, const Quadrature& q, std::vector<MappedPoint>& out) {
  out.resize(q.points.size());
  if (cell.kind == CellKind::Rectangle) {
    const double x0 = cell.v[0].x, y0 = cell.v[0].y;
    const double hx = cell.v[2].x - x0, hy = cell.v[2].y - y0;
    const double jac = hx * hy;
    for (size_t i = 0; i < q.points.size(); ++i) {
      out[i].p = {x0 + q.points[i].x * hx, y0 + q.points[i].y * hy};
      out[i].w = q.weights[i] * jac;
    }
  } else {
    const Point2& a = cell.v[0];
    const Point2& b = cell.v[1];
    const Point2& c = cell.v[2];
    const double jac = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    for (size_t i = 0; i < q.points.size(); ++i) {
      const double xi = q.points[i].x, eta = q.points[i].y;
      out[i].p = {a.x + xi * (b.x - a.x) + eta * (c.x - a.x),
                  a.y + xi * (b.y - a.y) + eta * (c.y - a.y)};
      out[i].w = q.weights[i] * jac;
    }
  }
}

int form_quadrature_degree(ElementKind kind) {
  return kind == ElementKind::BFS ? 7 : 5;
}

int dof_count(ElementKind kind) { return kind == ElementKind::BFS ? 16 : 6; }

LocalDof local_dof(ElementKind kind, int index) {
  if (index < 0 || index >= dof_count(kind)) {
    throw std::out_of_range("local_dof: index out of range");
  }
  if (kind == ElementKind::BFS) {
    static const LocalDofKind comp[4] = {LocalDofKind::Value, LocalDofKind::Dx, LocalDofKind::Dy,
                                         LocalDofKind::Dxy};
    return {comp[index % 4], index / 4};
  }
  if (index < 3) return {LocalDofKind::Value, index};
  return {LocalDofKind::EdgeNormal, index - 3};
}

CellGeometry rect_geometry(double x0, double y0, double x1, double y1) {
  CellGeometry g;
  g.kind = CellKind::Rectangle;
  g.v = {Point2{x0, y0}, Point2{x1, y0}, Point2{x1, y1}, Point2{x0, y1}};
  return g;
}

CellGeometry tri_geometry(Point2 a, Point2 b, Point2 c) {
  CellGeometry g;
  g.kind = CellKind::Triangle;
  g.v = {a, b, c, Point2{}};
  return g;
}

CellGeometry cell_geometry(const Mesh& mesh, int cell) {
  CellGeometry g;
  g.kind = mesh.cell_kind;
  const int nv = mesh.vertices_per_cell();
  for (int i = 0; i < nv; ++i) g.v[i] = mesh.vertices[mesh.cells[cell][i]];
  return g;
}

double bfs_basis(const CellGeometry& cell, Point2 p, const LocalDof& dof, Deriv deriv) {
  if (cell.kind != CellKind::Rectangle) {
    throw std::invalid_argument("bfs_basis: rectangle cell required");
  }
  check_deriv(deriv);
  const double x0 = cell.v[0].x, y0 = cell.v[0].y;
  const double hx = cell.v[2].x - x0, hy = cell.v[2].y - y0;
  const double s = (p.x - x0) / hx;
  const double t = (p.y - y0) / hy;
  // corner c: (sx, sy) endpoint flags in the two axes, ccw from lower-left
  static const int sx[4] = {0, 1, 1, 0};
  static const int sy[4] = {0, 0, 1, 1};
  const int cx = sx[dof.entity], cy = sy[dof.entity];
  int which_x = 2 * cx;      // endpoint value function
  int which_y = 2 * cy;
  double scale = 1.0;
  switch (dof.kind) {
    case LocalDofKind::Value:
      break;
    case LocalDofKind::Dx:
      which_x += 1;
      scale = hx;
      break;
    case LocalDofKind::Dy:
      which_y += 1;
      scale = hy;
      break;
    case LocalDofKind::Dxy:
      which_x += 1;
      which_y += 1;
      scale = hx * hy;
      break;
    default:
      throw std::invalid_argument("bfs_basis: EdgeNormal dof not part of this element");
  }
  const double fx = hermite1d(which_x, deriv.dx, s) / std::pow(hx, deriv.dx);
  const double fy = hermite1d(which_y, deriv.dy, t) / std::pow(hy, deriv.dy);
  return scale * fx * fy;
}

double morley_basis(const CellGeometry& cell, Point2 p, const LocalDof& dof, Deriv deriv) {
  if (cell.kind != CellKind::Triangle) {
    throw std::invalid_argument("morley_basis: triangle cell required");
  }
  check_deriv(deriv);
  const Barycentric bc = barycentric_coeffs(cell);
  return eval_morley(bc, morley_shape(bc, dof), p, deriv);
}

Quadrature quadrature_rule(CellKind kind, int degree) {
  if (degree < 0) throw std::invalid_argument("quadrature_rule: degree must be >= 0");
  if (kind == CellKind::Rectangle) return tensor_gauss(degree);
  if (degree <= 1) return triangle_rule_deg1();
  if (degree == 2) return triangle_rule_deg2();
  if (degree <= 5) return triangle_rule_deg5();
  return triangle_rule_general(degree);
}

void basis_row(ElementKind kind, const CellGeometry& cell, Point2 p, Deriv deriv,
               Eigen::VectorXd& out) {
  const int n = dof_count(kind);
  out.resize(n);
  if (kind == ElementKind::BFS) {
    for (int i = 0; i < n; ++i) out[i] = bfs_basis(cell, p, local_dof(kind, i), deriv);
  } else {
    const Barycentric bc = barycentric_coeffs(cell);
    for (int i = 0; i < n; ++i) {
      out[i] = eval_morley(bc, morley_shape(bc, local_dof(kind, i)), p, deriv);
    }
  }
}

Eigen::MatrixXd local_matrix(ElementKind kind, const CellGeometry& cell, FormKind form) {
  if ((kind == ElementKind::BFS) != (cell.kind == CellKind::Rectangle)) {
    throw std::invalid_argument("local_matrix: element kind does not match cell shape");
  }
  const int n = dof_count(kind);
  const Quadrature& rule = cached_rule(cell.kind, form_quadrature_degree(kind));
  std::vector<MappedPoint> pts;
  map_quadrature(cell, rule, pts);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd vx(n), vy(n), vxy(n);
  for (const MappedPoint& mp : pts) {
    switch (form) {
      case FormKind::Mass:
        basis_row(kind, cell, mp.p, {0, 0}, vx);
        m.noalias() += mp.w * vx * vx.transpose();
        break;
      case FormKind::H1:
        basis_row(kind, cell, mp.p, {1, 0}, vx);
        basis_row(kind, cell, mp.p, {0, 1}, vy);
        m.noalias() += mp.w * (vx * vx.transpose() + vy * vy.transpose());
        break;
      case FormKind::Biharmonic:
        basis_row(kind, cell, mp.p, {2, 0}, vx);
        basis_row(kind, cell, mp.p, {0, 2}, vy);
        if (kind == ElementKind::BFS) {
          const Eigen::VectorXd lap = vx + vy;
          m.noalias() += mp.w * lap * lap.transpose();
        } else {
          basis_row(kind, cell, mp.p, {1, 1}, vxy);
          m.noalias() += mp.w * (vx * vx.transpose() + 2.0 * vxy * vxy.transpose() +
                                 vy * vy.transpose());
        }
        break;
    }
  }
  return m;
}

Eigen::VectorXd local_load(ElementKind kind, const CellGeometry& cell,
                           const std::function<double(Point2)>& f, int degree) {
  if ((kind == ElementKind::BFS) != (cell.kind == CellKind::Rectangle)) {
    throw std::invalid_argument("local_load: element kind does not match cell shape");
  }
  const int n = dof_count(kind);
  const Quadrature& rule = cached_rule(cell.kind, degree);
  std::vector<MappedPoint> pts;
  map_quadrature(cell, rule, pts);
  Eigen::VectorXd load = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd row(n);
  for (const MappedPoint& mp : pts) {
    const double value = f(mp.p);
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "local_load: source is not finite at (" << mp.p.x << ", " << mp.p.y << ")";
      throw std::runtime_error(msg.str());
    }
    basis_row(kind, cell, mp.p, {0, 0}, row);
    load.noalias() += (mp.w * value) * row;
  }
  return load;
}

}  // namespace plateinv
