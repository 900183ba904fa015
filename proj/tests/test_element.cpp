#include "doctest.h"

#include "plateinv/element.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

using namespace plateinv;

namespace {

// Independent 1D cubic Hermite factors on [0,1], indexed by (corner, slope?):
// value-at-0, slope-at-0, value-at-1, slope-at-1. Derivatives analytic.
double hermite(int which, int deriv, double t) {
  switch (which * 4 + deriv) {
    case 0: return 1.0 - 3.0 * t * t + 2.0 * t * t * t;  // H00
    case 1: return -6.0 * t + 6.0 * t * t;
    case 2: return -6.0 + 12.0 * t;
    case 4: return t - 2.0 * t * t + t * t * t;  // H10
    case 5: return 1.0 - 4.0 * t + 3.0 * t * t;
    case 6: return -4.0 + 6.0 * t;
    case 8: return 3.0 * t * t - 2.0 * t * t * t;  // H01
    case 9: return 6.0 * t - 6.0 * t * t;
    case 10: return 6.0 - 12.0 * t;
    case 12: return -t * t + t * t * t;  // H11
    case 13: return -2.0 * t + 3.0 * t * t;
    case 14: return -2.0 + 6.0 * t;
    default: return 0.0;
  }
}

const double kHermiteIntegral[4] = {0.5, 1.0 / 12.0, 0.5, -1.0 / 12.0};

struct OracleRect {
  double x0, y0, x1, y1;
  double hx() const { return x1 - x0; }
  double hy() const { return y1 - y0; }

  // Shape function of a local dof, with physical-derivative duality: the 1D
  // slope factors carry the cell edge length.
  double shape(const LocalDof& dof, Deriv d, Point2 p) const {
    static const int corner_x[4] = {0, 1, 1, 0};
    static const int corner_y[4] = {0, 0, 1, 1};
    const int cx = corner_x[dof.entity];
    const int cy = corner_y[dof.entity];
    int wx = 2 * cx, wy = 2 * cy;
    double scale = 1.0;
    if (dof.kind == LocalDofKind::Dx || dof.kind == LocalDofKind::Dxy) {
      wx += 1;
      scale *= hx();
    }
    if (dof.kind == LocalDofKind::Dy || dof.kind == LocalDofKind::Dxy) {
      wy += 1;
      scale *= hy();
    }
    const double tx = (p.x - x0) / hx();
    const double ty = (p.y - y0) / hy();
    const double fx = hermite(wx, d.dx, tx) / std::pow(hx(), d.dx);
    const double fy = hermite(wy, d.dy, ty) / std::pow(hy(), d.dy);
    return scale * fx * fy;
  }
};

// Monomial basis {1, x, y, x^2, xy, y^2} with derivatives.
double monomial(int m, Deriv d, Point2 p) {
  auto pw = [](double v, int e) { return e == 0 ? 1.0 : (e == 1 ? v : v * v); };
  static const int ex[6] = {0, 1, 0, 2, 1, 0};
  static const int ey[6] = {0, 0, 1, 0, 1, 2};
  const int rx = ex[m] - d.dx;
  const int ry = ey[m] - d.dy;
  if (rx < 0 || ry < 0) return 0.0;
  double c = 1.0;
  for (int k = 0; k < d.dx; ++k) c *= ex[m] - k;
  for (int k = 0; k < d.dy; ++k) c *= ey[m] - k;
  return c * pw(p.x, rx) * pw(p.y, ry);
}

struct OracleMorley {
  Point2 v[3];
  Eigen::Matrix<double, 6, 6> coeff;  // column j = monomial coefficients of shape j

  explicit OracleMorley(Point2 a, Point2 b, Point2 c) {
    v[0] = a;
    v[1] = b;
    v[2] = c;
    Eigen::Matrix<double, 6, 6> dof_of_mono;
    for (int m = 0; m < 6; ++m) {
      for (int i = 0; i < 3; ++i) dof_of_mono(i, m) = monomial(m, {0, 0}, v[i]);
      for (int i = 0; i < 3; ++i) {
        Point2 mid = edge_midpoint(i);
        Eigen::Vector2d n = outward_normal(i);
        dof_of_mono(3 + i, m) =
            n.x() * monomial(m, {1, 0}, mid) + n.y() * monomial(m, {0, 1}, mid);
      }
    }
    coeff = dof_of_mono.fullPivLu().solve(Eigen::Matrix<double, 6, 6>::Identity());
  }

  Point2 edge_midpoint(int i) const {
    const Point2& p = v[(i + 1) % 3];
    const Point2& q = v[(i + 2) % 3];
    return {0.5 * (p.x + q.x), 0.5 * (p.y + q.y)};
  }

  Eigen::Vector2d outward_normal(int i) const {
    const Point2& p = v[(i + 1) % 3];
    const Point2& q = v[(i + 2) % 3];
    Eigen::Vector2d n(q.y - p.y, -(q.x - p.x));
    return n.normalized();
  }

  double shape(int j, Deriv d, Point2 p) const {
    double s = 0.0;
    for (int m = 0; m < 6; ++m) s += coeff(m, j) * monomial(m, d, p);
    return s;
  }
};

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

std::vector<MappedPoint> mapped_rule(const CellGeometry& cell, int degree) {
  Quadrature q = quadrature_rule(cell.kind, degree);
  std::vector<MappedPoint> pts;
  map_quadrature(cell, q, pts);
  return pts;
}

}  // namespace

TEST_SUITE("element") {
  TEST_CASE("quadrature integrates monomials exactly") {
    for (int degree = 0; degree <= 12; ++degree) {
      Quadrature q = quadrature_rule(CellKind::Rectangle, degree);
      CHECK(q.exact_degree >= degree);
      double wsum = 0.0;
      for (double w : q.weights) wsum += w;
      CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
      for (int i = 0; i + 0 <= q.exact_degree; ++i) {
        for (int j = 0; i + j <= q.exact_degree; ++j) {
          double acc = 0.0;
          for (size_t k = 0; k < q.points.size(); ++k) {
            acc += q.weights[k] * std::pow(q.points[k].x, i) * std::pow(q.points[k].y, j);
          }
          const double exact = 1.0 / ((i + 1.0) * (j + 1.0));
          CHECK(std::abs(acc - exact) < 1e-13);
        }
      }
    }
    for (int degree = 0; degree <= 12; ++degree) {
      Quadrature q = quadrature_rule(CellKind::Triangle, degree);
      CHECK(q.exact_degree >= degree);
      double wsum = 0.0;
      for (double w : q.weights) wsum += w;
      CHECK(wsum == doctest::Approx(0.5).epsilon(1e-13));
      for (int i = 0; i <= q.exact_degree; ++i) {
        for (int j = 0; i + j <= q.exact_degree; ++j) {
          double acc = 0.0;
          for (size_t k = 0; k < q.points.size(); ++k) {
            acc += q.weights[k] * std::pow(q.points[k].x, i) * std::pow(q.points[k].y, j);
          }
          const double exact = factorial(i) * factorial(j) / factorial(i + j + 2);
          CHECK(std::abs(acc - exact) < 1e-13);
        }
      }
    }
  }

  TEST_CASE("quadrature rule shapes and fallbacks") {
    Quadrature gauss2 = quadrature_rule(CellKind::Rectangle, 3);
    CHECK(gauss2.points.size() == 4);  // 2x2 tensor Gauss-Legendre
    Quadrature centroid = quadrature_rule(CellKind::Triangle, 1);
    REQUIRE(centroid.points.size() == 1);
    CHECK(centroid.points[0].x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(centroid.points[0].y == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(centroid.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
    // Unsupported triangle degrees fall back to the next higher rule.
    Quadrature t3 = quadrature_rule(CellKind::Triangle, 3);
    CHECK(t3.exact_degree >= 3);
    CHECK_THROWS_AS(quadrature_rule(CellKind::Rectangle, -1), std::invalid_argument);
  }

  TEST_CASE("mapped rule carries the cell area") {
    CellGeometry cell = rect_geometry(0.0, 0.0, 1.0, 1.0);
    std::vector<MappedPoint> pts = mapped_rule(cell, 7);
    double acc = 0.0, area = 0.0;
    for (const MappedPoint& mp : pts) {
      area += mp.w;
      acc += mp.w * std::pow(mp.p.x, 6) * std::pow(mp.p.y, 6);
    }
    CHECK(area == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std::abs(acc - 1.0 / 49.0) < 1e-14);

    CellGeometry tri = tri_geometry({0.2, 0.1}, {0.9, 0.4}, {0.3, 0.8});
    std::vector<MappedPoint> tpts = mapped_rule(tri, 5);
    double tarea = 0.0;
    for (const MappedPoint& mp : tpts) tarea += mp.w;
    CHECK(tarea == doctest::Approx(0.5 * std::abs((0.9 - 0.2) * (0.8 - 0.1) -
                                                  (0.3 - 0.2) * (0.4 - 0.1)))
                       .epsilon(1e-14));
  }

  TEST_CASE("dof layout") {
    CHECK(dof_count(ElementKind::BFS) == 16);
    CHECK(dof_count(ElementKind::Morley) == 6);
    int value_count = 0, dx_count = 0, dxy_count = 0;
    for (int i = 0; i < 16; ++i) {
      LocalDof dof = local_dof(ElementKind::BFS, i);
      value_count += dof.kind == LocalDofKind::Value ? 1 : 0;
      dx_count += dof.kind == LocalDofKind::Dx ? 1 : 0;
      dxy_count += dof.kind == LocalDofKind::Dxy ? 1 : 0;
      CHECK(dof.entity >= 0);
      CHECK(dof.entity < 4);
    }
    CHECK(value_count == 4);
    CHECK(dx_count == 4);
    CHECK(dxy_count == 4);
    for (int i = 0; i < 3; ++i) {
      CHECK(local_dof(ElementKind::Morley, i).kind == LocalDofKind::Value);
      CHECK(local_dof(ElementKind::Morley, 3 + i).kind == LocalDofKind::EdgeNormal);
    }
    CHECK_THROWS_AS(local_dof(ElementKind::BFS, 16), std::out_of_range);
    CHECK_THROWS_AS(local_dof(ElementKind::Morley, 6), std::out_of_range);
  }

  TEST_CASE("BFS dof duality on a stretched cell") {
    CellGeometry cell = rect_geometry(0.3, -0.2, 0.9, 0.5);
    const Point2 corners[4] = {{0.3, -0.2}, {0.9, -0.2}, {0.9, 0.5}, {0.3, 0.5}};
    for (int i = 0; i < 16; ++i) {
      LocalDof di = local_dof(ElementKind::BFS, i);
      Deriv d;
      if (di.kind == LocalDofKind::Dx) d = {1, 0};
      if (di.kind == LocalDofKind::Dy) d = {0, 1};
      if (di.kind == LocalDofKind::Dxy) d = {1, 1};
      for (int j = 0; j < 16; ++j) {
        LocalDof dj = local_dof(ElementKind::BFS, j);
        const double val = bfs_basis(cell, corners[di.entity], dj, d);
        CHECK(std::abs(val - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
    }
  }

  TEST_CASE("BFS matches the Hermite-product oracle") {
    OracleRect oracle{0.3, -0.2, 0.9, 0.5};
    CellGeometry cell = rect_geometry(0.3, -0.2, 0.9, 0.5);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> ux(0.3, 0.9), uy(-0.2, 0.5);
    const Deriv derivs[6] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (int trial = 0; trial < 12; ++trial) {
      Point2 p{ux(rng), uy(rng)};
      for (int j = 0; j < 16; ++j) {
        LocalDof dof = local_dof(ElementKind::BFS, j);
        for (const Deriv& d : derivs) {
          CHECK(bfs_basis(cell, p, dof, d) ==
                doctest::Approx(oracle.shape(dof, d, p)).epsilon(1e-10).scale(1.0));
        }
      }
    }
    // Spec'd spot value: second x-derivative of a Dx shape at the unit-cell center.
    OracleRect unit{0.0, 0.0, 1.0, 1.0};
    CellGeometry ucell = rect_geometry(0.0, 0.0, 1.0, 1.0);
    for (int j = 0; j < 16; ++j) {
      LocalDof dof = local_dof(ElementKind::BFS, j);
      if (dof.kind != LocalDofKind::Dx) continue;
      const double got = bfs_basis(ucell, {0.5, 0.5}, dof, {2, 0});
      CHECK(got == doctest::Approx(unit.shape(dof, {2, 0}, {0.5, 0.5})).epsilon(1e-12));
    }
  }

  TEST_CASE("BFS value shapes partition unity") {
    CellGeometry cell = rect_geometry(0.25, 0.5, 0.75, 0.625);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> ux(0.25, 0.75), uy(0.5, 0.625);
    for (int trial = 0; trial < 10; ++trial) {
      Point2 p{ux(rng), uy(rng)};
      double sum = 0.0, sx = 0.0, sy = 0.0;
      for (int j = 0; j < 16; ++j) {
        LocalDof dof = local_dof(ElementKind::BFS, j);
        if (dof.kind != LocalDofKind::Value) continue;
        sum += bfs_basis(cell, p, dof, {0, 0});
        sx += bfs_basis(cell, p, dof, {1, 0});
        sy += bfs_basis(cell, p, dof, {0, 1});
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(std::abs(sx) < 1e-11);
      CHECK(std::abs(sy) < 1e-11);
    }
  }

  TEST_CASE("Morley dof duality and Vandermonde oracle") {
    Point2 a{0.1, 0.2}, b{0.8, 0.3}, c{0.4, 0.9};
    OracleMorley oracle(a, b, c);
    CellGeometry cell = tri_geometry(a, b, c);

    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        LocalDof dj = local_dof(ElementKind::Morley, j);
        double val = 0.0;
        if (i < 3) {
          val = morley_basis(cell, oracle.v[i], dj, {0, 0});
        } else {
          Point2 mid = oracle.edge_midpoint(i - 3);
          Eigen::Vector2d n = oracle.outward_normal(i - 3);
          val = n.x() * morley_basis(cell, mid, dj, {1, 0}) +
                n.y() * morley_basis(cell, mid, dj, {0, 1});
        }
        CHECK(std::abs(val - (i == j ? 1.0 : 0.0)) < 1e-10);
      }
    }

    // Whole-shape agreement with the monomial-coefficient oracle.
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> bary(0.05, 0.9);
    const Deriv derivs[6] = {{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
    for (int trial = 0; trial < 12; ++trial) {
      double l1 = bary(rng), l2 = bary(rng) * (1.0 - l1);
      double l3 = 1.0 - l1 - l2;
      Point2 p{l1 * a.x + l2 * b.x + l3 * c.x, l1 * a.y + l2 * b.y + l3 * c.y};
      for (int j = 0; j < 6; ++j) {
        LocalDof dof = local_dof(ElementKind::Morley, j);
        for (const Deriv& d : derivs) {
          CHECK(morley_basis(cell, p, dof, d) ==
                doctest::Approx(oracle.shape(j, d, p)).epsilon(1e-9).scale(1.0));
        }
      }
    }

    // Barycenter values (the spec's oracle point).
    Point2 bc{(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
    for (int j = 0; j < 6; ++j) {
      CHECK(morley_basis(cell, bc, local_dof(ElementKind::Morley, j), {0, 0}) ==
            doctest::Approx(oracle.shape(j, {0, 0}, bc)).epsilon(1e-11).scale(1.0));
    }
  }

  TEST_CASE("Morley shapes have constant Hessians and reproduce constants") {
    CellGeometry cell = tri_geometry({0.0, 0.0}, {1.3, 0.1}, {0.4, 1.1});
    const Point2 p1{0.4, 0.3}, p2{0.7, 0.35};
    for (int j = 0; j < 6; ++j) {
      LocalDof dof = local_dof(ElementKind::Morley, j);
      for (Deriv d : {Deriv{2, 0}, Deriv{1, 1}, Deriv{0, 2}}) {
        CHECK(morley_basis(cell, p1, dof, d) ==
              doctest::Approx(morley_basis(cell, p2, dof, d)).epsilon(1e-12).scale(1.0));
      }
    }
    double sum = 0.0;
    for (int j = 0; j < 3; ++j) {
      sum += morley_basis(cell, p1, local_dof(ElementKind::Morley, j), {0, 0});
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }

  TEST_CASE("BFS reproduces random bicubics") {
    CellGeometry cell = rect_geometry(-0.4, 0.1, 0.35, 0.7);
    std::mt19937 rng(71);
    std::uniform_real_distribution<double> uc(-1.0, 1.0);
    std::uniform_real_distribution<double> ux(-0.4, 0.35), uy(0.1, 0.7);
    for (int trial = 0; trial < 3; ++trial) {
      double c[4][4];
      for (auto& row : c) {
        for (double& v : row) v = uc(rng);
      }
      auto eval = [&](Point2 p, Deriv d) {
        double s = 0.0;
        for (int i = d.dx; i < 4; ++i) {
          for (int j = d.dy; j < 4; ++j) {
            double term = c[i][j];
            for (int k = 0; k < d.dx; ++k) term *= i - k;
            for (int k = 0; k < d.dy; ++k) term *= j - k;
            s += term * std::pow(p.x, i - d.dx) * std::pow(p.y, j - d.dy);
          }
        }
        return s;
      };
      Eigen::VectorXd dofs(16);
      const Point2 corners[4] = {{-0.4, 0.1}, {0.35, 0.1}, {0.35, 0.7}, {-0.4, 0.7}};
      for (int j = 0; j < 16; ++j) {
        LocalDof dof = local_dof(ElementKind::BFS, j);
        Deriv d;
        if (dof.kind == LocalDofKind::Dx) d = {1, 0};
        if (dof.kind == LocalDofKind::Dy) d = {0, 1};
        if (dof.kind == LocalDofKind::Dxy) d = {1, 1};
        dofs[j] = eval(corners[dof.entity], d);
      }
      for (int pt = 0; pt < 20; ++pt) {
        Point2 p{ux(rng), uy(rng)};
        double s = 0.0;
        for (int j = 0; j < 16; ++j) {
          s += dofs[j] * bfs_basis(cell, p, local_dof(ElementKind::BFS, j), {0, 0});
        }
        CHECK(std::abs(s - eval(p, {0, 0})) < 1e-10);
      }
    }
  }

  TEST_CASE("Morley reproduces random quadratics") {
    Point2 a{0.0, 0.0}, b{1.1, 0.2}, c{0.3, 0.9};
    OracleMorley geom(a, b, c);
    CellGeometry cell = tri_geometry(a, b, c);
    std::mt19937 rng(97);
    std::uniform_real_distribution<double> uc(-1.0, 1.0), bary(0.05, 0.9);
    for (int trial = 0; trial < 3; ++trial) {
      double q[6];
      for (double& v : q) v = uc(rng);
      auto eval = [&](Point2 p, Deriv d) {
        double s = 0.0;
        for (int m = 0; m < 6; ++m) s += q[m] * monomial(m, d, p);
        return s;
      };
      double dofs[6];
      for (int i = 0; i < 3; ++i) dofs[i] = eval(geom.v[i], {0, 0});
      for (int i = 0; i < 3; ++i) {
        Point2 mid = geom.edge_midpoint(i);
        Eigen::Vector2d n = geom.outward_normal(i);
        dofs[3 + i] = n.x() * eval(mid, {1, 0}) + n.y() * eval(mid, {0, 1});
      }
      for (int pt = 0; pt < 20; ++pt) {
        double l1 = bary(rng), l2 = bary(rng) * (1.0 - l1);
        Point2 p{l1 * a.x + l2 * b.x + (1 - l1 - l2) * c.x,
                 l1 * a.y + l2 * b.y + (1 - l1 - l2) * c.y};
        double s = 0.0;
        for (int j = 0; j < 6; ++j) {
          s += dofs[j] * morley_basis(cell, p, local_dof(ElementKind::Morley, j), {0, 0});
        }
        CHECK(std::abs(s - eval(p, {0, 0})) < 1e-10);
      }
    }
  }

  TEST_CASE("Morley interpolant carries the cell-average Hessian") {
    Point2 a{0.15, 0.1}, b{0.95, 0.25}, c{0.35, 0.85};
    OracleMorley geom(a, b, c);
    CellGeometry cell = tri_geometry(a, b, c);
    auto v = [](Point2 p, Deriv d) {
      if (d.dx == 0 && d.dy == 0) return p.x * p.x * p.x + p.y * p.y * p.y;
      if (d.dx == 1 && d.dy == 0) return 3.0 * p.x * p.x;
      if (d.dx == 0 && d.dy == 1) return 3.0 * p.y * p.y;
      return 0.0;
    };
    double dofs[6];
    for (int i = 0; i < 3; ++i) dofs[i] = v(geom.v[i], {0, 0});
    for (int i = 0; i < 3; ++i) {
      // The lemma's interpolant takes edge dofs as the edge average of the
      // normal derivative (equal to the midpoint value only for quadratics).
      const Point2& p = geom.v[(i + 1) % 3];
      const Point2& q = geom.v[(i + 2) % 3];
      Eigen::Vector2d n = geom.outward_normal(i);
      const double mean_x2 = (p.x * p.x + p.x * q.x + q.x * q.x) / 3.0;
      const double mean_y2 = (p.y * p.y + p.y * q.y + q.y * q.y) / 3.0;
      dofs[3 + i] = 3.0 * (n.x() * mean_x2 + n.y() * mean_y2);
    }
    // Average Hessian of x^3 + y^3 over the triangle: diag(6 cx, 6 cy) at the centroid.
    const double cx = (a.x + b.x + c.x) / 3.0;
    const double cy = (a.y + b.y + c.y) / 3.0;
    Point2 inside{cx, cy};
    double hxx = 0.0, hxy = 0.0, hyy = 0.0;
    for (int j = 0; j < 6; ++j) {
      LocalDof dof = local_dof(ElementKind::Morley, j);
      hxx += dofs[j] * morley_basis(cell, inside, dof, {2, 0});
      hxy += dofs[j] * morley_basis(cell, inside, dof, {1, 1});
      hyy += dofs[j] * morley_basis(cell, inside, dof, {0, 2});
    }
    CHECK(std::abs(hxx - 6.0 * cx) < 1e-10);
    CHECK(std::abs(hxy) < 1e-10);
    CHECK(std::abs(hyy - 6.0 * cy) < 1e-10);
  }

  TEST_CASE("basis_row matches per-dof evaluation") {
    CellGeometry rect = rect_geometry(0.0, 0.0, 0.5, 0.25);
    Eigen::VectorXd row;
    basis_row(ElementKind::BFS, rect, {0.2, 0.1}, {1, 1}, row);
    REQUIRE(row.size() == 16);
    for (int j = 0; j < 16; ++j) {
      CHECK(row[j] == bfs_basis(rect, {0.2, 0.1}, local_dof(ElementKind::BFS, j), {1, 1}));
    }
    CellGeometry tri = tri_geometry({0, 0}, {1, 0}, {0, 1});
    basis_row(ElementKind::Morley, tri, {0.25, 0.25}, {0, 1}, row);
    REQUIRE(row.size() == 6);
    for (int j = 0; j < 6; ++j) {
      CHECK(row[j] == morley_basis(tri, {0.25, 0.25}, local_dof(ElementKind::Morley, j), {0, 1}));
    }
  }

  TEST_CASE("BFS local matrices match oracle quadrature") {
    CellGeometry cell = rect_geometry(0.0, 0.0, 0.5, 0.5);
    OracleRect oracle{0.0, 0.0, 0.5, 0.5};
    std::vector<MappedPoint> pts = mapped_rule(cell, 10);
    for (FormKind form : {FormKind::Biharmonic, FormKind::H1, FormKind::Mass}) {
      Eigen::MatrixXd got = local_matrix(ElementKind::BFS, cell, form);
      REQUIRE(got.rows() == 16);
      CHECK((got - got.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      Eigen::MatrixXd want = Eigen::MatrixXd::Zero(16, 16);
      for (const MappedPoint& mp : pts) {
        Eigen::VectorXd lap(16), vx(16), vy(16), val(16);
        for (int j = 0; j < 16; ++j) {
          LocalDof dof = local_dof(ElementKind::BFS, j);
          lap[j] = oracle.shape(dof, {2, 0}, mp.p) + oracle.shape(dof, {0, 2}, mp.p);
          vx[j] = oracle.shape(dof, {1, 0}, mp.p);
          vy[j] = oracle.shape(dof, {0, 1}, mp.p);
          val[j] = oracle.shape(dof, {0, 0}, mp.p);
        }
        if (form == FormKind::Biharmonic) {
          want += mp.w * lap * lap.transpose();
        } else if (form == FormKind::H1) {
          want += mp.w * (vx * vx.transpose() + vy * vy.transpose());
        } else {
          want += mp.w * val * val.transpose();
        }
      }
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-10);
    }
    Eigen::MatrixXd mass = local_matrix(ElementKind::BFS, cell, FormKind::Mass);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mass);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }

  TEST_CASE("BFS mass rows recover the shape integrals") {
    CellGeometry cell = rect_geometry(0.0, 0.0, 1.0, 1.0);
    Eigen::MatrixXd mass = local_matrix(ElementKind::BFS, cell, FormKind::Mass);
    static const int corner_x[4] = {0, 1, 1, 0};
    static const int corner_y[4] = {0, 0, 1, 1};
    for (int i = 0; i < 16; ++i) {
      LocalDof di = local_dof(ElementKind::BFS, i);
      int wx = 2 * corner_x[di.entity];
      int wy = 2 * corner_y[di.entity];
      if (di.kind == LocalDofKind::Dx || di.kind == LocalDofKind::Dxy) wx += 1;
      if (di.kind == LocalDofKind::Dy || di.kind == LocalDofKind::Dxy) wy += 1;
      const double integral = kHermiteIntegral[wx] * kHermiteIntegral[wy];
      // Value shapes partition unity, so summing the Value columns of row i
      // integrates shape i against 1.
      double row_sum = 0.0;
      for (int j = 0; j < 16; ++j) {
        if (local_dof(ElementKind::BFS, j).kind == LocalDofKind::Value) row_sum += mass(i, j);
      }
      CHECK(row_sum == doctest::Approx(integral).epsilon(1e-12).scale(1.0));
    }
  }

  TEST_CASE("Morley local matrices match the analytic oracle") {
    Point2 a{0.1, 0.05}, b{0.75, 0.2}, c{0.3, 0.7};
    OracleMorley oracle(a, b, c);
    CellGeometry cell = tri_geometry(a, b, c);
    const double area =
        0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));

    Eigen::MatrixXd biharm = local_matrix(ElementKind::Morley, cell, FormKind::Biharmonic);
    for (int i = 0; i < 6; ++i) {
      // Constant Hessian entries straight from the monomial coefficients.
      const double ixx = 2.0 * oracle.coeff(3, i);
      const double ixy = oracle.coeff(4, i);
      const double iyy = 2.0 * oracle.coeff(5, i);
      for (int j = 0; j < 6; ++j) {
        const double jxx = 2.0 * oracle.coeff(3, j);
        const double jxy = oracle.coeff(4, j);
        const double jyy = 2.0 * oracle.coeff(5, j);
        const double want = area * (ixx * jxx + 2.0 * ixy * jxy + iyy * jyy);
        CHECK(biharm(i, j) == doctest::Approx(want).epsilon(1e-11).scale(1.0));
      }
    }

    std::vector<MappedPoint> pts = mapped_rule(cell, 6);
    for (FormKind form : {FormKind::H1, FormKind::Mass}) {
      Eigen::MatrixXd got = local_matrix(ElementKind::Morley, cell, form);
      Eigen::MatrixXd want = Eigen::MatrixXd::Zero(6, 6);
      for (const MappedPoint& mp : pts) {
        Eigen::VectorXd vx(6), vy(6), val(6);
        for (int j = 0; j < 6; ++j) {
          vx[j] = oracle.shape(j, {1, 0}, mp.p);
          vy[j] = oracle.shape(j, {0, 1}, mp.p);
          val[j] = oracle.shape(j, {0, 0}, mp.p);
        }
        if (form == FormKind::H1) {
          want += mp.w * (vx * vx.transpose() + vy * vy.transpose());
        } else {
          want += mp.w * val * val.transpose();
        }
      }
      CHECK((got - want).cwiseAbs().maxCoeff() < 1e-11);
    }

    // A linear function has no energy in the Hessian form.
    double lin[6];
    for (int i = 0; i < 3; ++i) lin[i] = 2.0 * oracle.v[i].x + 3.0 * oracle.v[i].y - 1.0;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector2d n = oracle.outward_normal(i);
      lin[3 + i] = 2.0 * n.x() + 3.0 * n.y();
    }
    Eigen::Map<Eigen::VectorXd> lv(lin, 6);
    CHECK((biharm * lv).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("local load vectors") {
    CellGeometry tri = tri_geometry({0, 0}, {1, 0}, {0, 1});
    OracleMorley oracle({0, 0}, {1, 0}, {0, 1});
    Eigen::VectorXd zero =
        local_load(ElementKind::Morley, tri, [](Point2) { return 0.0; }, 6);
    CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

    // f = 1: integrals of the shapes from the monomial coefficients and the
    // exact monomial integrals over the reference triangle.
    const double mono_int[6] = {1.0 / 2.0, 1.0 / 6.0, 1.0 / 6.0,
                                1.0 / 12.0, 1.0 / 24.0, 1.0 / 12.0};
    Eigen::VectorXd ones =
        local_load(ElementKind::Morley, tri, [](Point2) { return 1.0; }, 6);
    for (int j = 0; j < 6; ++j) {
      double want = 0.0;
      for (int m = 0; m < 6; ++m) want += oracle.coeff(m, j) * mono_int[m];
      CHECK(ones[j] == doctest::Approx(want).epsilon(1e-12).scale(1.0));
    }

    CellGeometry rect = rect_geometry(0, 0, 1, 1);
    auto expf = [](Point2 p) { return std::exp(p.x + p.y); };
    Eigen::VectorXd lo = local_load(ElementKind::BFS, rect, expf, 10);
    Eigen::VectorXd hi = local_load(ElementKind::BFS, rect, expf, 12);
    CHECK((lo - hi).cwiseAbs().maxCoeff() < 1e-10);

    auto bad = [](Point2 p) { return p.x > 0.2 ? std::nan("") : 1.0; };
    CHECK_THROWS_AS(local_load(ElementKind::BFS, rect, bad, 6), std::runtime_error);
  }

  TEST_CASE("error handling") {
    CellGeometry rect = rect_geometry(0, 0, 1, 1);
    CellGeometry tri = tri_geometry({0, 0}, {1, 0}, {0, 1});
    CHECK_THROWS_AS(bfs_basis(rect, {0.5, 0.5}, local_dof(ElementKind::BFS, 0), {3, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(bfs_basis(rect, {0.5, 0.5}, local_dof(ElementKind::BFS, 0), {2, 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(morley_basis(tri, {0.2, 0.2}, local_dof(ElementKind::Morley, 0), {1, 2}),
                    std::invalid_argument);
    CellGeometry degenerate = tri_geometry({0, 0}, {1, 1}, {2, 2});
    CHECK_THROWS_AS(morley_basis(degenerate, {0.5, 0.5}, local_dof(ElementKind::Morley, 0), {0, 0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(local_matrix(ElementKind::BFS, tri, FormKind::Mass), std::invalid_argument);
    CHECK_THROWS_AS(local_matrix(ElementKind::Morley, rect, FormKind::Mass),
                    std::invalid_argument);
    CHECK_THROWS_AS(local_load(ElementKind::Morley, rect, [](Point2) { return 1.0; }, 4),
                    std::invalid_argument);
  }
}
