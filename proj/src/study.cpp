#include "plateinv/study.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace plateinv {

namespace {

constexpr double kCornerRadius = 1e-12;

void to_polar(Point2 p, double& radius, double& theta) {
  radius = std::hypot(p.x, p.y);
  theta = std::atan2(p.y, p.x);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
}

// One summand c * R^a * cos(b*theta) or c * R^a * sin(b*theta). Closed under
// Cartesian differentiation:
//   d/dx [R^a cos(b t)] = R^(a-1) [ (a+b)/2 cos((b-1)t) + (a-b)/2 cos((b+1)t) ]
//   d/dx [R^a sin(b t)] = R^(a-1) [ (a+b)/2 sin((b-1)t) + (a-b)/2 sin((b+1)t) ]
//   d/dy [R^a cos(b t)] = R^(a-1) [ (a-b)/2 sin((b+1)t) - (a+b)/2 sin((b-1)t) ]
//   d/dy [R^a sin(b t)] = R^(a-1) [ (a+b)/2 cos((b-1)t) - (a-b)/2 cos((b+1)t) ]
struct PolarTerm {
  double c = 0, a = 0, b = 0;
  bool is_sin = false;
};

using PolarSum = std::vector<PolarTerm>;

PolarSum ddx(const PolarSum& in) {
  PolarSum out;
  out.reserve(2 * in.size());
  for (const PolarTerm& t : in) {
    double hp = 0.5 * (t.a + t.b), hm = 0.5 * (t.a - t.b);
    out.push_back({t.c * hp, t.a - 1.0, t.b - 1.0, t.is_sin});
    out.push_back({t.c * hm, t.a - 1.0, t.b + 1.0, t.is_sin});
  }
  return out;
}

PolarSum ddy(const PolarSum& in) {
  PolarSum out;
  out.reserve(2 * in.size());
  for (const PolarTerm& t : in) {
    double hp = 0.5 * (t.a + t.b), hm = 0.5 * (t.a - t.b);
    if (t.is_sin) {
      out.push_back({t.c * hp, t.a - 1.0, t.b - 1.0, false});
      out.push_back({-t.c * hm, t.a - 1.0, t.b + 1.0, false});
    } else {
      out.push_back({-t.c * hp, t.a - 1.0, t.b - 1.0, true});
      out.push_back({t.c * hm, t.a - 1.0, t.b + 1.0, true});
    }
  }
  return out;
}

double eval(const PolarSum& sum, double radius, double theta) {
  double s = 0.0;
  for (const PolarTerm& t : sum) {
    double trig = t.is_sin ? std::sin(t.b * theta) : std::cos(t.b * theta);
    s += t.c * std::pow(radius, t.a) * trig;
  }
  return s;
}

// v = R^(1+gamma) g(theta) with the paper-exact angular factor; Lap v keeps
// only the b = gamma-1 harmonics (the b = gamma+1 pair is harmonic), and
// Lap^2 v = 0.
struct SingularFactor {
  double gamma = 0;
  PolarSum v, vx, vy, vxx, vxy, vyy, lap, lap_x, lap_y;
};

const SingularFactor& singular_factor() {
  static const SingularFactor data = [] {
    SingularFactor s;
    double g = lshape_singularity_exponent();
    double w = 1.5 * std::numbers::pi;
    double k1 = std::sin((g - 1.0) * w) / (g - 1.0) - std::sin((g + 1.0) * w) / (g + 1.0);
    double k2 = std::cos((g - 1.0) * w) - std::cos((g + 1.0) * w);
    s.gamma = g;
    s.v = {{k1, 1.0 + g, g - 1.0, false},
           {-k1, 1.0 + g, g + 1.0, false},
           {-k2 / (g - 1.0), 1.0 + g, g - 1.0, true},
           {k2 / (g + 1.0), 1.0 + g, g + 1.0, true}};
    s.vx = ddx(s.v);
    s.vy = ddy(s.v);
    s.vxx = ddx(s.vx);
    s.vxy = ddy(s.vx);
    s.vyy = ddy(s.vy);
    double fourg = 4.0 * g;
    s.lap = {{fourg * k1, g - 1.0, g - 1.0, false},
             {-fourg * k2 / (g - 1.0), g - 1.0, g - 1.0, true}};
    s.lap_x = ddx(s.lap);
    s.lap_y = ddy(s.lap);
    return s;
  }();
  return data;
}

// Smooth envelope w = (x^2-1)^2 (y^2-1)^2 clamping the outer square.
double env(double t) {
  double s = t * t - 1.0;
  return s * s;
}
double env1(double t) { return 4.0 * t * (t * t - 1.0); }
double env2(double t) { return 12.0 * t * t - 4.0; }
double env3(double t) { return 24.0 * t; }
constexpr double kEnv4 = 24.0;

double poly_g(double t) {
  double s = t * (1.0 - t);
  return s * s;
}
double poly_g1(double t) { return 2.0 * t - 6.0 * t * t + 4.0 * t * t * t; }
double poly_g2(double t) { return 2.0 - 12.0 * t + 12.0 * t * t; }
constexpr double kPolyG4 = 24.0;

}  // namespace

double lshape_singularity_exponent() { return 0.5444837367; }

ManufacturedCase case_square_poly() {
  ManufacturedCase mc;
  mc.name = "square-poly";
  mc.domain = Domain::Square;
  mc.has_exact_solution = true;
  mc.regularity_note = "u = x^2 y^2 (1-x)^2 (1-y)^2 is smooth; full-order rates expected";
  mc.u = [](Point2 p) { return poly_g(p.x) * poly_g(p.y); };
  mc.grad_u = [](Point2 p) {
    return Eigen::Vector2d(poly_g1(p.x) * poly_g(p.y), poly_g(p.x) * poly_g1(p.y));
  };
  mc.hess_u = [](Point2 p) {
    Eigen::Matrix2d h;
    h << poly_g2(p.x) * poly_g(p.y), poly_g1(p.x) * poly_g1(p.y),
        poly_g1(p.x) * poly_g1(p.y), poly_g(p.x) * poly_g2(p.y);
    return h;
  };
  mc.f = [](Point2 p) {
    return kPolyG4 * (poly_g(p.x) + poly_g(p.y)) + 2.0 * poly_g2(p.x) * poly_g2(p.y);
  };
  return mc;
}

ManufacturedCase case_square_exp() {
  ManufacturedCase mc;
  mc.name = "square-exp";
  mc.domain = Domain::Square;
  mc.has_exact_solution = false;
  mc.regularity_note = "f = exp(x+y) is smooth; the displacement has no closed form";
  mc.f = [](Point2 p) { return std::exp(p.x + p.y); };
  return mc;
}

ManufacturedCase case_lshape_singular() {
  ManufacturedCase mc;
  mc.name = "lshape-singular";
  mc.domain = Domain::LShape;
  mc.has_exact_solution = true;
  mc.corner_quadrature_boost = true;
  mc.regularity_note =
      "u ~ R^(1+gamma) at the reentrant corner, gamma = 0.5444837367; "
      "expected measurement order 2*gamma";
  mc.u = [](Point2 p) {
    double radius, theta;
    to_polar(p, radius, theta);
    if (radius < kCornerRadius) return 0.0;
    return env(p.x) * env(p.y) * eval(singular_factor().v, radius, theta);
  };
  mc.grad_u = [](Point2 p) {
    double radius, theta;
    to_polar(p, radius, theta);
    if (radius < kCornerRadius) return Eigen::Vector2d(0.0, 0.0);
    const SingularFactor& s = singular_factor();
    double wv = env(p.x) * env(p.y);
    double wx = env1(p.x) * env(p.y);
    double wy = env(p.x) * env1(p.y);
    double v = eval(s.v, radius, theta);
    return Eigen::Vector2d(wx * v + wv * eval(s.vx, radius, theta),
                           wy * v + wv * eval(s.vy, radius, theta));
  };
  mc.hess_u = [](Point2 p) {
    double radius, theta;
    to_polar(p, radius, theta);
    if (radius < kCornerRadius) {
      throw std::domain_error("lshape-singular: Hessian is unbounded at the reentrant corner");
    }
    const SingularFactor& s = singular_factor();
    double wv = env(p.x) * env(p.y);
    double wx = env1(p.x) * env(p.y);
    double wy = env(p.x) * env1(p.y);
    double wxx = env2(p.x) * env(p.y);
    double wxy = env1(p.x) * env1(p.y);
    double wyy = env(p.x) * env2(p.y);
    double v = eval(s.v, radius, theta);
    double vx = eval(s.vx, radius, theta);
    double vy = eval(s.vy, radius, theta);
    Eigen::Matrix2d h;
    h(0, 0) = wxx * v + 2.0 * wx * vx + wv * eval(s.vxx, radius, theta);
    h(0, 1) = wxy * v + wx * vy + wy * vx + wv * eval(s.vxy, radius, theta);
    h(1, 0) = h(0, 1);
    h(1, 1) = wyy * v + 2.0 * wy * vy + wv * eval(s.vyy, radius, theta);
    return h;
  };
  // Lap^2(w v) with Lap^2 v = 0, expanded by the product rule:
  //   f = v Lap^2 w + 2 Lap w Lap v + 4 grad(Lap v).grad w + 4 grad(Lap w).grad v
  //       + 4 (wxx vxx + 2 wxy vxy + wyy vyy)
  mc.f = [](Point2 p) {
    double radius, theta;
    to_polar(p, radius, theta);
    if (radius < kCornerRadius) {
      throw std::domain_error("lshape-singular: f is singular at the reentrant corner");
    }
    const SingularFactor& s = singular_factor();
    double ex = env(p.x), ey = env(p.y);
    double wx = env1(p.x) * ey, wy = ex * env1(p.y);
    double wxx = env2(p.x) * ey, wxy = env1(p.x) * env1(p.y), wyy = ex * env2(p.y);
    double lapw = wxx + wyy;
    double lapw_x = env3(p.x) * ey + env1(p.x) * env2(p.y);
    double lapw_y = env2(p.x) * env1(p.y) + ex * env3(p.y);
    double bilapw = kEnv4 * ey + 2.0 * env2(p.x) * env2(p.y) + ex * kEnv4;
    double v = eval(s.v, radius, theta);
    double vx = eval(s.vx, radius, theta);
    double vy = eval(s.vy, radius, theta);
    double vxx = eval(s.vxx, radius, theta);
    double vxy = eval(s.vxy, radius, theta);
    double vyy = eval(s.vyy, radius, theta);
    double lapv = eval(s.lap, radius, theta);
    double lapv_x = eval(s.lap_x, radius, theta);
    double lapv_y = eval(s.lap_y, radius, theta);
    return v * bilapw + 2.0 * lapw * lapv + 4.0 * (lapv_x * wx + lapv_y * wy) +
           4.0 * (lapw_x * vx + lapw_y * vy) +
           4.0 * (wxx * vxx + 2.0 * wxy * vxy + wyy * vyy);
  };
  return mc;
}

ManufacturedCase case_lshape_h1_source() {
  ManufacturedCase mc;
  mc.name = "lshape-h1";
  mc.domain = Domain::LShape;
  mc.has_exact_solution = false;
  mc.regularity_note =
      "f = (x^2-1)(y^2-1) R^(2/3) (1-cos t)(1+sin t) is H^1 near the corner";
  mc.f = [](Point2 p) {
    double radius, theta;
    to_polar(p, radius, theta);
    if (radius == 0.0) return 0.0;
    return (p.x * p.x - 1.0) * (p.y * p.y - 1.0) * std::pow(radius, 2.0 / 3.0) *
           (1.0 - std::cos(theta)) * (1.0 + std::sin(theta));
  };
  return mc;
}

std::vector<std::string> case_names() {
  return {"square-poly", "square-exp", "lshape-singular", "lshape-h1"};
}

ManufacturedCase case_by_name(const std::string& name) {
  if (name == "square-poly") return case_square_poly();
  if (name == "square-exp") return case_square_exp();
  if (name == "lshape-singular") return case_lshape_singular();
  if (name == "lshape-h1") return case_lshape_h1_source();
  std::string known;
  for (const std::string& n : case_names()) known += (known.empty() ? "" : ", ") + n;
  throw std::invalid_argument("case: unknown case '" + name + "' (known: " + known + ")");
}

std::shared_ptr<const Mesh> base_mesh(Domain domain, ElementKind kind) {
  if (domain == Domain::Square) {
    if (kind == ElementKind::BFS) return std::make_shared<const Mesh>(unit_square_rect_mesh(2));
    return std::make_shared<const Mesh>(square_crisscross_mesh(1));
  }
  if (kind == ElementKind::BFS) {
    return std::make_shared<const Mesh>(lshape_mesh(CellKind::Rectangle, 2));
  }
  return std::make_shared<const Mesh>(lshape_mesh(CellKind::Triangle, 1));
}

double order_successive(double err, double err_next) { return std::log2(err / err_next); }

double order_to_reference(double err, double err_ref, int level_gap) {
  return std::log2(err / err_ref) / static_cast<double>(level_gap);
}

StudyReport run_study(const ManufacturedCase& mc, ElementKind state_kind, int reg_k,
                      ElementKind source_kind, const std::vector<double>& alphas,
                      int levels, const MeasurementSet& ms,
                      const std::optional<NoiseSpec>& noise) {
  if (levels < 3) throw std::invalid_argument("run_study: levels must be >= 3");
  if (alphas.empty()) throw std::invalid_argument("run_study: alpha list must not be empty");
  for (double a : alphas) {
    if (!(a > 0.0)) throw std::invalid_argument("run_study: alpha must be positive");
  }
  if (state_kind != source_kind) {
    throw std::invalid_argument(
        "run_study: state and source spaces share one mesh and must use the same family");
  }
  RegularizationKind reg = regularization_from_k(reg_k);
  int n_alpha = static_cast<int>(alphas.size());
  int meas_degree = state_kind == ElementKind::BFS ? 8 : 6;

  StudyReport report;
  report.case_name = mc.name;
  report.state_kind = state_kind;
  report.source_kind = source_kind;
  report.reg_k = reg_k;
  report.alphas = alphas;
  report.measurements = ms;
  report.noise = noise;
  report.rows.resize(levels);

  std::vector<std::shared_ptr<const Mesh>> meshes(levels);
  meshes[0] = base_mesh(mc.domain, state_kind);
  for (int i = 1; i < levels; ++i) {
    meshes[i] = std::make_shared<const Mesh>(red_refine(*meshes[i - 1]));
  }

  ForwardOptions opts;
  opts.corner_boost = mc.corner_quadrature_boost;

  DenseVector m_ref;
  if (mc.has_exact_solution) {
    m_ref = apply_measurement(ms, mc.u, *meshes[levels - 1], 12);
  }

  std::vector<DenseVector> m_level(levels);
  std::vector<std::vector<FemFunction>> recon(levels);
  for (int i = 0; i < levels; ++i) {
    try {
      FemFunction u_i = solve_forward(meshes[i], state_kind, mc.f, opts);
      m_level[i] = apply_measurement(ms, u_i, meas_degree);
      DenseMatrix w = build_w(meshes[i], state_kind, source_kind, ms);
      SparseMatrix c = assemble_regularizer(*meshes[i], source_kind, reg);
      auto source_map = std::make_shared<DofMap>(build_dof_map(*meshes[i], source_kind));
      DenseVector data = mc.has_exact_solution ? m_ref : m_level[i];
      if (noise && noise->delta > 0.0) {
        data = add_noise(data, noise->delta, noise->seed + static_cast<std::uint64_t>(i + 1));
      }
      recon[i].reserve(n_alpha);
      for (double alpha : alphas) {
        InverseProblem ip{w, c, data, alpha, meshes[i], source_kind, source_map};
        recon[i].push_back(reconstruct(ip));
      }
      StudyRow& row = report.rows[i];
      row.level = i + 1;
      row.h = mesh_size(*meshes[i]);
      row.n_dof = u_i.dof_map->n_free;
      row.err_f.assign(n_alpha, std::numeric_limits<double>::quiet_NaN());
      row.order_f.assign(n_alpha, std::numeric_limits<double>::quiet_NaN());
    } catch (const std::exception& e) {
      throw std::runtime_error("run_study: level " + std::to_string(i + 1) + ": " + e.what());
    }
  }

  int last = levels - 1;
  for (int i = 0; i < levels; ++i) {
    StudyRow& row = report.rows[i];
    if (mc.has_exact_solution) {
      row.err_m = (m_ref - m_level[i]).norm();
    } else {
      row.err_m = i < last ? (m_level[i] - m_level[last]).norm() : 0.0;
    }
    for (int a = 0; a < n_alpha; ++a) {
      row.err_f[a] = i < last ? fem_norm_diff(recon[i][a], recon[last][a], reg_k) : 0.0;
    }
  }
  int m_orders = mc.has_exact_solution ? levels - 1 : levels - 2;
  for (int i = 0; i < m_orders; ++i) {
    report.rows[i].order_m = order_successive(report.rows[i].err_m, report.rows[i + 1].err_m);
  }
  for (int i = 0; i + 2 < levels; ++i) {
    for (int a = 0; a < n_alpha; ++a) {
      report.rows[i].order_f[a] =
          order_to_reference(report.rows[i].err_f[a], report.rows[last - 1].err_f[a], last - 1 - i);
    }
  }
  return report;
}

namespace {

std::string alpha_label(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", alpha);
  return buf;
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string table_err(double x) {
  if (std::isnan(x)) return "--";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  return buf;
}

std::string table_order(double x) {
  if (std::isnan(x)) return "--";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

}  // namespace

void write_report_csv(const StudyReport& report, std::ostream& out) {
  out << "level,h,ndof,err_m,order_m";
  for (double a : report.alphas) {
    out << ",err_f_" << alpha_label(a) << ",order_f_" << alpha_label(a);
  }
  out << "\n";
  for (const StudyRow& row : report.rows) {
    out << row.level << ',' << csv_number(row.h) << ',' << row.n_dof << ','
        << csv_number(row.err_m) << ',' << csv_number(row.order_m);
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
      out << ',' << csv_number(row.err_f[a]) << ',' << csv_number(row.order_f[a]);
    }
    out << "\n";
  }
}

void write_report_table(const StudyReport& report, std::ostream& out) {
  std::vector<std::string> headers = {"level", "h", "ndof", "err_m", "order_m"};
  for (double a : report.alphas) {
    headers.push_back("err_f(a=" + alpha_label(a) + ")");
    headers.push_back("order_f(a=" + alpha_label(a) + ")");
  }
  std::vector<std::vector<std::string>> cells;
  for (const StudyRow& row : report.rows) {
    std::vector<std::string> line;
    line.push_back(std::to_string(row.level));
    line.push_back(table_err(row.h));
    line.push_back(std::to_string(row.n_dof));
    line.push_back(table_err(row.err_m));
    line.push_back(table_order(row.order_m));
    for (std::size_t a = 0; a < report.alphas.size(); ++a) {
      line.push_back(table_err(row.err_f[a]));
      line.push_back(table_order(row.order_f[a]));
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(headers.size());
  for (std::size_t j = 0; j < headers.size(); ++j) {
    widths[j] = headers[j].size();
    for (const auto& line : cells) widths[j] = std::max(widths[j], line[j].size());
  }
  auto emit = [&](const std::vector<std::string>& line) {
    std::string text;
    for (std::size_t j = 0; j < line.size(); ++j) {
      std::string cell = line[j];
      if (cell.size() < widths[j]) cell.insert(0, widths[j] - cell.size(), ' ');
      text += cell;
      if (j + 1 < line.size()) text += "  ";
    }
    out << text << "\n";
  };
  emit(headers);
  for (const auto& line : cells) emit(line);
}

}  // namespace plateinv
