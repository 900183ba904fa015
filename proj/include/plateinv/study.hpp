#pragma once

#include <optional>
#include <string>

#include "plateinv/inverse.hpp"

namespace plateinv {

// Manufactured problem: a source f on a fixed domain, with the exact plate
// deflection u and its derivatives when they are known in closed form.
struct ManufacturedCase {
  std::string name;
  Domain domain = Domain::Square;
  bool has_exact_solution = false;
  std::function<double(Point2)> u;
  std::function<Eigen::Vector2d(Point2)> grad_u;
  std::function<Eigen::Matrix2d(Point2)> hess_u;
  std::function<double(Point2)> f;
  std::string regularity_note;
  bool corner_quadrature_boost = false;
};

ManufacturedCase case_square_poly();
ManufacturedCase case_square_exp();
ManufacturedCase case_lshape_singular();
ManufacturedCase case_lshape_h1_source();
ManufacturedCase case_by_name(const std::string& name);
std::vector<std::string> case_names();

// Exponent gamma of the leading corner singularity r^(1+gamma) of the clamped
// plate on the 3*pi/2 reentrant corner: the smallest positive root of
// sin(gamma*w)^2 = gamma^2 * sin(w)^2, w = 3*pi/2.
double lshape_singularity_exponent();

struct NoiseSpec {
  double delta = 0;
  std::uint64_t seed = 0;
};

struct StudyRow {
  int level = 0;  // 1-based
  double h = 0;
  int n_dof = 0;
  double err_m = std::numeric_limits<double>::quiet_NaN();
  double order_m = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> err_f;    // one entry per alpha
  std::vector<double> order_f;  // NaN where the rate is undefined
};

struct StudyReport {
  std::string case_name;
  ElementKind state_kind = ElementKind::BFS;
  ElementKind source_kind = ElementKind::BFS;
  int reg_k = 0;
  std::vector<double> alphas;
  MeasurementSet measurements;
  std::optional<NoiseSpec> noise;
  std::vector<StudyRow> rows;
};

// Coarsest mesh of the refinement family used by the convergence tables.
std::shared_ptr<const Mesh> base_mesh(Domain domain, ElementKind kind);

double order_successive(double err, double err_next);
double order_to_reference(double err, double err_ref, int level_gap);

// Runs the refinement study over `levels` meshes: forward solve and
// measurements per level, reconstructions for every alpha, errors against the
// exact solution (or against the finest level when none is known), and
// observed orders. Source errors are |.|_k seminorm distances to the
// finest-level reconstruction; noise perturbs only the data fed to the
// reconstructions.
StudyReport run_study(const ManufacturedCase& mc, ElementKind state_kind, int reg_k,
                      ElementKind source_kind, const std::vector<double>& alphas,
                      int levels, const MeasurementSet& ms,
                      const std::optional<NoiseSpec>& noise = {});

void write_report_csv(const StudyReport& report, std::ostream& out);
void write_report_table(const StudyReport& report, std::ostream& out);

}  // namespace plateinv
