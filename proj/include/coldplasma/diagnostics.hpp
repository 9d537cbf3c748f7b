#pragma once

#include "coldplasma/integrators.hpp"

#include <iosfwd>

namespace coldplasma {

/// 1/2 (E^T M1 E + B^T M2 B + Y^T M1 Y)
double hamiltonian(const StateU& u, const SystemOperators& ops);

/// Pairing of the weak divergence of E with the constant function 1 in V0.
double total_charge(const Eigen::VectorXd& E, const SpMat& weak_div);

/// max |(D B)_i|
double div_b_max(const Eigen::VectorXd& B, const SpMat& D);

struct DiagnosticRecord {
  double t = 0.0;
  double hamiltonian = 0.0;
  double total_charge = 0.0;
  double div_b_max = 0.0;
  /// E^T A1 E
  double boundary_dissipation = 0.0;
  /// Y^T M1_nu Y
  double collisional_dissipation = 0.0;
  /// E^T S(t)
  double source_power = 0.0;
};

DiagnosticRecord diagnose(const StateU& u, const SystemOperators& ops);

/// Forcing array at time t: chi(t) (S_R cos t + S_I sin t).
Eigen::VectorXd source_at(const SystemOperators& ops, double t);

/// (H^{n+1} - H^n)/dt minus the power balance evaluated at the midpoint state and time.
std::vector<double> energy_balance_residual(const std::vector<StateU>& states, const SystemOperators& ops);

/// Exact solution as a function of time and position.
using ExactSolution = std::function<FieldTriple(double t, const Vec3& x)>;

struct FieldErrors {
  double E = 0.0, B = 0.0, Y = 0.0;
  double combined() const { return std::sqrt(E * E + B * B + Y * Y); }
};

struct ErrorNorms {
  FieldErrors proj, total, solver, exact_norm;
};

/// Reference coefficients: L2 projection for E and Y, commuting projection for B.
StateU project_exact(const SystemOperators& ops, const ExactSolution& exact, double t);

/// L2 norm of (f - field) by Gauss quadrature; quad_points <= 0 picks p_max + 3 per direction.
double l2_distance(const TensorSpace& space, const Eigen::VectorXd& coeffs, const VectorFunction& f,
                   int quad_points = 0);

/// Projection, total and solver errors of u against the exact solution at u.t; `projected`
/// must hold project_exact(ops, exact, u.t).
ErrorNorms error_norms(const StateU& u, const StateU& projected, const ExactSolution& exact,
                       const SystemOperators& ops, int quad_points = 0);

/// Cached quadrature evaluation of V1/V2 fields for repeated error measurements.
class ErrorEvaluator {
 public:
  explicit ErrorEvaluator(const SystemOperators& ops, int quad_points = 0);

  /// Same as project_exact, with the L2 projections computed from the cached quadrature.
  StateU project(const ExactSolution& exact, double t) const;
  ErrorNorms errors(const StateU& u, const StateU& projected, const ExactSolution& exact) const;

 private:
  struct Table {
    const TensorSpace* space = nullptr;
    std::array<SpMat, 3> phi;
  };
  Table make_table(const TensorSpace& space) const;
  Eigen::MatrixXd sample(const VectorFunction& f) const;
  double distance(const Table& tab, const Eigen::VectorXd& coeffs, const Eigen::MatrixXd& values) const;

  const SystemOperators* ops_;
  std::vector<Vec3> points_;
  Eigen::VectorXd weights_;
  Table v1_, v2_;
};

/// Cost of one step by the per-scheme formula: CN 15 + 12n; Poisson 17 + 4 n_M + 8 n_p;
/// Hamiltonian 18 + 4 n_E + 8 n_BY. CN uses n1 only.
double mvbp(Scheme s, double n1, double n2 = 0.0);

/// MVBP counted by the instrumentation for one step.
int mvbp_counted(Scheme s, const StepRecord& rec);

/// Mean iterations (n1, n2) of one step in the order used by mvbp().
std::pair<double, double> step_iterations(Scheme s, const StepRecord& rec);

double lfops(double ppp, double mvbp_per_step, double dim);

struct CostRecord {
  Scheme scheme = Scheme::Poisson;
  double ppp = 0.0;
  int dim = 0;
  double n1 = 0.0, n2 = 0.0;
  double mvbp = 0.0;
  double lfops = 0.0;
};

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Minimal CSV table with fixed columns.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns);
  void add_row(const std::vector<double>& values);
  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t n_rows() const { return rows_.size(); }
  void write(std::ostream& os) const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace coldplasma
