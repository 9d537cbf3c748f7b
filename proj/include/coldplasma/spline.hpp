#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace coldplasma {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

class OutOfDomain : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Uniform knot vector. Clamped vectors repeat the end knots degree+1 times;
/// periodic vectors carry degree ghost knots on each side, shifted by the period.
/// In both variants knots()[degree + k] is the left breakpoint of cell k.
class KnotVector {
 public:
  KnotVector() = default;

  int degree() const { return degree_; }
  int n_cells() const { return n_cells_; }
  bool periodic() const { return periodic_; }
  const Interval& domain() const { return domain_; }
  double cell_width() const { return domain_.length() / n_cells_; }
  const std::vector<double>& knots() const { return knots_; }
  double knot(int i) const { return knots_[static_cast<std::size_t>(i)]; }
  std::vector<double> breakpoints() const;

  /// Number of global basis functions: len(knots) - p - 1 when clamped, n_cells when periodic.
  int dimension() const;

  /// Cell index containing x; the right end of the domain belongs to the last cell.
  int find_cell(double x) const;

  /// The same breakpoints with the first and last knot removed (degree p-1).
  KnotVector reduced() const;

  friend KnotVector make_knot_vector(int n_cells, int degree, Interval domain, bool periodic);

 private:
  int degree_ = 0;
  int n_cells_ = 0;
  bool periodic_ = false;
  Interval domain_{};
  std::vector<double> knots_;
};

KnotVector make_knot_vector(int n_cells, int degree, Interval domain, bool periodic);

enum class BasisKind { N, D };

/// Values of the p+1 (or p for D-splines) nonzero basis functions at a point.
/// Row k of `values` holds the k-th derivative; column j belongs to local index first_index + j.
struct BasisValues {
  int first_index = 0;
  Eigen::MatrixXd values;
};

/// Univariate spline basis. A D-basis of degree p is the Curry-Schoenberg family
/// D_i = p N_i^{p-1} / (t_{i+p} - t_i), evaluated on the reduced knot vector.
class BSplineBasis1D {
 public:
  BSplineBasis1D() = default;
  explicit BSplineBasis1D(KnotVector knots);

  BasisKind kind() const { return kind_; }
  /// Degree of the N-spline family this basis derives from.
  int degree() const { return knots_.degree(); }
  /// Polynomial degree of the functions actually evaluated.
  int local_degree() const { return kind_ == BasisKind::N ? degree() : degree() - 1; }
  int n_local() const { return local_degree() + 1; }
  int dimension() const;
  bool periodic() const { return knots_.periodic(); }
  int n_cells() const { return knots_.n_cells(); }
  const Interval& domain() const { return knots_.domain(); }
  const KnotVector& knot_vector() const { return knots_; }

  /// Map a local (extended) index to its global coefficient index.
  int global_index(int local) const;

  BasisValues eval(double x, int nderiv = 0) const;
  /// Same as eval() but with an explicit cell, for quadrature points on cell boundaries.
  BasisValues eval_in_cell(int cell, double x, int nderiv = 0) const;

  /// Sum of all basis functions times their coefficients at x.
  double eval_function(const Eigen::Ref<const Eigen::VectorXd>& coeffs, double x) const;

  friend BSplineBasis1D curry_schoenberg(const BSplineBasis1D& basis);

 private:
  KnotVector knots_{};
  KnotVector eval_knots_{};
  BasisKind kind_ = BasisKind::N;
};

BSplineBasis1D curry_schoenberg(const BSplineBasis1D& basis);

/// Averages of p consecutive interior knots, one point per global basis function.
/// Periodic points are wrapped into the domain and returned in global index order.
std::vector<double> greville_points(const BSplineBasis1D& basis);

struct QuadratureRule {
  int n_points = 0;
  /// points(k, q), weights(k, q) for cell k and point q.
  Eigen::MatrixXd points;
  Eigen::MatrixXd weights;
  int n_cells() const { return static_cast<int>(points.rows()); }
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n_points, Eigen::VectorXd& nodes, Eigen::VectorXd& weights);

QuadratureRule gauss_rule(int n_points, const std::vector<double>& breakpoints);

/// 1D mass matrix of a basis, dense. Exact for the spline integrand.
Eigen::MatrixXd mass_matrix_1d(const BSplineBasis1D& basis);

}  // namespace coldplasma
