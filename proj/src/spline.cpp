#include "coldplasma/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace coldplasma {

KnotVector make_knot_vector(int n_cells, int degree, Interval domain, bool periodic) {
  if (n_cells < 1) throw std::invalid_argument("make_knot_vector: n_cells must be >= 1");
  if (degree < 0) throw std::invalid_argument("make_knot_vector: degree must be >= 0");
  if (!(domain.hi > domain.lo) || !std::isfinite(domain.lo) || !std::isfinite(domain.hi))
    throw std::invalid_argument("make_knot_vector: degenerate domain");

  KnotVector kv;
  kv.degree_ = degree;
  kv.n_cells_ = n_cells;
  kv.periodic_ = periodic;
  kv.domain_ = domain;
  const double h = domain.length() / n_cells;
  const auto breakpoint = [&](int k) {
    // exact end points, no accumulated rounding at b
    return k == n_cells ? domain.hi : domain.lo + k * h;
  };

  if (periodic) {
    kv.knots_.resize(static_cast<std::size_t>(n_cells + 2 * degree + 1));
    for (int j = 0; j <= n_cells + 2 * degree; ++j) {
      const int k = j - degree;
      kv.knots_[static_cast<std::size_t>(j)] =
          (k >= 0 && k <= n_cells) ? breakpoint(k) : domain.lo + k * h;
    }
  } else {
    kv.knots_.reserve(static_cast<std::size_t>(n_cells + 2 * degree + 1));
    for (int j = 0; j < degree; ++j) kv.knots_.push_back(domain.lo);
    for (int k = 0; k <= n_cells; ++k) kv.knots_.push_back(breakpoint(k));
    for (int j = 0; j < degree; ++j) kv.knots_.push_back(domain.hi);
  }
  return kv;
}

std::vector<double> KnotVector::breakpoints() const {
  return {knots_.begin() + degree_, knots_.begin() + degree_ + n_cells_ + 1};
}

int KnotVector::dimension() const {
  return periodic_ ? n_cells_ : static_cast<int>(knots_.size()) - degree_ - 1;
}

int KnotVector::find_cell(double x) const {
  const double tol = 1e-12 * domain_.length();
  if (x < domain_.lo - tol || x > domain_.hi + tol) {
    std::ostringstream msg;
    msg << "point " << x << " outside [" << domain_.lo << ", " << domain_.hi << "]";
    throw OutOfDomain(msg.str());
  }
  const int k = static_cast<int>(std::floor((x - domain_.lo) / cell_width()));
  return std::clamp(k, 0, n_cells_ - 1);
}

KnotVector KnotVector::reduced() const {
  if (degree_ < 1) throw std::invalid_argument("KnotVector::reduced: degree must be >= 1");
  KnotVector kv = *this;
  kv.degree_ = degree_ - 1;
  kv.knots_.assign(knots_.begin() + 1, knots_.end() - 1);
  return kv;
}

BSplineBasis1D::BSplineBasis1D(KnotVector knots)
    : knots_(std::move(knots)), eval_knots_(knots_), kind_(BasisKind::N) {}

BSplineBasis1D curry_schoenberg(const BSplineBasis1D& basis) {
  if (basis.kind() != BasisKind::N)
    throw std::invalid_argument("curry_schoenberg: input must be an N-basis");
  if (basis.degree() < 1) throw std::invalid_argument("curry_schoenberg: degree must be >= 1");
  BSplineBasis1D d;
  d.knots_ = basis.knots_;
  d.eval_knots_ = basis.knots_.reduced();
  d.kind_ = BasisKind::D;
  return d;
}

int BSplineBasis1D::dimension() const {
  if (kind_ == BasisKind::N) return knots_.dimension();
  return knots_.periodic() ? knots_.n_cells() : knots_.dimension() - 1;
}

int BSplineBasis1D::global_index(int local) const {
  if (!knots_.periodic()) return local;
  const int n = knots_.n_cells();
  return ((local % n) + n) % n;
}

BasisValues BSplineBasis1D::eval(double x, int nderiv) const {
  return eval_in_cell(knots_.find_cell(x), x, nderiv);
}

// Cox-de Boor recursion with derivatives (de Boor / Piegl-Tiller).
BasisValues BSplineBasis1D::eval_in_cell(int cell, double x, int nderiv) const {
  const int q = local_degree();
  const auto& t = eval_knots_.knots();
  const int span = q + cell;
  const int nd = std::min(nderiv, q);

  Eigen::MatrixXd ndu(q + 1, q + 1);
  std::vector<double> left(static_cast<std::size_t>(q + 1)), right(static_cast<std::size_t>(q + 1));
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= q; ++j) {
    left[j] = x - t[span + 1 - j];
    right[j] = t[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  BasisValues out;
  out.first_index = cell;
  out.values = Eigen::MatrixXd::Zero(nderiv + 1, q + 1);
  for (int j = 0; j <= q; ++j) out.values(0, j) = ndu(j, q);

  Eigen::MatrixXd a(2, q + 1);
  for (int r = 0; r <= q; ++r) {
    int s1 = 0;
    int s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= nd; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = q - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : q - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      out.values(k, r) = d;
      std::swap(s1, s2);
    }
  }
  double factor = q;
  for (int k = 1; k <= nd; ++k) {
    out.values.row(k) *= factor;
    factor *= (q - k);
  }

  if (kind_ == BasisKind::D) {
    const int p = degree();
    for (int j = 0; j <= q; ++j) {
      const int i = cell + j;
      out.values.col(j) *= p / (t[i + p] - t[i]);
    }
  }
  return out;
}

double BSplineBasis1D::eval_function(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                     double x) const {
  const BasisValues bv = eval(x, 0);
  double sum = 0.0;
  for (int j = 0; j < n_local(); ++j) sum += coeffs[global_index(bv.first_index + j)] * bv.values(0, j);
  return sum;
}

std::vector<double> greville_points(const BSplineBasis1D& basis) {
  if (basis.kind() != BasisKind::N)
    throw std::invalid_argument("greville_points: N-basis required");
  const int p = basis.degree();
  const auto& t = basis.knot_vector().knots();
  const int dim = basis.dimension();
  std::vector<double> pts(static_cast<std::size_t>(dim));
  if (p == 0) {
    for (int i = 0; i < dim; ++i) pts[i] = 0.5 * (t[i] + t[i + 1]);
    return pts;
  }
  const Interval dom = basis.domain();
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    for (int k = 1; k <= p; ++k) s += t[i + k];
    double g = s / p;
    if (basis.periodic()) {
      const double L = dom.length();
      g = dom.lo + std::fmod(std::fmod(g - dom.lo, L) + L, L);
      if (g >= dom.hi - 1e-14 * L) g = dom.lo;
    }
    pts[basis.global_index(i)] = g;
  }
  return pts;
}

void gauss_legendre(int n_points, Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  if (n_points < 1) throw std::invalid_argument("gauss_legendre: n_points must be >= 1");
  nodes.resize(n_points);
  weights.resize(n_points);
  const int m = (n_points + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n_points + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (int j = 1; j <= n_points; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      dp = n_points * (z * p1 - p2) / (z * z - 1.0);
      const double z_old = z;
      z = z_old - p1 / dp;
      if (std::abs(z - z_old) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p1 = 1.0;
    double p2 = 0.0;
    for (int j = 1; j <= n_points; ++j) {
      const double p3 = p2;
      p2 = p1;
      p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
    }
    dp = n_points * (z * p1 - p2) / (z * z - 1.0);
    nodes[i] = -z;
    nodes[n_points - 1 - i] = z;
    weights[i] = weights[n_points - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  if (n_points % 2 == 1) nodes[m - 1] = 0.0;
}

QuadratureRule gauss_rule(int n_points, const std::vector<double>& breakpoints) {
  if (breakpoints.size() < 2) throw std::invalid_argument("gauss_rule: need at least one cell");
  Eigen::VectorXd xi, wi;
  gauss_legendre(n_points, xi, wi);
  const int nc = static_cast<int>(breakpoints.size()) - 1;
  QuadratureRule rule;
  rule.n_points = n_points;
  rule.points.resize(nc, n_points);
  rule.weights.resize(nc, n_points);
  for (int k = 0; k < nc; ++k) {
    const double a = breakpoints[k];
    const double b = breakpoints[k + 1];
    for (int q = 0; q < n_points; ++q) {
      rule.points(k, q) = 0.5 * (a + b) + 0.5 * (b - a) * xi[q];
      rule.weights(k, q) = 0.5 * (b - a) * wi[q];
    }
  }
  return rule;
}

Eigen::MatrixXd mass_matrix_1d(const BSplineBasis1D& basis) {
  const int n = basis.dimension();
  const QuadratureRule rule = gauss_rule(basis.local_degree() + 1, basis.knot_vector().breakpoints());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < rule.n_cells(); ++k) {
    for (int q = 0; q < rule.n_points; ++q) {
      const BasisValues bv = basis.eval_in_cell(k, rule.points(k, q));
      for (int a = 0; a < basis.n_local(); ++a) {
        const int ia = basis.global_index(bv.first_index + a);
        for (int b = 0; b < basis.n_local(); ++b) {
          const int ib = basis.global_index(bv.first_index + b);
          m(ia, ib) += rule.weights(k, q) * bv.values(0, a) * bv.values(0, b);
        }
      }
    }
  }
  return m;
}

}  // namespace coldplasma
