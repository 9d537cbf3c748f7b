#pragma once

// Dense brute-force references used by the unit and acceptance tests.

#include "coldplasma/assembly.hpp"

#include <algorithm>
#include <random>

namespace oracle {

using namespace coldplasma;

/// Cox-de Boor recursion on an explicit knot vector.
inline double cox_de_boor(const std::vector<double>& t, int i, int p, double x) {
  if (p == 0) {
    const bool last = x == t.back() && t[i] < t[i + 1] && t[i + 1] == t.back();
    return ((t[i] <= x && x < t[i + 1]) || last) ? 1.0 : 0.0;
  }
  double v = 0.0;
  if (t[i + p] > t[i]) v += (x - t[i]) / (t[i + p] - t[i]) * cox_de_boor(t, i, p - 1, x);
  if (t[i + p + 1] > t[i + 1]) v += (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * cox_de_boor(t, i + 1, p - 1, x);
  return v;
}

inline std::vector<double> clamped_knots(int n_cells, int p, double lo, double hi) {
  std::vector<double> t;
  for (int i = 0; i < p; ++i) t.push_back(lo);
  for (int k = 0; k <= n_cells; ++k) t.push_back(lo + (hi - lo) * k / n_cells);
  for (int i = 0; i < p; ++i) t.push_back(hi);
  return t;
}

/// All basis functions of a space at x: column c holds component c.
inline Eigen::MatrixXd dense_basis(const TensorSpace& s, const Vec3& x) {
  Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(s.dimension(), 3);
  for (int c = 0; c < s.n_components(); ++c) {
    const ComponentSpace& comp = s.component(c);
    std::array<BasisValues, 3> bv;
    for (int d = 0; d < 3; ++d) bv[d] = comp.bases[d].eval(x[d], 0);
    for (int a = 0; a < comp.bases[0].n_local(); ++a)
      for (int b = 0; b < comp.bases[1].n_local(); ++b)
        for (int e = 0; e < comp.bases[2].n_local(); ++e) {
          const int idx = s.offset(c) + comp.flat(comp.bases[0].global_index(bv[0].first_index + a),
                                                 comp.bases[1].global_index(bv[1].first_index + b),
                                                 comp.bases[2].global_index(bv[2].first_index + e));
          phi(idx, c) += bv[0].values(0, a) * bv[1].values(0, b) * bv[2].values(0, e);
        }
  }
  return phi;
}

/// Gauss points and weights of a uniform grid, n[d] points per cell in direction d. A direction
/// equal to fixed_dir is collapsed to the single coordinate fixed_x (face integrals).
inline std::vector<std::pair<Vec3, double>> quadrature(const Box& box, const Index3& cells, const Index3& n,
                                                       int fixed_dir = -1, double fixed_x = 0.0) {
  std::array<std::vector<std::pair<double, double>>, 3> pts;
  for (int d = 0; d < 3; ++d) {
    if (d == fixed_dir) {
      pts[d].push_back({fixed_x, 1.0});
      continue;
    }
    Eigen::VectorXd gx, gw;
    gauss_legendre(n[d], gx, gw);
    const double h = box[d].length() / cells[d];
    for (int k = 0; k < cells[d]; ++k)
      for (int q = 0; q < n[d]; ++q)
        pts[d].push_back({box[d].lo + h * (k + 0.5 * (gx[q] + 1.0)), 0.5 * h * gw[q]});
  }
  std::vector<std::pair<Vec3, double>> out;
  for (const auto& a : pts[0])
    for (const auto& b : pts[1])
      for (const auto& c : pts[2]) out.push_back({Vec3(a.first, b.first, c.first), a.second * b.second * c.second});
  return out;
}

inline std::vector<std::pair<Vec3, double>> quadrature(const Box& box, const Index3& cells, int n,
                                                       int fixed_dir = -1, double fixed_x = 0.0) {
  return quadrature(box, cells, Index3{n, n, n}, fixed_dir, fixed_x);
}

/// Gradients of all V0 basis functions at x (one row per function).
inline Eigen::MatrixXd dense_grad(const TensorSpace& s, const Vec3& x) {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(s.dimension(), 3);
  const ComponentSpace& comp = s.component(0);
  std::array<BasisValues, 3> bv;
  for (int d = 0; d < 3; ++d) bv[d] = comp.bases[d].eval(x[d], 1);
  for (int a = 0; a < comp.bases[0].n_local(); ++a)
    for (int b = 0; b < comp.bases[1].n_local(); ++b)
      for (int e = 0; e < comp.bases[2].n_local(); ++e) {
        const int idx = comp.flat(comp.bases[0].global_index(bv[0].first_index + a),
                                  comp.bases[1].global_index(bv[1].first_index + b),
                                  comp.bases[2].global_index(bv[2].first_index + e));
        g(idx, 0) += bv[0].values(1, a) * bv[1].values(0, b) * bv[2].values(0, e);
        g(idx, 1) += bv[0].values(0, a) * bv[1].values(1, b) * bv[2].values(0, e);
        g(idx, 2) += bv[0].values(0, a) * bv[1].values(0, b) * bv[2].values(1, e);
      }
  return g;
}

/// Rows of a dense basis table that are not identically zero.
inline std::vector<int> support(const Eigen::MatrixXd& phi) {
  std::vector<int> rows;
  for (int i = 0; i < phi.rows(); ++i)
    if (phi.row(i).cwiseAbs().maxCoeff() != 0.0) rows.push_back(i);
  return rows;
}

/// sum_q w_q a(x_q) W(x_q) b(x_q)^T for dense basis tables a, b (functions of x).
template <typename Scalar, typename RowFn, typename ColFn, typename WeightFn>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pairing_tables(int rows, int cols, RowFn row_table,
                                                                     ColFn col_table,
                                                                     const std::vector<std::pair<Vec3, double>>& q,
                                                                     WeightFn weight) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat out = Mat::Zero(rows, cols);
  for (const auto& [x, w] : q) {
    const Eigen::MatrixXd pr = row_table(x), pc = col_table(x);
    const std::vector<int> ir = support(pr), ic = support(pc);
    const Eigen::Matrix<Scalar, 3, 3> W = Scalar(w) * weight(x);
    for (int i : ir) {
      const Eigen::Matrix<Scalar, 1, 3> a = pr.row(i).cast<Scalar>() * W;
      for (int j : ic) out(i, j) += (a * pc.row(j).cast<Scalar>().transpose())(0, 0);
    }
  }
  return out;
}

/// sum_q w_q phi_row(x_q) W(x_q) phi_col(x_q)^T, dense.
template <typename Scalar, typename WeightFn>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pairing(const TensorSpace& row, const TensorSpace& col,
                                                              const std::vector<std::pair<Vec3, double>>& q,
                                                              WeightFn weight) {
  return pairing_tables<Scalar>(
      row.dimension(), col.dimension(), [&](const Vec3& x) { return dense_basis(row, x); },
      [&](const Vec3& x) { return dense_basis(col, x); }, q, weight);
}

inline DeRhamComplex random_complex(std::mt19937& rng, int max_cells = 3, int max_degree = 3) {
  std::uniform_int_distribution<int> nc(1, max_cells), deg(1, max_degree), coin(0, 1);
  std::uniform_real_distribution<double> len(0.5, 3.0);
  Index3 cells{}, degs{};
  std::array<bool, 3> per{};
  Box box;
  for (int d = 0; d < 3; ++d) {
    cells[d] = nc(rng);
    degs[d] = deg(rng);
    per[d] = coin(rng) == 1;
    // a periodic direction needs at least as many cells as its degree
    if (per[d] && cells[d] < degs[d]) cells[d] = degs[d];
    const double lo = len(rng) - 1.0;
    box.sides[d] = Interval{lo, lo + len(rng)};
  }
  return build_complex(cells, degs, per, box);
}


/// Polynomial coefficients: omega_p linear, omega_c constant, nu quadratic, b0 = e_z.
inline PlasmaProfile polynomial_profile() {
  PlasmaProfile p;
  p.omega_p = [](const Vec3& x) { return 0.3 + 0.2 * x[0] - 0.1 * x[1] + 0.05 * x[2]; };
  p.omega_c = [](const Vec3&) { return 0.7; };
  p.b0 = [](const Vec3&) { return Vec3(0.0, 0.0, 1.0); };
  p.nu_e = [](const Vec3& x) { return 0.1 + 0.05 * x[0] * x[0] + 0.02 * x[1] * x[2]; };
  return p;
}

/// Skew matrix W with a^T W b = (a x b) . v.
inline Eigen::Matrix3d triple_product(const Vec3& v) {
  Eigen::Matrix3d W = Eigen::Matrix3d::Zero();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) W(a, b) = Vec3::Unit(a).cross(Vec3::Unit(b)).dot(v);
  return W;
}

struct DenseSystem {
  Eigen::MatrixXd M1, M2, M1_wp, M1_nu, R1, A1, B1, weak_div;
};

/// Every matrix of the semi-discrete system by brute-force quadrature with n points per cell.
inline DenseSystem dense_system(const DeRhamComplex& cx, const PlasmaProfile& prof, int n) {
  const auto I3 = [](const Vec3&) { return Eigen::Matrix3d::Identity().eval(); };
  const auto vol = quadrature(cx.domain, cx.n_cells, n);
  const TensorSpace &v0 = cx.V(0), &v1 = cx.V(1), &v2 = cx.V(2);
  DenseSystem d;
  d.M1 = pairing<double>(v1, v1, vol, I3);
  d.M2 = pairing<double>(v2, v2, vol, I3);
  d.M1_wp = pairing<double>(v1, v1, vol, [&](const Vec3& x) { return (prof.omega_p(x) * Eigen::Matrix3d::Identity()).eval(); });
  d.M1_nu = pairing<double>(v1, v1, vol, [&](const Vec3& x) { return (prof.nu_e(x) * Eigen::Matrix3d::Identity()).eval(); });
  d.R1 = pairing<double>(v1, v1, vol, [&](const Vec3& x) { return triple_product(prof.rotation(x)); });
  d.A1 = Eigen::MatrixXd::Zero(v1.dimension(), v1.dimension());
  d.B1 = Eigen::MatrixXd::Zero(v0.dimension(), v1.dimension());
  for (int dir = 0; dir < 3; ++dir) {
    if (cx.periodic[dir]) continue;
    for (int side = 0; side < 2; ++side) {
      const double xf = side == 0 ? cx.domain[dir].lo : cx.domain[dir].hi;
      const Vec3 nu = Vec3::Unit(dir) * (side == 0 ? -1.0 : 1.0);
      const auto face = quadrature(cx.domain, cx.n_cells, n, dir, xf);
      // (nu x a) . (nu x b) = a . b - (a . nu)(b . nu)
      d.A1 += pairing<double>(v1, v1, face, [&](const Vec3&) { return (Eigen::Matrix3d::Identity() - nu * nu.transpose()).eval(); });
      d.B1 += pairing<double>(v0, v1, face, [&](const Vec3&) {
        Eigen::Matrix3d W = Eigen::Matrix3d::Zero();
        W.row(0) = nu.transpose();
        return W;
      });
    }
  }
  d.weak_div = d.B1 - pairing_tables<double>(
                          v0.dimension(), v1.dimension(), [&](const Vec3& x) { return dense_grad(v0, x); },
                          [&](const Vec3& x) { return dense_basis(v1, x); }, vol, I3);
  return d;
}

/// Dielectric mass on the quadrature rule given by n (the Stix entries are rational in general).
inline Eigen::MatrixXcd dense_dielectric(const DeRhamComplex& cx, const PlasmaProfile& prof, const Index3& n) {
  return pairing<Complex>(cx.V(1), cx.V(1), quadrature(cx.domain, cx.n_cells, n),
                          [&](const Vec3& x) { return dielectric_tensor(stix(prof, x), prof.b0(x)); });
}

inline double max_diff(const SpMat& a, const Eigen::MatrixXd& b) { return (Eigen::MatrixXd(a) - b).cwiseAbs().maxCoeff(); }


/// Fourth-order central difference of a vector-valued function of one parameter.
template <typename F>
Vec3 d4(F f, double h) {
  return (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
}

struct ModelResiduals {
  double ampere = 0.0, faraday = 0.0, current = 0.0, boundary = 0.0;
  double max() const { return std::max({ampere, faraday, current, boundary}); }
};

/// Pointwise residuals of the forced model for an exact solution, by finite differences:
///   dE/dt - curl B + wp Y - f,   dB/dt + curl E,   dY/dt + wc Y x b0 - wp E + nu Y,
/// and on both x faces  nu x (E - B x nu) - nu x s.
inline ModelResiduals manufactured_residuals(const ManufacturedSolution& sol, const Box& box, double t,
                                             const Vec3& x, double h = 1e-3) {
  const PlasmaProfile prof = sol.profile();
  const auto at = [&](double tt, const Vec3& xx) { return sol.fields(tt, xx); };
  const auto dt = [&](auto pick) { return d4([&](double s) { return pick(at(t + s, x)); }, h); };
  const auto curl = [&](auto pick) {
    std::array<Vec3, 3> g;
    for (int j = 0; j < 3; ++j) g[j] = d4([&](double s) { return pick(at(t, x + s * Vec3::Unit(j))); }, h);
    return Vec3(g[1][2] - g[2][1], g[2][0] - g[0][2], g[0][1] - g[1][0]);
  };
  const auto E = [](const FieldTriple& f) { return f.E; };
  const auto B = [](const FieldTriple& f) { return f.B; };
  const auto Y = [](const FieldTriple& f) { return f.Y; };
  const FieldTriple u = at(t, x);
  const double wp = prof.omega_p(x);
  ModelResiduals r;
  const Vec3 f = sol.volume_R(x) * std::cos(t) + sol.volume_I(x) * std::sin(t);
  r.ampere = (dt(E) - curl(B) + wp * u.Y - f).norm();
  r.faraday = (dt(B) + curl(E)).norm();
  r.current = (dt(Y) + prof.omega_c(x) * u.Y.cross(prof.b0(x)) - wp * u.E + prof.nu_e(x) * u.Y).norm();
  for (int side = 0; side < 2; ++side) {
    const Vec3 nu = Vec3::Unit(0) * (side == 0 ? -1.0 : 1.0);
    const Vec3 xb(side == 0 ? box[0].lo : box[0].hi, x[1], x[2]);
    const FieldTriple ub = at(t, xb);
    const Vec3 s = sol.boundary_R(xb, nu) * std::cos(t) + sol.boundary_I(xb, nu) * std::sin(t);
    r.boundary = std::max(r.boundary, nu.cross(ub.E - ub.B.cross(nu) - s).norm());
  }
  return r;
}

}  // namespace oracle
