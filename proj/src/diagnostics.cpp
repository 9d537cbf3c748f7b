#include "coldplasma/diagnostics.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace coldplasma {

double hamiltonian(const StateU& u, const SystemOperators& ops) {
  return 0.5 * (u.E.dot(ops.M1 * u.E) + u.B.dot(ops.M2 * u.B) + u.Y.dot(ops.M1 * u.Y));
}

double total_charge(const Eigen::VectorXd& E, const SpMat& weak_div) { return (weak_div * E).sum(); }

double div_b_max(const Eigen::VectorXd& B, const SpMat& D) {
  if (D.rows() == 0) return 0.0;
  return (D * B).cwiseAbs().maxCoeff();
}

Eigen::VectorXd source_at(const SystemOperators& ops, double t) {
  return ops.envelope_at(t) * (std::cos(t) * ops.S_R + std::sin(t) * ops.S_I);
}

DiagnosticRecord diagnose(const StateU& u, const SystemOperators& ops) {
  DiagnosticRecord r;
  r.t = u.t;
  r.hamiltonian = hamiltonian(u, ops);
  r.total_charge = total_charge(u.E, ops.weak_div);
  r.div_b_max = div_b_max(u.B, ops.complex->div_f);
  r.boundary_dissipation = u.E.dot(ops.A1 * u.E);
  r.collisional_dissipation = u.Y.dot(ops.M1_nu * u.Y);
  r.source_power = u.E.dot(source_at(ops, u.t));
  return r;
}

std::vector<double> energy_balance_residual(const std::vector<StateU>& states, const SystemOperators& ops) {
  std::vector<double> out;
  for (std::size_t n = 0; n + 1 < states.size(); ++n) {
    const StateU& a = states[n];
    const StateU& b = states[n + 1];
    const double dt = b.t - a.t;
    if (!(dt > 0.0)) throw std::invalid_argument("energy_balance_residual: times must increase");
    const Eigen::VectorXd Em = 0.5 * (a.E + b.E);
    const Eigen::VectorXd Ym = 0.5 * (a.Y + b.Y);
    const double power =
        -Em.dot(ops.A1 * Em) - Ym.dot(ops.M1_nu * Ym) + Em.dot(source_at(ops, 0.5 * (a.t + b.t)));
    out.push_back((hamiltonian(b, ops) - hamiltonian(a, ops)) / dt - power);
  }
  return out;
}

StateU project_exact(const SystemOperators& ops, const ExactSolution& exact, double t) {
  const DeRhamComplex& cx = *ops.complex;
  StateU u;
  u.t = t;
  u.E = project_L2(cx.V(1), [&](const Vec3& x) { return exact(t, x).E; }).data;
  u.B = project_commuting(cx.V(2), [&](const Vec3& x) { return exact(t, x).B; }).data;
  u.Y = project_L2(cx.V(1), [&](const Vec3& x) { return exact(t, x).Y; }).data;
  return u;
}

double l2_distance(const TensorSpace& space, const Eigen::VectorXd& coeffs, const VectorFunction& f,
                   int quad_points) {
  std::array<QuadratureRule, 3> rules;
  for (int d = 0; d < 3; ++d) {
    const BSplineBasis1D& b = space.component(0).bases[d];
    int q = quad_points;
    if (q <= 0) {
      q = 0;
      for (int c = 0; c < space.n_components(); ++c) q = std::max(q, space.component(c).bases[d].degree());
      q += 3;
    }
    rules[d] = gauss_rule(q, b.knot_vector().breakpoints());
  }
  double sum = 0.0;
  for (int kx = 0; kx < rules[0].n_cells(); ++kx)
    for (int ky = 0; ky < rules[1].n_cells(); ++ky)
      for (int kz = 0; kz < rules[2].n_cells(); ++kz)
        for (int qx = 0; qx < rules[0].n_points; ++qx)
          for (int qy = 0; qy < rules[1].n_points; ++qy)
            for (int qz = 0; qz < rules[2].n_points; ++qz) {
              const Vec3 x(rules[0].points(kx, qx), rules[1].points(ky, qy), rules[2].points(kz, qz));
              const double w = rules[0].weights(kx, qx) * rules[1].weights(ky, qy) * rules[2].weights(kz, qz);
              Vec3 diff = evaluate<double>(space, coeffs, x);
              if (f) diff -= f(x);
              if (!space.is_vector()) diff.tail<2>().setZero();
              sum += w * diff.squaredNorm();
            }
  return std::sqrt(sum);
}

ErrorNorms error_norms(const StateU& u, const StateU& projected, const ExactSolution& exact,
                       const SystemOperators& ops, int quad_points) {
  const DeRhamComplex& cx = *ops.complex;
  const double t = u.t;
  const VectorFunction fE = [&](const Vec3& x) { return exact(t, x).E; };
  const VectorFunction fB = [&](const Vec3& x) { return exact(t, x).B; };
  const VectorFunction fY = [&](const Vec3& x) { return exact(t, x).Y; };
  const auto mnorm = [](const SpMat& M, const Eigen::VectorXd& v) { return std::sqrt(std::max(0.0, v.dot(M * v))); };

  ErrorNorms e;
  e.proj = {l2_distance(cx.V(1), projected.E, fE, quad_points), l2_distance(cx.V(2), projected.B, fB, quad_points),
            l2_distance(cx.V(1), projected.Y, fY, quad_points)};
  e.total = {l2_distance(cx.V(1), u.E, fE, quad_points), l2_distance(cx.V(2), u.B, fB, quad_points),
             l2_distance(cx.V(1), u.Y, fY, quad_points)};
  e.solver = {mnorm(ops.M1, projected.E - u.E), mnorm(ops.M2, projected.B - u.B), mnorm(ops.M1, projected.Y - u.Y)};
  const Eigen::VectorXd zE = Eigen::VectorXd::Zero(u.E.size()), zB = Eigen::VectorXd::Zero(u.B.size());
  e.exact_norm = {l2_distance(cx.V(1), zE, fE, quad_points), l2_distance(cx.V(2), zB, fB, quad_points),
                  l2_distance(cx.V(1), zE, fY, quad_points)};
  return e;
}

ErrorEvaluator::ErrorEvaluator(const SystemOperators& ops, int quad_points) : ops_(&ops) {
  const DeRhamComplex& cx = *ops.complex;
  std::array<QuadratureRule, 3> rules;
  for (int d = 0; d < 3; ++d) {
    const int q = quad_points > 0 ? quad_points : cx.degrees[d] + 3;
    rules[d] = gauss_rule(q, cx.n_bases[d].knot_vector().breakpoints());
  }
  std::vector<double> w;
  for (int kx = 0; kx < rules[0].n_cells(); ++kx)
    for (int qx = 0; qx < rules[0].n_points; ++qx)
      for (int ky = 0; ky < rules[1].n_cells(); ++ky)
        for (int qy = 0; qy < rules[1].n_points; ++qy)
          for (int kz = 0; kz < rules[2].n_cells(); ++kz)
            for (int qz = 0; qz < rules[2].n_points; ++qz) {
              points_.emplace_back(rules[0].points(kx, qx), rules[1].points(ky, qy), rules[2].points(kz, qz));
              w.push_back(rules[0].weights(kx, qx) * rules[1].weights(ky, qy) * rules[2].weights(kz, qz));
            }
  weights_ = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  v1_ = make_table(cx.V(1));
  v2_ = make_table(cx.V(2));
}

ErrorEvaluator::Table ErrorEvaluator::make_table(const TensorSpace& space) const {
  Table tab;
  tab.space = &space;
  const int np = static_cast<int>(points_.size());
  for (int c = 0; c < space.n_components(); ++c) {
    const ComponentSpace& comp = space.component(c);
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < np; ++i) {
      std::array<BasisValues, 3> bv;
      for (int d = 0; d < 3; ++d) bv[d] = comp.bases[d].eval(points_[static_cast<std::size_t>(i)][d], 0);
      for (int a = 0; a < comp.bases[0].n_local(); ++a) {
        const int ia = comp.bases[0].global_index(bv[0].first_index + a);
        for (int b = 0; b < comp.bases[1].n_local(); ++b) {
          const int ib = comp.bases[1].global_index(bv[1].first_index + b);
          for (int e = 0; e < comp.bases[2].n_local(); ++e) {
            const int ie = comp.bases[2].global_index(bv[2].first_index + e);
            trip.emplace_back(i, space.offset(c) + comp.flat(ia, ib, ie),
                              bv[0].values(0, a) * bv[1].values(0, b) * bv[2].values(0, e));
          }
        }
      }
    }
    tab.phi[static_cast<std::size_t>(c)].resize(np, space.dimension());
    tab.phi[static_cast<std::size_t>(c)].setFromTriplets(trip.begin(), trip.end());
  }
  return tab;
}

Eigen::MatrixXd ErrorEvaluator::sample(const VectorFunction& f) const {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(points_.size()), 3);
  for (std::size_t i = 0; i < points_.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = f(points_[i]).transpose();
  return v;
}

double ErrorEvaluator::distance(const Table& tab, const Eigen::VectorXd& coeffs, const Eigen::MatrixXd& values) const {
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd d = -values.col(c);
    if (c < tab.space->n_components()) d += tab.phi[static_cast<std::size_t>(c)] * coeffs;
    sum += weights_.dot(d.cwiseAbs2());
  }
  return std::sqrt(sum);
}

StateU ErrorEvaluator::project(const ExactSolution& exact, double t) const {
  const auto l2 = [&](const Eigen::MatrixXd& vals) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(v1_.space->dimension());
    for (int c = 0; c < 3; ++c)
      rhs += v1_.phi[static_cast<std::size_t>(c)].transpose() * weights_.cwiseProduct(vals.col(c));
    Eigen::VectorXd out;
    ops_->M1_solver.solve(rhs, out);
    return out;
  };
  StateU u;
  u.t = t;
  u.E = l2(sample([&](const Vec3& x) { return exact(t, x).E; }));
  u.Y = l2(sample([&](const Vec3& x) { return exact(t, x).Y; }));
  u.B = project_commuting(ops_->complex->V(2), [&](const Vec3& x) { return exact(t, x).B; }).data;
  return u;
}

ErrorNorms ErrorEvaluator::errors(const StateU& u, const StateU& projected, const ExactSolution& exact) const {
  const double t = u.t;
  Eigen::MatrixXd vE(static_cast<Eigen::Index>(points_.size()), 3), vB(vE.rows(), 3), vY(vE.rows(), 3);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const FieldTriple f = exact(t, points_[i]);
    const auto r = static_cast<Eigen::Index>(i);
    vE.row(r) = f.E.transpose();
    vB.row(r) = f.B.transpose();
    vY.row(r) = f.Y.transpose();
  }
  const auto mnorm = [](const SpMat& M, const Eigen::VectorXd& v) { return std::sqrt(std::max(0.0, v.dot(M * v))); };
  const Eigen::VectorXd z1 = Eigen::VectorXd::Zero(u.E.size()), z2 = Eigen::VectorXd::Zero(u.B.size());
  ErrorNorms e;
  e.proj = {distance(v1_, projected.E, vE), distance(v2_, projected.B, vB), distance(v1_, projected.Y, vY)};
  e.total = {distance(v1_, u.E, vE), distance(v2_, u.B, vB), distance(v1_, u.Y, vY)};
  e.solver = {mnorm(ops_->M1, projected.E - u.E), mnorm(ops_->M2, projected.B - u.B),
              mnorm(ops_->M1, projected.Y - u.Y)};
  e.exact_norm = {distance(v1_, z1, vE), distance(v2_, z2, vB), distance(v1_, z1, vY)};
  return e;
}

double mvbp(Scheme s, double n1, double n2) {
  if (n1 < 0.0 || n2 < 0.0) throw std::invalid_argument("mvbp: iteration averages must be nonnegative");
  switch (s) {
    case Scheme::CrankNicolson: return 15.0 + 12.0 * n1;
    case Scheme::Poisson: return 17.0 + 4.0 * n1 + 8.0 * n2;
    case Scheme::Hamiltonian: return 18.0 + 4.0 * n1 + 8.0 * n2;
  }
  throw std::invalid_argument("mvbp: unknown scheme");
}

int mvbp_counted(Scheme s, const StepRecord& rec) { return rec.solver_block_products() + mvbp_rhs_constant(s); }

std::pair<double, double> step_iterations(Scheme s, const StepRecord& rec) {
  switch (s) {
    case Scheme::CrankNicolson: return {rec.mean_iterations("cn"), 0.0};
    case Scheme::Poisson: return {rec.mean_iterations("maxwell"), rec.mean_iterations("plasma")};
    case Scheme::Hamiltonian: return {rec.mean_iterations("E"), rec.mean_iterations("BY")};
  }
  throw std::invalid_argument("step_iterations: unknown scheme");
}

double lfops(double ppp, double mvbp_per_step, double dim) { return ppp * mvbp_per_step * dim; }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more pairs");
  const int n = static_cast<int>(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope: values must be positive");
    A(i, 0) = std::log(x[i]);
    A(i, 1) = 1.0;
    b[i] = std::log(y[i]);
  }
  return A.colPivHouseholderQr().solve(b)[0];
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::add_row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) throw std::invalid_argument("CsvWriter: row width does not match header");
  rows_.push_back(values);
}

void CsvWriter::write(std::ostream& os) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << '\n' << std::setprecision(17);
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << '\n';
  }
}

void CsvWriter::write(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write(f);
}

}  // namespace coldplasma
