#include "coldplasma/integrators.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace coldplasma {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Poisson: return "poisson";
    case Scheme::Hamiltonian: return "hamiltonian";
    case Scheme::CrankNicolson: return "cn";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "poisson") return Scheme::Poisson;
  if (name == "hamiltonian") return Scheme::Hamiltonian;
  if (name == "cn" || name == "crank-nicolson") return Scheme::CrankNicolson;
  throw std::invalid_argument("unknown scheme '" + name + "'");
}

StateU StateU::zeros(const SystemOperators& ops) {
  StateU u;
  u.E = Eigen::VectorXd::Zero(ops.dim_E());
  u.B = Eigen::VectorXd::Zero(ops.dim_B());
  u.Y = Eigen::VectorXd::Zero(ops.dim_E());
  return u;
}

Eigen::VectorXd StateU::stacked() const {
  Eigen::VectorXd v(E.size() + B.size() + Y.size());
  v << E, B, Y;
  return v;
}

void StateU::unstack(const Eigen::VectorXd& v) {
  E = v.head(E.size());
  B = v.segment(E.size(), B.size());
  Y = v.tail(Y.size());
}

double StateU::max_abs() const {
  return std::max({E.cwiseAbs().maxCoeff(), B.cwiseAbs().maxCoeff(), Y.cwiseAbs().maxCoeff()});
}

int StepRecord::solver_block_products() const {
  int n = 0;
  for (const auto& s : solves) n += s.block_products();
  return n;
}

double StepRecord::mean_iterations(const std::string& flow) const {
  int count = 0;
  double sum = 0.0;
  for (const auto& s : solves)
    if (s.flow == flow) {
      ++count;
      sum += s.stats.iterations;
    }
  return count > 0 ? sum / count : 0.0;
}

void StepRecord::append(const StepRecord& other) {
  solves.insert(solves.end(), other.solves.begin(), other.solves.end());
  rhs_products += other.rhs_products;
}

std::vector<SubflowTerms> scheme_layout(Scheme s) {
  switch (s) {
    case Scheme::Poisson: return {{"maxwell", true, true, true}, {"plasma", false, false, false}};
    case Scheme::Hamiltonian: return {{"E", false, false, false}, {"BY", true, true, true}};
    case Scheme::CrankNicolson: return {{"cn", true, true, true}};
  }
  return {};
}

int mvbp_rhs_constant(Scheme s) {
  switch (s) {
    case Scheme::CrankNicolson: return 9;
    case Scheme::Poisson: return 9;
    case Scheme::Hamiltonian: return 10;
  }
  return 0;
}

Integrator::Integrator(const SystemOperators& ops, SchemeConfig cfg) : ops_(&ops), cfg_(cfg) {
  if (!(cfg_.dt > 0.0)) throw std::invalid_argument("Integrator: dt must be positive");
  const SpMat& C = ops.complex->curl_f;
  CtM2_ = SpMat(C.transpose()) * ops.M2;
  CtM2C_ = CtM2_ * C;
  RN_ = ops.R1 + ops.M1_nu;
  eye_B_.resize(ops.dim_B(), ops.dim_B());
  eye_B_.setIdentity();
}

Eigen::VectorXd Integrator::source(double t0, double t1) const {
  if (!cfg_.use_source) return Eigen::VectorXd::Zero(ops_->dim_E());
  return ops_->source_integral(t0, t1);
}

void Integrator::check(const SolveStats& st, const char* flow) const {
  if (st.converged) return;
  std::ostringstream msg;
  msg << flow << " solve failed after " << st.iterations << " iterations (residual " << st.final_residual
      << (st.status == SolveStatus::Breakdown ? ", breakdown)" : ")");
  throw SolveFailure(msg.str(), st);
}

const SpMat& Integrator::system_matrix(Kind kind, double tau) {
  const auto key = std::make_pair(static_cast<int>(kind), tau);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  const SystemOperators& o = *ops_;
  const int nE = o.dim_E(), nB = o.dim_B();
  SpMat m;
  switch (kind) {
    case Kind::Maxwell:
      m = o.M1 + (0.25 * tau * tau) * CtM2C_ + (0.5 * tau) * o.A1;
      break;
    case Kind::Plasma: {
      const SpMat yy = o.M1 + (0.5 * tau) * RN_;
      m = block_matrix({{{&o.M1, 1.0}, {&o.M1_wp, 0.5 * tau}}, {{&o.M1_wp, -0.5 * tau}, {&yy, 1.0}}}, {nE, nE},
                       {nE, nE});
      break;
    }
    case Kind::BY: {
      const SpMat ee = o.M1 + (0.5 * tau) * o.A1;
      const SpMat yy = o.M1 + (0.5 * tau) * RN_;
      m = block_matrix({{{&ee, 1.0}, {&o.M1_wp, 0.5 * tau}}, {{}, {&yy, 1.0}}}, {nE, nE}, {nE, nE});
      break;
    }
    case Kind::CN: {
      const SpMat ee = o.M1 + (0.5 * tau) * o.A1;
      const SpMat yy = o.M1 + (0.5 * tau) * RN_;
      const SpMat& C = o.complex->curl_f;
      m = block_matrix({{{&ee, 1.0}, {&CtM2_, -0.5 * tau}, {&o.M1_wp, 0.5 * tau}},
                        {{&C, 0.5 * tau}, {&eye_B_, 1.0}, {}},
                        {{&o.M1_wp, -0.5 * tau}, {}, {&yy, 1.0}}},
                       {nE, nB, nE}, {nE, nB, nE});
      break;
    }
  }
  return cache_.emplace(key, std::move(m)).first->second;
}

SolveStats Integrator::solve(const SpMat& A, const LinearOperator& P, bool spd, const Eigen::VectorXd& rhs,
                              Eigen::VectorXd& x) {
  if (!cfg_.direct) return spd ? pcg(LinearOperator::from_matrix(A), P, rhs, x, cfg_.solver)
                               : pbicgstab(LinearOperator::from_matrix(A), P, rhs, x, cfg_.solver);
  auto& lu = lu_[&A];
  if (!lu) {
    lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu->compute(Eigen::SparseMatrix<double>(A));
    if (lu->info() != Eigen::Success) throw std::runtime_error("Integrator: factorization failed");
  }
  x = lu->solve(rhs);
  SolveStats st;
  st.converged = true;
  st.status = SolveStatus::Converged;
  st.final_residual = (A * x - rhs).norm() / std::max(rhs.norm(), std::numeric_limits<double>::min());
  return st;
}

StepRecord Integrator::flow_maxwell_P(StateU& u, double tau, double t_start) {
  const SystemOperators& o = *ops_;
  const SpMat& A = system_matrix(Kind::Maxwell, tau);
  StepRecord rec;
  const Eigen::VectorXd rhs = o.M1 * u.E + (0.5 * tau) * (CtM2_ * u.B) + 0.5 * source(t_start, t_start + tau);
  Eigen::VectorXd half = u.E;
  const SolveStats st = solve(A, o.M1_solver.as_operator(), true, rhs, half);
  check(st, "maxwell");
  rec.solves.push_back({"maxwell", 1, st});
  u.E = 2.0 * half - u.E;
  u.B -= tau * (o.complex->curl_f * half);
  rec.rhs_products = 3;
  return rec;
}

StepRecord Integrator::flow_plasma_P(StateU& u, double tau) {
  const SystemOperators& o = *ops_;
  const int nE = o.dim_E();
  const SpMat& A = system_matrix(Kind::Plasma, tau);
  Eigen::VectorXd rhs(2 * nE), x(2 * nE);
  const Eigen::VectorXd wpE = o.M1_wp * u.E, wpY = o.M1_wp * u.Y;
  rhs << o.M1 * u.E - (0.5 * tau) * wpY, o.M1 * u.Y - (0.5 * tau) * (RN_ * u.Y) + (0.5 * tau) * wpE;
  x << u.E, u.Y;
  const LinearOperator P = block_diag_precond({o.M1_solver.as_operator(), o.M1_solver.as_operator()}, 2 * nE);
  const SolveStats st = solve(A, P, false, rhs, x);
  check(st, "plasma");
  StepRecord rec;
  rec.solves.push_back({"plasma", 2, st});
  u.E = x.head(nE);
  u.Y = x.tail(nE);
  rec.rhs_products = 5;
  return rec;
}

StepRecord Integrator::strang_poisson_step(StateU& u, double dt) {
  const double t0 = u.t;
  StepRecord rec = flow_maxwell_P(u, 0.5 * dt, t0);
  rec.append(flow_plasma_P(u, dt));
  rec.append(flow_maxwell_P(u, 0.5 * dt, t0 + 0.5 * dt));
  u.t = t0 + dt;
  return rec;
}

StepRecord Integrator::flow_E_H(StateU& u, double tau) {
  const SystemOperators& o = *ops_;
  u.B -= tau * (o.complex->curl_f * u.E);
  const Eigen::VectorXd rhs = o.M1 * u.Y + tau * (o.M1_wp * u.E);
  Eigen::VectorXd y = u.Y;
  const SolveStats st = solve(o.M1, o.M1_solver.as_operator(), true, rhs, y);
  check(st, "E");
  u.Y = y;
  StepRecord rec;
  rec.solves.push_back({"E", 1, st});
  rec.rhs_products = 3;
  return rec;
}

StepRecord Integrator::flow_BY_H(StateU& u, double tau, double t_start) {
  const SystemOperators& o = *ops_;
  const int nE = o.dim_E();
  const SpMat& A = system_matrix(Kind::BY, tau);
  Eigen::VectorXd rhs(2 * nE), x(2 * nE);
  rhs << o.M1 * u.E - (0.5 * tau) * (o.A1 * u.E) + tau * (CtM2_ * u.B) - (0.5 * tau) * (o.M1_wp * u.Y) +
             source(t_start, t_start + tau),
      o.M1 * u.Y - (0.5 * tau) * (RN_ * u.Y);
  x << u.E, u.Y;
  const LinearOperator P = block_diag_precond({o.M1_solver.as_operator(), o.M1_solver.as_operator()}, 2 * nE);
  const SolveStats st = solve(A, P, false, rhs, x);
  check(st, "BY");
  StepRecord rec;
  rec.solves.push_back({"BY", 2, st});
  u.E = x.head(nE);
  u.Y = x.tail(nE);
  rec.rhs_products = 6;
  return rec;
}

StepRecord Integrator::strang_hamiltonian_step(StateU& u, double dt) {
  const double t0 = u.t;
  StepRecord rec = flow_E_H(u, 0.5 * dt);
  rec.append(flow_BY_H(u, dt, t0));
  rec.append(flow_E_H(u, 0.5 * dt));
  u.t = t0 + dt;
  return rec;
}

StepRecord Integrator::crank_nicolson_step(StateU& u, double dt, double t_start) {
  const SystemOperators& o = *ops_;
  const int nE = o.dim_E(), nB = o.dim_B();
  const SpMat& A = system_matrix(Kind::CN, dt);
  const double h = 0.5 * dt;
  Eigen::VectorXd rhs(2 * nE + nB), x(2 * nE + nB);
  rhs << o.M1 * u.E - h * (o.A1 * u.E) + h * (CtM2_ * u.B) - h * (o.M1_wp * u.Y) + source(t_start, t_start + dt),
      u.B - h * (o.complex->curl_f * u.E), o.M1 * u.Y + h * (o.M1_wp * u.E) - h * (RN_ * u.Y);
  x << u.E, u.B, u.Y;
  const LinearOperator P =
      block_diag_precond({o.M1_solver.as_operator(), LinearOperator::identity(nB), o.M1_solver.as_operator()},
                         2 * nE + nB);
  const SolveStats st = solve(A, P, false, rhs, x);
  check(st, "cn");
  u.E = x.head(nE);
  u.B = x.segment(nE, nB);
  u.Y = x.tail(nE);
  u.t = t_start + dt;
  StepRecord rec;
  rec.solves.push_back({"cn", 3, st});
  rec.rhs_products = 8;
  return rec;
}

StepRecord Integrator::step(StateU& u) {
  switch (cfg_.scheme) {
    case Scheme::Poisson: return strang_poisson_step(u, cfg_.dt);
    case Scheme::Hamiltonian: return strang_hamiltonian_step(u, cfg_.dt);
    case Scheme::CrankNicolson: return crank_nicolson_step(u, cfg_.dt, u.t);
  }
  throw std::logic_error("unknown scheme");
}

EvolutionOperator build_evolution_operator(const SystemOperators& ops, Scheme scheme, double dt, int max_dim,
                                           double tol) {
  const int n = ops.dim_total();
  if (n > max_dim) {
    std::ostringstream msg;
    msg << "build_evolution_operator: dimension " << n << " exceeds the cap " << max_dim;
    throw std::invalid_argument(msg.str());
  }
  SchemeConfig cfg;
  cfg.scheme = scheme;
  cfg.dt = dt;
  cfg.use_source = false;
  cfg.solver = SolverOptions{tol, 10 * n + 100};
  cfg.direct = true;
  Integrator integ(ops, cfg);

  EvolutionOperator out;
  out.K.resize(n, n);
  StateU u = StateU::zeros(ops);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    u.unstack(e);
    u.t = 0.0;
    integ.step(u);
    out.K.col(j) = u.stacked();
  }
  const int nE = ops.dim_E(), nB = ops.dim_B();
  out.M = Eigen::MatrixXd::Zero(n, n);
  out.M.block(0, 0, nE, nE) = Eigen::MatrixXd(ops.M1);
  out.M.block(nE, nE, nB, nB) = Eigen::MatrixXd(ops.M2);
  out.M.block(nE + nB, nE + nB, nE, nE) = Eigen::MatrixXd(ops.M1);
  return out;
}

namespace {

Eigen::VectorXd m_singular_values_squared(const EvolutionOperator& op) {
  // ||Kx||_M^2 / ||x||_M^2 with M = L L^T: eigenvalues of L^{-1} K^T M K L^{-T}
  const Eigen::LLT<Eigen::MatrixXd> llt(op.M);
  if (llt.info() != Eigen::Success) throw std::runtime_error("operator_m_norm: M is not positive definite");
  const Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd KLt = op.K * L.transpose().triangularView<Eigen::Upper>().solve(
                                   Eigen::MatrixXd::Identity(op.M.rows(), op.M.cols()));
  // G = L^T K L^{-T}; its singular values are the M-norm gains
  const Eigen::MatrixXd G = L.transpose() * KLt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G.transpose() * G, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

}  // namespace

double operator_m_norm(const EvolutionOperator& op) {
  return std::sqrt(std::max(0.0, m_singular_values_squared(op).maxCoeff()));
}

double operator_m_norm_min(const EvolutionOperator& op) {
  return std::sqrt(std::max(0.0, m_singular_values_squared(op).minCoeff()));
}

}  // namespace coldplasma
