#pragma once

#include "coldplasma/assembly.hpp"

#include <Eigen/SparseLU>

#include <map>
#include <memory>
#include <string>

namespace coldplasma {

enum class Scheme { Poisson, Hamiltonian, CrankNicolson };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);

/// Coefficients of (E, B, Y) at time t.
struct StateU {
  Eigen::VectorXd E, B, Y;
  double t = 0.0;

  static StateU zeros(const SystemOperators& ops);
  Eigen::VectorXd stacked() const;
  void unstack(const Eigen::VectorXd& v);
  bool finite() const { return E.allFinite() && B.allFinite() && Y.allFinite(); }
  double max_abs() const;
};

struct SchemeConfig {
  Scheme scheme = Scheme::Poisson;
  double dt = 0.1;
  SolverOptions solver{};
  /// False drops the boundary and volume forcing (homogeneous scheme).
  bool use_source = true;
  /// Sparse LU instead of the Krylov solvers; such solves record no products.
  bool direct = false;
};

/// One linear solve inside a step; `blocks` is the number of field blocks of the system.
struct SolveRecord {
  std::string flow;
  int blocks = 1;
  SolveStats stats;
  int block_products() const { return blocks * stats.total_products(); }
};

struct StepRecord {
  std::vector<SolveRecord> solves;
  /// Block products spent on right-hand sides and explicit updates.
  int rhs_products = 0;

  int solver_block_products() const;
  /// Mean iteration count of the solves of one flow (0 if none).
  double mean_iterations(const std::string& flow) const;
  void append(const StepRecord& other);
};

/// Which terms each sub-flow of a scheme carries.
struct SubflowTerms {
  std::string flow;
  bool curl_transpose = false;
  bool boundary_penalty = false;
  bool source = false;
};
std::vector<SubflowTerms> scheme_layout(Scheme s);

/// Time integrator over assembled operators. System matrices are built once per step size.
class Integrator {
 public:
  Integrator(const SystemOperators& ops, SchemeConfig cfg);

  const SchemeConfig& config() const { return cfg_; }
  const SystemOperators& operators() const { return *ops_; }

  /// One full step of the configured scheme from u.t to u.t + dt.
  StepRecord step(StateU& u);

  StepRecord flow_maxwell_P(StateU& u, double tau, double t_start);
  StepRecord flow_plasma_P(StateU& u, double tau);
  StepRecord strang_poisson_step(StateU& u, double dt);

  StepRecord flow_E_H(StateU& u, double tau);
  StepRecord flow_BY_H(StateU& u, double tau, double t_start);
  StepRecord strang_hamiltonian_step(StateU& u, double dt);

  StepRecord crank_nicolson_step(StateU& u, double dt, double t_start);

 private:
  enum class Kind { Maxwell, Plasma, BY, CN };
  const SpMat& system_matrix(Kind kind, double tau);
  Eigen::VectorXd source(double t0, double t1) const;
  void check(const SolveStats& st, const char* flow) const;
  SolveStats solve(const SpMat& A, const LinearOperator& P, bool spd, const Eigen::VectorXd& rhs,
                   Eigen::VectorXd& x);

  const SystemOperators* ops_;
  SchemeConfig cfg_;
  SpMat CtM2_, CtM2C_, RN_;
  SpMat eye_B_;
  std::map<std::pair<int, double>, SpMat> cache_;
  std::map<const SpMat*, std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>>> lu_;
};

/// MVBP constants for right-hand sides and explicit updates: 9 (CN), 9 (Poisson), 10 (Hamiltonian).
int mvbp_rhs_constant(Scheme s);

/// Dense one-step map of the homogeneous scheme, built with direct solves and the block mass diag(M1, M2, M1).
struct EvolutionOperator {
  Eigen::MatrixXd K;
  Eigen::MatrixXd M;
};

EvolutionOperator build_evolution_operator(const SystemOperators& ops, Scheme scheme, double dt, int max_dim = 1500,
                                           double tol = 1e-14);

/// max_x ||K x||_M / ||x||_M
double operator_m_norm(const EvolutionOperator& op);
/// min_x ||K x||_M / ||x||_M
double operator_m_norm_min(const EvolutionOperator& op);

}  // namespace coldplasma
