#pragma once

#include "coldplasma/assembly.hpp"

namespace coldplasma {

/// (C^T M2 C - M_eps - i A1) E_hat = -i S_hat with S_hat = S_R + i S_I.
struct FrequencySystem {
  const SystemOperators* ops = nullptr;
  CSpMat A;
  CVector rhs;
};

FrequencySystem assemble_frequency_system(const SystemOperators& ops, const CSpMat& dielectric_mass);

enum class FrequencyMethod { Auto, Iterative, Direct };

struct FrequencyOptions {
  double tol = 1e-10;
  int max_iter = 3000;
  FrequencyMethod method = FrequencyMethod::Auto;
};

struct FrequencySolution {
  CVector E_hat, B_hat, Y_hat;
  /// ||A E_hat - rhs|| / ||rhs|| (0 for a zero right-hand side)
  double residual = 0.0;
  SolveStats stats;
  bool direct = false;
};

/// BiCGStab on the real 2n form with a block mass preconditioner; Auto falls back to a sparse
/// LU factorization when the iteration does not converge.
FrequencySolution solve_frequency(const FrequencySystem& sys, const FrequencyOptions& opts = {});

/// Time-harmonic reconstruction Re{E_hat e^{-it}}.
Eigen::VectorXd harmonic_field(const CVector& hat, double t);

/// Tracks ||E_h - Re{E_hat e^{-it}}|| normalized by the running maximum of both norms (M1 norm).
class HarmonicResidual {
 public:
  HarmonicResidual(const SystemOperators& ops, CVector E_hat) : ops_(&ops), E_hat_(std::move(E_hat)) {}

  /// Relative residual at time t; also updates the running normalization.
  double operator()(const Eigen::VectorXd& E, double t);
  /// Difference field of the last call.
  const Eigen::VectorXd& field() const { return diff_; }
  double normalization() const { return scale_; }

 private:
  const SystemOperators* ops_;
  CVector E_hat_;
  Eigen::VectorXd diff_;
  double scale_ = 0.0;
};

}  // namespace coldplasma
