#include "coldplasma/freq_domain.hpp"

#include <Eigen/SparseLU>

namespace coldplasma {

namespace {

const Complex I(0.0, 1.0);

CSpMat to_complex(const SpMat& m) { return m.cast<Complex>(); }

}  // namespace

FrequencySystem assemble_frequency_system(const SystemOperators& ops, const CSpMat& dielectric_mass) {
  if (dielectric_mass.rows() != ops.dim_E() || dielectric_mass.cols() != ops.dim_E())
    throw std::invalid_argument("assemble_frequency_system: dielectric mass has the wrong size");
  const SpMat& C = ops.complex->curl_f;
  const SpMat curlcurl = SpMat(C.transpose()) * ops.M2 * C;
  FrequencySystem sys;
  sys.ops = &ops;
  sys.A = to_complex(curlcurl) - dielectric_mass - I * to_complex(ops.A1);
  sys.rhs = -I * (ops.S_R.cast<Complex>() + I * ops.S_I.cast<Complex>());
  return sys;
}

FrequencySolution solve_frequency(const FrequencySystem& sys, const FrequencyOptions& opts) {
  const SystemOperators& ops = *sys.ops;
  const int n = static_cast<int>(sys.rhs.size());
  FrequencySolution sol;
  sol.E_hat = CVector::Zero(n);

  const double bnorm = sys.rhs.norm();
  if (bnorm > 0.0) {
    bool done = false;
    if (opts.method != FrequencyMethod::Direct) {
      // [Re A, -Im A; Im A, Re A] [x_r; x_i] = [b_r; b_i]
      const SpMat Ar = sys.A.real(), Ai = sys.A.imag();
      const SpMat negAi = -Ai;
      const SpMat big = block_matrix({{{&Ar, 1.0}, {&negAi, 1.0}}, {{&Ai, 1.0}, {&Ar, 1.0}}}, {n, n}, {n, n});
      Eigen::VectorXd b(2 * n), x = Eigen::VectorXd::Zero(2 * n);
      b << sys.rhs.real(), sys.rhs.imag();
      const LinearOperator P =
          block_diag_precond({ops.M1_solver.as_operator(), ops.M1_solver.as_operator()}, 2 * n);
      // Auto gives up early: the indefinite Helmholtz form rarely converges with a mass preconditioner
      const int cap = opts.method == FrequencyMethod::Auto ? std::min(opts.max_iter, 200) : opts.max_iter;
      sol.stats = pbicgstab(LinearOperator::from_matrix(big), P, b, x, SolverOptions{opts.tol, cap});
      sol.E_hat.real() = x.head(n);
      sol.E_hat.imag() = x.tail(n);
      done = sol.stats.converged && (sys.A * sol.E_hat - sys.rhs).norm() <= std::sqrt(opts.tol) * bnorm;
      if (!done && opts.method == FrequencyMethod::Iterative) {
        SolveStats st = sol.stats;
        st.final_residual = (sys.A * sol.E_hat - sys.rhs).norm() / bnorm;
        throw SolveFailure("frequency solve did not converge", st);
      }
    }
    if (!done) {
      Eigen::SparseMatrix<Complex> A = sys.A;
      Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu;
      lu.compute(A);
      if (lu.info() != Eigen::Success) throw std::runtime_error("frequency system factorization failed");
      sol.E_hat = lu.solve(sys.rhs);
      sol.direct = true;
    }
    sol.residual = (sys.A * sol.E_hat - sys.rhs).norm() / bnorm;
  }

  sol.B_hat = -I * (ops.complex->curl_f.cast<Complex>() * sol.E_hat);
  // (-i M1 + R + M_nu) Y_hat = M_wp E_hat
  const CSpMat Ky = -I * to_complex(ops.M1) + to_complex(ops.R1) + to_complex(ops.M1_nu);
  const CVector rhs_y = to_complex(ops.M1_wp) * sol.E_hat;
  if (rhs_y.norm() == 0.0) {
    sol.Y_hat = CVector::Zero(n);
  } else {
    Eigen::SparseMatrix<Complex> K = Ky;
    Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu(K);
    if (lu.info() != Eigen::Success) throw std::runtime_error("current density factorization failed");
    sol.Y_hat = lu.solve(rhs_y);
  }
  return sol;
}

Eigen::VectorXd harmonic_field(const CVector& hat, double t) {
  return std::cos(t) * hat.real() + std::sin(t) * hat.imag();
}

double HarmonicResidual::operator()(const Eigen::VectorXd& E, double t) {
  const Eigen::VectorXd th = harmonic_field(E_hat_, t);
  diff_ = E - th;
  const auto norm = [&](const Eigen::VectorXd& v) { return std::sqrt(std::max(0.0, v.dot(ops_->M1 * v))); };
  scale_ = std::max({scale_, norm(th), norm(E)});
  return scale_ > 0.0 ? norm(diff_) / scale_ : 0.0;
}

}  // namespace coldplasma
