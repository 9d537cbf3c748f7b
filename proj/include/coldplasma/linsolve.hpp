#pragma once

#include "coldplasma/derham.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace coldplasma {

using Vector = Eigen::VectorXd;

/// A square linear map known only by its action.
struct LinearOperator {
  int size = 0;
  std::function<void(const Vector&, Vector&)> apply;

  LinearOperator() = default;
  LinearOperator(int n, std::function<void(const Vector&, Vector&)> f) : size(n), apply(std::move(f)) {}

  static LinearOperator from_matrix(const SpMat& m);
  static LinearOperator identity(int n);
};

enum class SolveStatus { Converged, MaxIterations, Breakdown };

struct SolveStats {
  int iterations = 0;
  int matvec_A = 0;
  int matvec_P = 0;
  bool converged = false;
  double final_residual = 0.0;
  SolveStatus status = SolveStatus::MaxIterations;

  int total_products() const { return matvec_A + matvec_P; }
};

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 1000;
};

class SolveFailure : public std::runtime_error {
 public:
  SolveFailure(const std::string& what, SolveStats stats)
      : std::runtime_error(what), stats_(stats) {}
  const SolveStats& stats() const { return stats_; }

 private:
  SolveStats stats_;
};

/// Preconditioned conjugate gradients. `x` is the initial guess on entry.
/// Stops on ||b - A x||_2 <= tol ||b||_2; products with A and P are each 1 + n.
SolveStats pcg(const LinearOperator& A, const LinearOperator& P, const Vector& b, Vector& x,
               const SolverOptions& opts = {});

/// Left-preconditioned BiCGStab on P A x = P b with shadow vector r0.
/// Stops on the relative preconditioned residual; products with A and P are each 1 + 2n.
SolveStats pbicgstab(const LinearOperator& A, const LinearOperator& P, const Vector& b, Vector& x,
                     const SolverOptions& opts = {});

/// Applies the inverse of a separable (unweighted) mass matrix by 1D Cholesky solves
/// along each direction, component by component.
class KroneckerMassSolver {
 public:
  KroneckerMassSolver() = default;
  explicit KroneckerMassSolver(const TensorSpace& space);

  int size() const { return size_; }
  void solve(const Vector& in, Vector& out) const;
  /// The separable mass matrix itself, applied the same way.
  void multiply(const Vector& in, Vector& out) const;
  LinearOperator as_operator() const;

 private:
  struct Component {
    Index3 shape{};
    int offset = 0;
    std::array<Eigen::MatrixXd, 3> mass;
    std::array<Eigen::LLT<Eigen::MatrixXd>, 3> chol;
  };
  template <typename Op>
  void apply_tensor(const Vector& in, Vector& out, Op&& op) const;

  int size_ = 0;
  std::vector<Component> components_;
};

/// Block diagonal preconditioner; each block acts on a contiguous slice.
LinearOperator block_diag_precond(const std::vector<LinearOperator>& blocks, int expected_size = -1);

/// The separable mass matrix of a space as a sparse matrix (Kronecker of 1D masses).
SpMat kronecker_mass(const TensorSpace& space);

struct BlockEntry {
  const SpMat* mat = nullptr;
  double scale = 1.0;
};

/// Sparse matrix from a grid of scaled blocks; null blocks are zero.
SpMat block_matrix(const std::vector<std::vector<BlockEntry>>& blocks,
                   const std::vector<int>& row_sizes, const std::vector<int>& col_sizes);

}  // namespace coldplasma
