#include "coldplasma/linsolve.hpp"

#include <cmath>
#include <limits>

namespace coldplasma {

LinearOperator LinearOperator::from_matrix(const SpMat& m) {
  const SpMat* ptr = &m;
  return {static_cast<int>(m.rows()), [ptr](const Vector& in, Vector& out) { out.noalias() = *ptr * in; }};
}

LinearOperator LinearOperator::identity(int n) {
  return {n, [](const Vector& in, Vector& out) { out = in; }};
}

SolveStats pcg(const LinearOperator& A, const LinearOperator& P, const Vector& b, Vector& x,
               const SolverOptions& opts) {
  const int n = static_cast<int>(b.size());
  if (A.size != n || P.size != n) throw std::invalid_argument("pcg: operator size mismatch");
  if (x.size() != n) x = Vector::Zero(n);

  SolveStats st;
  const double bnorm = b.norm();
  if (bnorm == 0.0) x.setZero();

  Vector q(n), r(n), z(n);
  A.apply(x, q);
  ++st.matvec_A;
  r = b - q;
  P.apply(r, z);
  ++st.matvec_P;

  double rnorm = r.norm();
  const double target = opts.tol * bnorm;
  if (rnorm <= target) {
    st.converged = true;
    st.status = SolveStatus::Converged;
    st.final_residual = bnorm > 0.0 ? rnorm / bnorm : 0.0;
    return st;
  }

  Vector p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= opts.max_iter; ++it) {
    A.apply(p, q);
    ++st.matvec_A;
    const double pq = p.dot(q);
    if (!(pq > 0.0)) {
      st.iterations = it;
      st.status = SolveStatus::Breakdown;
      st.final_residual = rnorm / bnorm;
      return st;
    }
    const double alpha = rz / pq;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * q;
    P.apply(r, z);
    ++st.matvec_P;
    st.iterations = it;
    rnorm = r.norm();
    if (rnorm <= target) {
      st.converged = true;
      st.status = SolveStatus::Converged;
      break;
    }
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  st.final_residual = rnorm / bnorm;
  return st;
}

SolveStats pbicgstab(const LinearOperator& A, const LinearOperator& P, const Vector& b, Vector& x,
                     const SolverOptions& opts) {
  const int n = static_cast<int>(b.size());
  if (A.size != n || P.size != n) throw std::invalid_argument("pbicgstab: operator size mismatch");
  if (x.size() != n) x = Vector::Zero(n);

  SolveStats st;
  if (b.norm() == 0.0) x.setZero();

  Vector tmp(n), r(n);
  A.apply(x, tmp);
  ++st.matvec_A;
  tmp = b - tmp;
  P.apply(tmp, r);
  ++st.matvec_P;

  // ||P(b - Ax)|| relative to ||x||: an error estimate when P approximates A^{-1}
  const auto relative = [&](double rn) {
    const double xn = x.norm();
    return xn > 0.0 ? rn / xn : (rn == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
  };
  double rnorm = r.norm();
  if (rnorm == 0.0 || relative(rnorm) <= opts.tol) {
    st.converged = true;
    st.status = SolveStatus::Converged;
    st.final_residual = relative(rnorm);
    return st;
  }

  // restarted with the current residual as shadow vector on breakdown
  Vector r_hat = r;
  double r_hat_norm = r_hat.norm();
  Vector p = Vector::Zero(n), v = Vector::Zero(n), s(n), t(n);
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  const double tiny = std::numeric_limits<double>::min();
  bool fresh = true;
  int restarts = 0;
  constexpr int max_restarts = 20;

  for (int it = 1; it <= opts.max_iter; ++it) {
    double rho_new = r_hat.dot(r);
    if (std::abs(rho_new) <= 1e-30 * r_hat_norm * r.norm() || std::abs(rho_new) < tiny || omega == 0.0) {
      if (restarts == max_restarts || rnorm == 0.0) {
        st.iterations = it - 1;
        st.status = SolveStatus::Breakdown;
        st.final_residual = relative(rnorm);
        return st;
      }
      ++restarts;
      r_hat = r;
      r_hat_norm = rnorm;
      rho_new = r.squaredNorm();
      fresh = true;
    }
    if (fresh) {
      p = r;
      fresh = false;
    } else {
      const double beta = (rho_new / rho) * (alpha / omega);
      p = r + beta * (p - omega * v);
    }
    rho = rho_new;

    A.apply(p, tmp);
    ++st.matvec_A;
    P.apply(tmp, v);
    ++st.matvec_P;
    const double rv = r_hat.dot(v);
    if (std::abs(rv) < tiny) {
      st.iterations = it;
      st.status = SolveStatus::Breakdown;
      st.final_residual = relative(rnorm);
      return st;
    }
    alpha = rho / rv;
    s = r - alpha * v;

    A.apply(s, tmp);
    ++st.matvec_A;
    P.apply(tmp, t);
    ++st.matvec_P;
    const double tt = t.squaredNorm();
    omega = tt > 0.0 ? t.dot(s) / tt : 0.0;

    x.noalias() += alpha * p + omega * s;
    r = s - omega * t;
    st.iterations = it;
    rnorm = r.norm();
    if (relative(rnorm) <= opts.tol) {
      st.converged = true;
      st.status = SolveStatus::Converged;
      break;
    }
    if (omega == 0.0) {
      st.status = SolveStatus::Breakdown;
      break;
    }
  }
  st.final_residual = relative(rnorm);
  return st;
}

KroneckerMassSolver::KroneckerMassSolver(const TensorSpace& space) : size_(space.dimension()) {
  for (int c = 0; c < space.n_components(); ++c) {
    Component comp;
    comp.shape = space.component(c).shape();
    comp.offset = space.offset(c);
    for (int d = 0; d < 3; ++d) {
      comp.mass[d] = mass_matrix_1d(space.component(c).bases[d]);
      comp.chol[d].compute(comp.mass[d]);
      if (comp.chol[d].info() != Eigen::Success)
        throw std::runtime_error("KroneckerMassSolver: singular 1D mass factor");
    }
    components_.push_back(std::move(comp));
  }
}

template <typename Op>
void KroneckerMassSolver::apply_tensor(const Vector& in, Vector& out, Op&& op) const {
  if (in.size() != size_) throw std::invalid_argument("KroneckerMassSolver: size mismatch");
  out = in;
  for (const Component& comp : components_) {
    const int nx = comp.shape[0], ny = comp.shape[1], nz = comp.shape[2];
    double* base = out.data() + comp.offset;
    {
      Eigen::Map<Eigen::MatrixXd> z(base, nz, nx * ny);
      op(comp, 2, z);
    }
    for (int i = 0; i < nx; ++i) {
      Eigen::Map<Eigen::MatrixXd> slab(base + static_cast<std::ptrdiff_t>(i) * ny * nz, nz, ny);
      Eigen::MatrixXd tr = slab.transpose();
      op(comp, 1, tr);
      slab = tr.transpose();
    }
    {
      Eigen::Map<Eigen::MatrixXd> xm(base, ny * nz, nx);
      Eigen::MatrixXd tr = xm.transpose();
      op(comp, 0, tr);
      xm = tr.transpose();
    }
  }
}

void KroneckerMassSolver::solve(const Vector& in, Vector& out) const {
  apply_tensor(in, out, [](const Component& c, int d, auto& m) { m = c.chol[d].solve(m); });
}

void KroneckerMassSolver::multiply(const Vector& in, Vector& out) const {
  apply_tensor(in, out, [](const Component& c, int d, auto& m) { m = c.mass[d] * m; });
}

LinearOperator KroneckerMassSolver::as_operator() const {
  return {size_, [this](const Vector& in, Vector& out) { solve(in, out); }};
}

LinearOperator block_diag_precond(const std::vector<LinearOperator>& blocks, int expected_size) {
  int total = 0;
  std::vector<int> offsets;
  for (const auto& b : blocks) {
    offsets.push_back(total);
    total += b.size;
  }
  if (expected_size >= 0 && total != expected_size)
    throw std::invalid_argument("block_diag_precond: block sizes do not match the system");
  return {total, [blocks, offsets](const Vector& in, Vector& out) {
            if (out.size() != in.size()) out.resize(in.size());
            Vector seg_out;
            for (std::size_t k = 0; k < blocks.size(); ++k) {
              const Vector seg = in.segment(offsets[k], blocks[k].size);
              blocks[k].apply(seg, seg_out);
              out.segment(offsets[k], blocks[k].size) = seg_out;
            }
          }};
}

SpMat kronecker_mass(const TensorSpace& space) {
  std::vector<SpMat> comps;
  for (int c = 0; c < space.n_components(); ++c) {
    SpMat acc;
    for (int d = 0; d < 3; ++d) {
      const SpMat m = mass_matrix_1d(space.component(c).bases[d]).sparseView(0.0, 0.0);
      acc = d == 0 ? m : SpMat(kron(acc, m));
    }
    comps.push_back(std::move(acc));
  }
  std::vector<std::vector<BlockEntry>> grid(comps.size(), std::vector<BlockEntry>(comps.size()));
  std::vector<int> sizes;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    grid[c][c].mat = &comps[c];
    sizes.push_back(static_cast<int>(comps[c].rows()));
  }
  return block_matrix(grid, sizes, sizes);
}

SpMat block_matrix(const std::vector<std::vector<BlockEntry>>& blocks, const std::vector<int>& row_sizes,
                   const std::vector<int>& col_sizes) {
  std::vector<int> roff{0}, coff{0};
  for (int s : row_sizes) roff.push_back(roff.back() + s);
  for (int s : col_sizes) coff.push_back(coff.back() + s);
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (std::size_t j = 0; j < blocks[i].size(); ++j) {
      const BlockEntry& e = blocks[i][j];
      if (e.mat == nullptr || e.scale == 0.0) continue;
      if (e.mat->rows() != row_sizes[i] || e.mat->cols() != col_sizes[j])
        throw std::invalid_argument("block_matrix: block shape mismatch");
      for (int r = 0; r < e.mat->outerSize(); ++r)
        for (SpMat::InnerIterator it(*e.mat, r); it; ++it)
          trip.emplace_back(roff[i] + static_cast<int>(it.row()), coff[j] + static_cast<int>(it.col()),
                            e.scale * it.value());
    }
  }
  SpMat out(roff.back(), coff.back());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace coldplasma
