#include "coldplasma/derham.hpp"
#include "coldplasma/linsolve.hpp"

#include <algorithm>
#include <sstream>

namespace coldplasma {

namespace {

using IntTriplet = Eigen::Triplet<int>;

template <typename Scalar>
using RowSp = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

template <typename Scalar>
RowSp<Scalar> kron_impl(const RowSp<Scalar>& a, const RowSp<Scalar>& b) {
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(static_cast<std::size_t>(a.nonZeros() * b.nonZeros()));
  for (int ra = 0; ra < a.outerSize(); ++ra)
    for (typename RowSp<Scalar>::InnerIterator ia(a, ra); ia; ++ia)
      for (int rb = 0; rb < b.outerSize(); ++rb)
        for (typename RowSp<Scalar>::InnerIterator ib(b, rb); ib; ++ib)
          trip.emplace_back(static_cast<int>(ia.row() * b.rows() + ib.row()),
                            static_cast<int>(ia.col() * b.cols() + ib.col()), ia.value() * ib.value());
  RowSp<Scalar> out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

IntSpMat eye(int n) {
  IntSpMat m(n, n);
  m.setIdentity();
  return m;
}

IntSpMat kron3(const IntSpMat& a, const IntSpMat& b, const IntSpMat& c) { return kron(kron(a, b), c); }

struct IntBlock {
  int row = 0;
  int col = 0;
  int sign = 1;
  IntSpMat mat;
};

IntSpMat stack_blocks(const std::vector<IntBlock>& blocks, const std::vector<int>& row_off,
                      const std::vector<int>& col_off, int rows, int cols) {
  std::vector<IntTriplet> trip;
  for (const IntBlock& b : blocks)
    for (int r = 0; r < b.mat.outerSize(); ++r)
      for (IntSpMat::InnerIterator it(b.mat, r); it; ++it)
        trip.emplace_back(row_off[b.row] + static_cast<int>(it.row()), col_off[b.col] + static_cast<int>(it.col()),
                          b.sign * it.value());
  IntSpMat out(rows, cols);
  out.setFromTriplets(trip.begin(), trip.end());
  out.prune(0);
  return out;
}

std::vector<int> offsets_of(const TensorSpace& s) {
  std::vector<int> off;
  for (int c = 0; c < s.n_components(); ++c) off.push_back(s.offset(c));
  return off;
}

ComponentSpace make_component(const DeRhamComplex& cx, BasisKind kx, BasisKind ky, BasisKind kz) {
  const auto pick = [&](int d, BasisKind k) { return k == BasisKind::N ? cx.n_bases[d] : cx.d_bases[d]; };
  return ComponentSpace{{pick(0, kx), pick(1, ky), pick(2, kz)}};
}

/// 1D point set and weights defining one degree of freedom.
struct Functional {
  std::vector<double> points;
  std::vector<double> weights;
};

void add_gauss_piece(Functional& f, double a, double b, const std::vector<double>& breaks, int n_points) {
  if (b - a <= 0.0) return;
  std::vector<double> cuts{a};
  for (double x : breaks)
    if (x > a && x < b) cuts.push_back(x);
  cuts.push_back(b);
  const QuadratureRule rule = gauss_rule(n_points, cuts);
  for (int k = 0; k < rule.n_cells(); ++k)
    for (int q = 0; q < rule.n_points; ++q) {
      f.points.push_back(rule.points(k, q));
      f.weights.push_back(rule.weights(k, q));
    }
}

/// Interpolation functionals at Greville points for N, histopolation between consecutive
/// Greville points for D.
std::vector<Functional> functionals(const BSplineBasis1D& basis, const BSplineBasis1D& n_basis, int n_points) {
  std::vector<double> g = greville_points(n_basis);
  std::vector<Functional> out;
  if (basis.kind() == BasisKind::N) {
    for (double x : g) out.push_back({{x}, {1.0}});
    return out;
  }
  std::sort(g.begin(), g.end());
  const std::vector<double> breaks = n_basis.knot_vector().breakpoints();
  const Interval dom = n_basis.domain();
  const int n = static_cast<int>(g.size());
  for (int i = 0; i + 1 < n; ++i) {
    Functional f;
    add_gauss_piece(f, g[i], g[i + 1], breaks, n_points);
    out.push_back(std::move(f));
  }
  if (n_basis.periodic()) {
    Functional f;
    add_gauss_piece(f, g[n - 1], dom.hi, breaks, n_points);
    add_gauss_piece(f, dom.lo, g[0], breaks, n_points);
    out.push_back(std::move(f));
  }
  return out;
}

Eigen::MatrixXd functional_matrix(const BSplineBasis1D& basis, const std::vector<Functional>& fs) {
  const int n = basis.dimension();
  if (static_cast<int>(fs.size()) != n) throw std::runtime_error("commuting projector: dof count mismatch");
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (std::size_t q = 0; q < fs[i].points.size(); ++q) {
      const BasisValues bv = basis.eval(fs[i].points[q], 0);
      for (int j = 0; j < basis.n_local(); ++j)
        a(i, basis.global_index(bv.first_index + j)) += fs[i].weights[q] * bv.values(0, j);
    }
  return a;
}

/// Apply a dense 1D operator along each axis of a row-major (nx, ny, nz) block.
template <typename Op>
void along_axes(double* base, const Index3& shape, Op&& op) {
  const int nx = shape[0], ny = shape[1], nz = shape[2];
  {
    Eigen::Map<Eigen::MatrixXd> z(base, nz, nx * ny);
    Eigen::MatrixXd tmp = z;
    op(2, tmp);
    z = tmp;
  }
  for (int i = 0; i < nx; ++i) {
    Eigen::Map<Eigen::MatrixXd> slab(base + static_cast<std::ptrdiff_t>(i) * ny * nz, nz, ny);
    Eigen::MatrixXd tr = slab.transpose();
    op(1, tr);
    slab = tr.transpose();
  }
  Eigen::Map<Eigen::MatrixXd> xm(base, ny * nz, nx);
  Eigen::MatrixXd tr = xm.transpose();
  op(0, tr);
  xm = tr.transpose();
}

}  // namespace

TensorSpace::TensorSpace(int form_degree, std::vector<ComponentSpace> components)
    : form_degree_(form_degree), components_(std::move(components)) {
  for (const auto& c : components_) offsets_.push_back(offsets_.back() + c.size());
}

Box TensorSpace::domain() const {
  const ComponentSpace& c = components_.front();
  return Box{{c.bases[0].domain(), c.bases[1].domain(), c.bases[2].domain()}};
}

IntSpMat kron(const IntSpMat& a, const IntSpMat& b) { return kron_impl<int>(a, b); }
SpMat kron(const SpMat& a, const SpMat& b) { return kron_impl<double>(a, b); }

IntSpMat incidence_1d(const BSplineBasis1D& n_basis) {
  if (n_basis.kind() != BasisKind::N) throw std::invalid_argument("incidence_1d: N-basis required");
  const int n = n_basis.dimension();
  const int rows = n_basis.periodic() ? n : n - 1;
  std::vector<IntTriplet> trip;
  for (int j = 0; j < rows; ++j) {
    trip.emplace_back(j, j, -1);
    trip.emplace_back(j, n_basis.global_index(j + 1), 1);
  }
  IntSpMat g(rows, n);
  g.setFromTriplets(trip.begin(), trip.end());
  g.prune(0);
  return g;
}

DeRhamComplex build_complex(Index3 n_cells, Index3 degrees, std::array<bool, 3> periodic, Box domain) {
  DeRhamComplex cx;
  cx.n_cells = n_cells;
  cx.degrees = degrees;
  cx.periodic = periodic;
  cx.domain = domain;
  for (int d = 0; d < 3; ++d) {
    if (degrees[d] < 1) {
      std::ostringstream msg;
      msg << "build_complex: degree must be >= 1 in direction " << d;
      throw std::invalid_argument(msg.str());
    }
    cx.n_bases[d] = BSplineBasis1D(make_knot_vector(n_cells[d], degrees[d], domain[d], periodic[d]));
    cx.d_bases[d] = curry_schoenberg(cx.n_bases[d]);
  }
  using K = BasisKind;
  cx.spaces[0] = TensorSpace(0, {make_component(cx, K::N, K::N, K::N)});
  cx.spaces[1] = TensorSpace(1, {make_component(cx, K::D, K::N, K::N), make_component(cx, K::N, K::D, K::N),
                                 make_component(cx, K::N, K::N, K::D)});
  cx.spaces[2] = TensorSpace(2, {make_component(cx, K::N, K::D, K::D), make_component(cx, K::D, K::N, K::D),
                                 make_component(cx, K::D, K::D, K::N)});
  cx.spaces[3] = TensorSpace(3, {make_component(cx, K::D, K::D, K::D)});

  std::array<IntSpMat, 3> g, in, id;
  for (int d = 0; d < 3; ++d) {
    g[d] = incidence_1d(cx.n_bases[d]);
    in[d] = eye(cx.n_bases[d].dimension());
    id[d] = eye(cx.d_bases[d].dimension());
  }

  const TensorSpace &v0 = cx.spaces[0], &v1 = cx.spaces[1], &v2 = cx.spaces[2], &v3 = cx.spaces[3];
  cx.grad = stack_blocks({{0, 0, 1, kron3(g[0], in[1], in[2])},
                          {1, 0, 1, kron3(in[0], g[1], in[2])},
                          {2, 0, 1, kron3(in[0], in[1], g[2])}},
                         offsets_of(v1), offsets_of(v0), v1.dimension(), v0.dimension());
  cx.curl = stack_blocks({{0, 1, -1, kron3(in[0], id[1], g[2])},
                          {0, 2, 1, kron3(in[0], g[1], id[2])},
                          {1, 0, 1, kron3(id[0], in[1], g[2])},
                          {1, 2, -1, kron3(g[0], in[1], id[2])},
                          {2, 0, -1, kron3(id[0], g[1], in[2])},
                          {2, 1, 1, kron3(g[0], id[1], in[2])}},
                         offsets_of(v2), offsets_of(v1), v2.dimension(), v1.dimension());
  cx.div = stack_blocks({{0, 0, 1, kron3(g[0], id[1], id[2])},
                         {0, 1, 1, kron3(id[0], g[1], id[2])},
                         {0, 2, 1, kron3(id[0], id[1], g[2])}},
                        offsets_of(v3), offsets_of(v2), v3.dimension(), v2.dimension());
  cx.grad_f = cx.grad.cast<double>();
  cx.curl_f = cx.curl.cast<double>();
  cx.div_f = cx.div.cast<double>();
  return cx;
}

BasisTable tabulate(const BSplineBasis1D& basis, const QuadratureRule& rule, int nderiv) {
  BasisTable t;
  t.rule = rule;
  t.values.resize(static_cast<std::size_t>(rule.n_cells()));
  for (int k = 0; k < rule.n_cells(); ++k)
    for (int q = 0; q < rule.n_points; ++q) t.values[k].push_back(basis.eval_in_cell(k, rule.points(k, q), nderiv));
  return t;
}

std::vector<Vec3> eval_field(const FieldCoeffs& f, const std::vector<Vec3>& points) {
  if (f.space == nullptr) throw std::invalid_argument("eval_field: field has no space");
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const Vec3& x : points) out.push_back(evaluate<double>(*f.space, f.data, x));
  return out;
}

FieldCoeffs project_L2(const TensorSpace& space, const VectorFunction& fn, const ProjectionOptions& opts) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(space.dimension());
  const ComponentSpace& c0 = space.component(0);
  std::array<QuadratureRule, 3> rules;
  for (int d = 0; d < 3; ++d) rules[d] = gauss_rule(opts.quad_points, c0.bases[d].knot_vector().breakpoints());

  std::vector<std::array<BasisTable, 3>> tables;
  for (int c = 0; c < space.n_components(); ++c) {
    std::array<BasisTable, 3> t;
    for (int d = 0; d < 3; ++d) t[d] = tabulate(space.component(c).bases[d], rules[d]);
    tables.push_back(std::move(t));
  }

  const int nq = opts.quad_points;
  for (int kx = 0; kx < rules[0].n_cells(); ++kx)
    for (int ky = 0; ky < rules[1].n_cells(); ++ky)
      for (int kz = 0; kz < rules[2].n_cells(); ++kz)
        for (int qx = 0; qx < nq; ++qx)
          for (int qy = 0; qy < nq; ++qy)
            for (int qz = 0; qz < nq; ++qz) {
              const Vec3 x(rules[0].points(kx, qx), rules[1].points(ky, qy), rules[2].points(kz, qz));
              const double w = rules[0].weights(kx, qx) * rules[1].weights(ky, qy) * rules[2].weights(kz, qz);
              const Vec3 fx = fn(x);
              for (int c = 0; c < space.n_components(); ++c) {
                const ComponentSpace& comp = space.component(c);
                const BasisValues& bx = tables[c][0].values[kx][qx];
                const BasisValues& by = tables[c][1].values[ky][qy];
                const BasisValues& bz = tables[c][2].values[kz][qz];
                const double wf = w * fx[c];
                for (int a = 0; a < comp.bases[0].n_local(); ++a) {
                  const int ia = comp.bases[0].global_index(bx.first_index + a);
                  for (int b = 0; b < comp.bases[1].n_local(); ++b) {
                    const int ib = comp.bases[1].global_index(by.first_index + b);
                    const double wab = wf * bx.values(0, a) * by.values(0, b);
                    for (int e = 0; e < comp.bases[2].n_local(); ++e) {
                      const int ie = comp.bases[2].global_index(bz.first_index + e);
                      rhs[space.offset(c) + comp.flat(ia, ib, ie)] += wab * bz.values(0, e);
                    }
                  }
                }
              }
            }

  const SpMat mass = kronecker_mass(space);
  const KroneckerMassSolver precond(space);
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(space.dimension());
  const SolveStats st = pcg(LinearOperator::from_matrix(mass), precond.as_operator(), rhs, coeffs,
                            SolverOptions{opts.tol, opts.max_iter});
  if (!st.converged) {
    std::ostringstream msg;
    msg << "project_L2: CG did not converge, relative residual " << st.final_residual;
    throw SolveFailure(msg.str(), st);
  }
  return {space, std::move(coeffs)};
}

FieldCoeffs project_commuting(const TensorSpace& space, const VectorFunction& fn, const ProjectionOptions& opts) {
  Eigen::VectorXd coeffs(space.dimension());
  for (int c = 0; c < space.n_components(); ++c) {
    const ComponentSpace& comp = space.component(c);
    std::array<std::vector<Functional>, 3> fs;
    std::array<Eigen::PartialPivLU<Eigen::MatrixXd>, 3> lu;
    for (int d = 0; d < 3; ++d) {
      const BSplineBasis1D& b = comp.bases[d];
      const BSplineBasis1D n_basis(b.knot_vector());
      fs[d] = functionals(b, n_basis, opts.quad_points);
      const Eigen::MatrixXd a = functional_matrix(b, fs[d]);
      lu[d].compute(a);
      if (std::abs(lu[d].determinant()) < 1e-300 || !std::isfinite(lu[d].rcond()) || lu[d].rcond() < 1e-14)
        throw std::runtime_error("project_commuting: singular 1D interpolation/histopolation matrix");
    }
    const Index3 shape = comp.shape();
    double* base = coeffs.data() + space.offset(c);
    for (int i = 0; i < shape[0]; ++i)
      for (int j = 0; j < shape[1]; ++j)
        for (int k = 0; k < shape[2]; ++k) {
          const Functional &fx = fs[0][i], &fy = fs[1][j], &fz = fs[2][k];
          double dof = 0.0;
          for (std::size_t a = 0; a < fx.points.size(); ++a)
            for (std::size_t b = 0; b < fy.points.size(); ++b)
              for (std::size_t e = 0; e < fz.points.size(); ++e)
                dof += fx.weights[a] * fy.weights[b] * fz.weights[e] *
                       fn(Vec3(fx.points[a], fy.points[b], fz.points[e]))[c];
          base[comp.flat(i, j, k)] = dof;
        }
    along_axes(base, shape, [&](int d, Eigen::MatrixXd& m) { m = lu[d].solve(m); });
  }
  return {space, std::move(coeffs)};
}

}  // namespace coldplasma
