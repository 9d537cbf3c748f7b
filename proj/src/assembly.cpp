#include "coldplasma/assembly.hpp"

#include <cmath>
#include <sstream>

namespace coldplasma {

namespace {

/// Integration points of one direction: a list of (cell, points, weights).
struct DirRule {
  std::vector<int> cells;
  std::vector<std::vector<double>> points;
  std::vector<std::vector<double>> weights;
};

DirRule volume_rule(const BSplineBasis1D& b, int n_points) {
  const QuadratureRule q = gauss_rule(n_points, b.knot_vector().breakpoints());
  DirRule r;
  for (int k = 0; k < q.n_cells(); ++k) {
    r.cells.push_back(k);
    std::vector<double> p(q.n_points), w(q.n_points);
    for (int i = 0; i < q.n_points; ++i) {
      p[i] = q.points(k, i);
      w[i] = q.weights(k, i);
    }
    r.points.push_back(std::move(p));
    r.weights.push_back(std::move(w));
  }
  return r;
}

DirRule face_rule(const BSplineBasis1D& b, int side) {
  DirRule r;
  r.cells.push_back(side == 0 ? 0 : b.n_cells() - 1);
  r.points.push_back({side == 0 ? b.domain().lo : b.domain().hi});
  r.weights.push_back({1.0});
  return r;
}

std::array<int, 3> quad_counts(const TensorSpace& s, int quad_points) {
  std::array<int, 3> n{};
  for (int d = 0; d < 3; ++d) n[d] = quad_points > 0 ? quad_points : s.component(0).bases[d].degree() + 2;
  return n;
}

std::array<DirRule, 3> rules_for(const TensorSpace& s, int quad_points, const Face* face) {
  const std::array<int, 3> nq = quad_counts(s, quad_points);
  std::array<DirRule, 3> r;
  for (int d = 0; d < 3; ++d) {
    const BSplineBasis1D& b = s.component(0).bases[d];
    r[d] = (face != nullptr && face->direction == d) ? face_rule(b, face->side) : volume_rule(b, nq[d]);
  }
  return r;
}

/// Tensor-product values of the local basis functions of one component at one point,
/// with their global flat indices.
struct LocalBasis {
  Eigen::VectorXd values;
  std::vector<int> index;
};

void local_basis(const ComponentSpace& comp, int offset, const std::array<const BasisValues*, 3>& bv,
                 LocalBasis& out) {
  const int n0 = comp.bases[0].n_local(), n1 = comp.bases[1].n_local(), n2 = comp.bases[2].n_local();
  out.values.resize(n0 * n1 * n2);
  out.index.resize(static_cast<std::size_t>(n0 * n1 * n2));
  int m = 0;
  for (int a = 0; a < n0; ++a) {
    const int ia = comp.bases[0].global_index(bv[0]->first_index + a);
    for (int b = 0; b < n1; ++b) {
      const int ib = comp.bases[1].global_index(bv[1]->first_index + b);
      const double vab = bv[0]->values(0, a) * bv[1]->values(0, b);
      for (int e = 0; e < n2; ++e, ++m) {
        const int ie = comp.bases[2].global_index(bv[2]->first_index + e);
        out.values[m] = vab * bv[2]->values(0, e);
        out.index[m] = offset + comp.flat(ia, ib, ie);
      }
    }
  }
}

/// Basis values of every component of a space at every point of the rules.
struct SpaceTable {
  // [component][direction][cell entry][point]
  std::vector<std::array<std::vector<std::vector<BasisValues>>, 3>> v;
};

SpaceTable tabulate_space(const TensorSpace& s, const std::array<DirRule, 3>& rules) {
  SpaceTable t;
  t.v.resize(static_cast<std::size_t>(s.n_components()));
  for (int c = 0; c < s.n_components(); ++c)
    for (int d = 0; d < 3; ++d) {
      const BSplineBasis1D& b = s.component(c).bases[d];
      auto& dst = t.v[c][d];
      dst.resize(rules[d].cells.size());
      for (std::size_t k = 0; k < rules[d].cells.size(); ++k)
        for (double x : rules[d].points[k]) dst[k].push_back(b.eval_in_cell(rules[d].cells[k], x, 0));
    }
  return t;
}

int row_nnz_bound(const TensorSpace& row, const TensorSpace& col, int ra) {
  int total = 0;
  for (int cb = 0; cb < col.n_components(); ++cb) {
    int prod = 1;
    for (int d = 0; d < 3; ++d) {
      const BSplineBasis1D& r = row.component(ra).bases[d];
      const BSplineBasis1D& c = col.component(cb).bases[d];
      prod *= std::min(r.n_local() + c.n_local() - 1, c.dimension());
    }
    total += prod;
  }
  return total;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> pair_forms(const TensorSpace& row, const TensorSpace& col,
                                                        const MatrixWeight<Scalar>& weight,
                                                        const std::array<DirRule, 3>& rules) {
  using Mat = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  using Local = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat out(row.dimension(), col.dimension());
  Eigen::VectorXi reserve(row.dimension());
  for (int a = 0; a < row.n_components(); ++a)
    reserve.segment(row.offset(a), row.component(a).size()).setConstant(row_nnz_bound(row, col, a));
  out.reserve(reserve);

  const SpaceTable trow = tabulate_space(row, rules);
  const SpaceTable tcol = tabulate_space(col, rules);
  const int nr = row.n_components(), nc = col.n_components();
  std::vector<LocalBasis> lr(static_cast<std::size_t>(nr)), lc(static_cast<std::size_t>(nc));
  std::vector<Local> acc(static_cast<std::size_t>(nr * nc));
  std::vector<char> touched(static_cast<std::size_t>(nr * nc));

  for (std::size_t kx = 0; kx < rules[0].cells.size(); ++kx)
    for (std::size_t ky = 0; ky < rules[1].cells.size(); ++ky)
      for (std::size_t kz = 0; kz < rules[2].cells.size(); ++kz) {
        std::fill(touched.begin(), touched.end(), 0);
        for (std::size_t qx = 0; qx < rules[0].points[kx].size(); ++qx)
          for (std::size_t qy = 0; qy < rules[1].points[ky].size(); ++qy)
            for (std::size_t qz = 0; qz < rules[2].points[kz].size(); ++qz) {
              const Vec3 x(rules[0].points[kx][qx], rules[1].points[ky][qy], rules[2].points[kz][qz]);
              const double w = rules[0].weights[kx][qx] * rules[1].weights[ky][qy] * rules[2].weights[kz][qz];
              const Eigen::Matrix<Scalar, 3, 3> W = weight(x);
              for (int a = 0; a < nr; ++a)
                local_basis(row.component(a), row.offset(a),
                            {&trow.v[a][0][kx][qx], &trow.v[a][1][ky][qy], &trow.v[a][2][kz][qz]}, lr[a]);
              for (int b = 0; b < nc; ++b)
                local_basis(col.component(b), col.offset(b),
                            {&tcol.v[b][0][kx][qx], &tcol.v[b][1][ky][qy], &tcol.v[b][2][kz][qz]}, lc[b]);
              for (int a = 0; a < nr; ++a)
                for (int b = 0; b < nc; ++b) {
                  const Scalar wab = W(row.is_vector() ? a : 0, col.is_vector() ? b : 0);
                  if (wab == Scalar(0)) continue;
                  Local& L = acc[a * nc + b];
                  if (!touched[a * nc + b]) {
                    L.setZero(lr[a].values.size(), lc[b].values.size());
                    touched[a * nc + b] = 1;
                  }
                  L.noalias() += (Scalar(w) * wab) * (lr[a].values.template cast<Scalar>() *
                                                      lc[b].values.transpose().template cast<Scalar>());
                }
            }
        // the index lists only depend on the cell, so the last point's lists are valid
        for (int a = 0; a < nr; ++a)
          for (int b = 0; b < nc; ++b) {
            if (!touched[a * nc + b]) continue;
            const Local& L = acc[a * nc + b];
            for (int i = 0; i < L.rows(); ++i)
              for (int j = 0; j < L.cols(); ++j) out.coeffRef(lr[a].index[i], lc[b].index[j]) += L(i, j);
          }
      }
  out.makeCompressed();
  return out;
}

Eigen::VectorXd integrate_vector(const TensorSpace& space, const std::array<DirRule, 3>& rules,
                                 const VectorFunction& f) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(space.dimension());
  const SpaceTable t = tabulate_space(space, rules);
  LocalBasis lb;
  for (std::size_t kx = 0; kx < rules[0].cells.size(); ++kx)
    for (std::size_t ky = 0; ky < rules[1].cells.size(); ++ky)
      for (std::size_t kz = 0; kz < rules[2].cells.size(); ++kz)
        for (std::size_t qx = 0; qx < rules[0].points[kx].size(); ++qx)
          for (std::size_t qy = 0; qy < rules[1].points[ky].size(); ++qy)
            for (std::size_t qz = 0; qz < rules[2].points[kz].size(); ++qz) {
              const Vec3 x(rules[0].points[kx][qx], rules[1].points[ky][qy], rules[2].points[kz][qz]);
              const double w = rules[0].weights[kx][qx] * rules[1].weights[ky][qy] * rules[2].weights[kz][qz];
              const Vec3 fx = f(x);
              for (int a = 0; a < space.n_components(); ++a) {
                if (fx[a] == 0.0) continue;
                local_basis(space.component(a), space.offset(a),
                            {&t.v[a][0][kx][qx], &t.v[a][1][ky][qy], &t.v[a][2][kz][qz]}, lb);
                for (int i = 0; i < lb.values.size(); ++i) out[lb.index[i]] += w * fx[a] * lb.values[i];
              }
            }
  return out;
}

}  // namespace

std::vector<Face> artificial_faces(const DeRhamComplex& cx) {
  std::vector<Face> faces;
  for (int d = 0; d < 3; ++d)
    if (!cx.periodic[d]) {
      faces.push_back({d, 0});
      faces.push_back({d, 1});
    }
  return faces;
}

void check_faces(const DeRhamComplex& cx, const std::vector<Face>& faces) {
  for (const Face& f : faces) {
    if (f.direction < 0 || f.direction > 2 || (f.side != 0 && f.side != 1))
      throw std::invalid_argument("invalid face descriptor");
    if (cx.periodic[f.direction]) {
      std::ostringstream msg;
      msg << "face in direction " << f.direction << " is periodic and cannot be artificial";
      throw std::invalid_argument(msg.str());
    }
  }
}

int default_quad_points(const DeRhamComplex& cx) {
  return *std::max_element(cx.degrees.begin(), cx.degrees.end()) + 2;
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> assemble_weighted(const TensorSpace& row, const TensorSpace& col,
                                                              const MatrixWeight<Scalar>& weight, int quad_points) {
  return pair_forms<Scalar>(row, col, weight, rules_for(row, quad_points, nullptr));
}

template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> assemble_face(const TensorSpace& row, const TensorSpace& col,
                                                          const Face& face, const MatrixWeight<Scalar>& weight,
                                                          int quad_points) {
  return pair_forms<Scalar>(row, col, weight, rules_for(row, quad_points, &face));
}

template SpMat assemble_weighted<double>(const TensorSpace&, const TensorSpace&, const MatrixWeight<double>&, int);
template CSpMat assemble_weighted<Complex>(const TensorSpace&, const TensorSpace&, const MatrixWeight<Complex>&, int);
template SpMat assemble_face<double>(const TensorSpace&, const TensorSpace&, const Face&, const MatrixWeight<double>&,
                                     int);

SpMat assemble_mass(const TensorSpace& space, const ScalarFunction& weight, int quad_points) {
  if (!weight)
    return assemble_weighted<double>(space, space, [](const Vec3&) { return Eigen::Matrix3d::Identity(); },
                                     quad_points);
  return assemble_weighted<double>(
      space, space, [&](const Vec3& x) { return Eigen::Matrix3d(weight(x) * Eigen::Matrix3d::Identity()); },
      quad_points);
}

SpMat assemble_rotation(const TensorSpace& v1, const VectorFunction& v, int quad_points) {
  // (Lambda_i x Lambda_j) . v = eps_abc v_c for components a, b
  return assemble_weighted<double>(
      v1, v1,
      [&](const Vec3& x) {
        const Vec3 c = v(x);
        Eigen::Matrix3d W;
        W << 0.0, c[2], -c[1], -c[2], 0.0, c[0], c[1], -c[0], 0.0;
        return W;
      },
      quad_points);
}

SpMat assemble_boundary_penalty(const TensorSpace& v1, const std::vector<Face>& faces, int quad_points) {
  SpMat out(v1.dimension(), v1.dimension());
  for (const Face& f : faces) {
    const Vec3 n = f.normal();
    const Eigen::Matrix3d W = Eigen::Matrix3d::Identity() - n * n.transpose();
    out += assemble_face<double>(v1, v1, f, [&](const Vec3&) { return W; }, quad_points);
  }
  return out;
}

Eigen::VectorXd assemble_boundary_vector(const TensorSpace& v1, const std::vector<Face>& faces,
                                         const BoundaryFunction& f, int quad_points) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(v1.dimension());
  if (!f) return out;
  for (const Face& face : faces) {
    const Vec3 n = face.normal();
    out += integrate_vector(v1, rules_for(v1, quad_points, &face), [&](const Vec3& x) {
      const Vec3 s = f(x, n);
      return Vec3(s - n * n.dot(s));
    });
  }
  return out;
}

Eigen::VectorXd assemble_volume_vector(const TensorSpace& space, const VectorFunction& f, int quad_points) {
  if (!f) return Eigen::VectorXd::Zero(space.dimension());
  return integrate_vector(space, rules_for(space, quad_points, nullptr), f);
}

SourceArrays assemble_boundary_source(const TensorSpace& v1, const SourceSpec& spec, const std::vector<Face>& faces,
                                      int quad_points) {
  SourceArrays s;
  s.S_R = assemble_boundary_vector(v1, faces, spec.boundary_R, quad_points) +
          assemble_volume_vector(v1, spec.volume_R, quad_points);
  s.S_I = assemble_boundary_vector(v1, faces, spec.boundary_I, quad_points) +
          assemble_volume_vector(v1, spec.volume_I, quad_points);
  return s;
}

SpMat assemble_boundary_divergence(const TensorSpace& v0, const TensorSpace& v1, const std::vector<Face>& faces,
                                   int quad_points) {
  SpMat out(v0.dimension(), v1.dimension());
  for (const Face& f : faces) {
    Eigen::Matrix3d W = Eigen::Matrix3d::Zero();
    W.row(0) = f.normal().transpose();
    out += assemble_face<double>(v0, v1, f, [&](const Vec3&) { return W; }, quad_points);
  }
  return out;
}

SpMat assemble_weak_div(const DeRhamComplex& cx, const SpMat& M1, const std::vector<Face>& faces, int quad_points) {
  const SpMat GtM1 = SpMat(cx.grad_f.transpose()) * M1;
  return SpMat(-GtM1 + assemble_boundary_divergence(cx.V(0), cx.V(1), faces, quad_points));
}

CSpMat assemble_dielectric_mass(const PlasmaProfile& profile, const TensorSpace& v1, int quad_points) {
  return assemble_weighted<Complex>(
      v1, v1, [&](const Vec3& x) { return dielectric_tensor(stix(profile, x), profile.b0(x)); }, quad_points);
}

Eigen::VectorXd SystemOperators::source_integral(double t0, double t1) const {
  const double chi = envelope_at(0.5 * (t0 + t1));
  const double s = std::sin(t1) - std::sin(t0);
  const double c = std::cos(t1) - std::cos(t0);
  return chi * (s * S_R - c * S_I);
}

SystemOperators assemble_system(const DeRhamComplex& cx, const PlasmaProfile& profile,
                                const std::optional<SourceSpec>& source, int quad_points) {
  SystemOperators ops;
  ops.complex = &cx;
  ops.faces = artificial_faces(cx);
  const TensorSpace& v1 = cx.V(1);
  ops.M1 = assemble_mass(v1, {}, quad_points);
  ops.M2 = assemble_mass(cx.V(2), {}, quad_points);
  ops.M1_wp = assemble_mass(v1, profile.omega_p, quad_points);
  ops.M1_nu = assemble_mass(v1, profile.nu_e, quad_points);
  ops.R1 = assemble_rotation(v1, [&](const Vec3& x) { return profile.rotation(x); }, quad_points);
  ops.A1 = assemble_boundary_penalty(v1, ops.faces, quad_points);
  ops.B1 = assemble_boundary_divergence(cx.V(0), v1, ops.faces, quad_points);
  ops.weak_div = SpMat(SpMat(-SpMat(cx.grad_f.transpose()) * ops.M1) + ops.B1);
  if (source) {
    const SourceArrays s = assemble_boundary_source(v1, *source, ops.faces, quad_points);
    ops.S_R = s.S_R;
    ops.S_I = s.S_I;
    ops.envelope = source->envelope;
  } else {
    ops.S_R = Eigen::VectorXd::Zero(v1.dimension());
    ops.S_I = Eigen::VectorXd::Zero(v1.dimension());
  }
  ops.M1_solver = KroneckerMassSolver(v1);
  return ops;
}

SourceSpec manufactured_source(const ManufacturedSolution& sol) {
  SourceSpec s;
  s.boundary_R = [sol](const Vec3& x, const Vec3& n) { return sol.boundary_R(x, n); };
  s.boundary_I = [sol](const Vec3& x, const Vec3& n) { return sol.boundary_I(x, n); };
  s.volume_R = [sol](const Vec3& x) { return sol.volume_R(x); };
  s.volume_I = [sol](const Vec3& x) { return sol.volume_I(x); };
  return s;
}

SourceSpec beam_source(const BeamParams& beam, double x_inc, double dt) {
  const auto s_hat = [beam, x_inc](const Vec3& x, const Vec3& n) -> CVec3 {
    if (n[0] >= 0.0 || std::abs(x[0] - x_inc) > 1e-12 * (1.0 + std::abs(x_inc))) return CVec3::Zero();
    const BeamFields f = gaussian_beam_fields(beam, x);
    return f.E - cross(f.B, n.cast<Complex>());
  };
  SourceSpec s;
  s.boundary_R = [s_hat](const Vec3& x, const Vec3& n) { return Vec3(s_hat(x, n).real()); };
  s.boundary_I = [s_hat](const Vec3& x, const Vec3& n) { return Vec3(s_hat(x, n).imag()); };
  s.envelope = [dt](double t) { return envelope(t, dt); };
  return s;
}

}  // namespace coldplasma
