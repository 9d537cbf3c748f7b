#pragma once

#include "coldplasma/spline.hpp"

#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <memory>

namespace coldplasma {

using Vec3 = Eigen::Vector3d;
using Index3 = std::array<int, 3>;
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using IntSpMat = Eigen::SparseMatrix<int, Eigen::RowMajor>;

struct Box {
  std::array<Interval, 3> sides{};
  const Interval& operator[](int d) const { return sides[static_cast<std::size_t>(d)]; }
  double volume() const { return sides[0].length() * sides[1].length() * sides[2].length(); }
};

/// One scalar component of a tensor-product space: a basis per direction.
struct ComponentSpace {
  std::array<BSplineBasis1D, 3> bases;
  Index3 shape() const {
    return {bases[0].dimension(), bases[1].dimension(), bases[2].dimension()};
  }
  int size() const { return bases[0].dimension() * bases[1].dimension() * bases[2].dimension(); }
  std::array<BasisKind, 3> kinds() const {
    return {bases[0].kind(), bases[1].kind(), bases[2].kind()};
  }
  /// Row-major lexicographic (x, y, z) flat index.
  int flat(int i, int j, int k) const {
    return (i * bases[1].dimension() + j) * bases[2].dimension() + k;
  }
};

/// Discrete space V^k: 1 component for k = 0, 3; 3 components for k = 1, 2.
/// Coefficients are stored component after component.
class TensorSpace {
 public:
  TensorSpace() = default;
  TensorSpace(int form_degree, std::vector<ComponentSpace> components);

  int form_degree() const { return form_degree_; }
  int n_components() const { return static_cast<int>(components_.size()); }
  const ComponentSpace& component(int c) const { return components_[static_cast<std::size_t>(c)]; }
  int offset(int c) const { return offsets_[static_cast<std::size_t>(c)]; }
  int dimension() const { return offsets_.back(); }
  bool is_vector() const { return n_components() == 3; }
  Box domain() const;

 private:
  int form_degree_ = 0;
  std::vector<ComponentSpace> components_;
  std::vector<int> offsets_{0};
};

/// The discrete de Rham sequence V0 -> V1 -> V2 -> V3 with integer incidence matrices.
class DeRhamComplex {
 public:
  Index3 n_cells{};
  Index3 degrees{};
  std::array<bool, 3> periodic{};
  Box domain{};

  std::array<BSplineBasis1D, 3> n_bases;
  std::array<BSplineBasis1D, 3> d_bases;
  std::array<TensorSpace, 4> spaces;

  IntSpMat grad, curl, div;
  /// The same incidence matrices in floating point for products with coefficients.
  SpMat grad_f, curl_f, div_f;

  const TensorSpace& V(int k) const { return spaces[static_cast<std::size_t>(k)]; }
  double cell_width(int d) const { return domain[d].length() / n_cells[static_cast<std::size_t>(d)]; }
};

DeRhamComplex build_complex(Index3 n_cells, Index3 degrees, std::array<bool, 3> periodic, Box domain);

/// 1D incidence matrix (derivative from N to D coefficients), rows (-1, +1).
IntSpMat incidence_1d(const BSplineBasis1D& n_basis);

IntSpMat kron(const IntSpMat& a, const IntSpMat& b);
SpMat kron(const SpMat& a, const SpMat& b);

/// Coefficients of a field in one of the complex's spaces.
struct FieldCoeffs {
  const TensorSpace* space = nullptr;
  Eigen::VectorXd data;

  FieldCoeffs() = default;
  FieldCoeffs(const TensorSpace& s, Eigen::VectorXd d) : space(&s), data(std::move(d)) {}
  static FieldCoeffs zeros(const TensorSpace& s) { return {s, Eigen::VectorXd::Zero(s.dimension())}; }
};

/// Field value at a point: three components for vector spaces, component 0 otherwise.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> evaluate(const TensorSpace& space,
                                     const Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>& coeffs,
                                     const Vec3& x) {
  Eigen::Matrix<Scalar, 3, 1> out = Eigen::Matrix<Scalar, 3, 1>::Zero();
  for (int c = 0; c < space.n_components(); ++c) {
    const ComponentSpace& comp = space.component(c);
    std::array<BasisValues, 3> bv;
    for (int d = 0; d < 3; ++d) bv[d] = comp.bases[d].eval(x[d], 0);
    Scalar sum(0);
    for (int a = 0; a < comp.bases[0].n_local(); ++a) {
      const int ia = comp.bases[0].global_index(bv[0].first_index + a);
      for (int b = 0; b < comp.bases[1].n_local(); ++b) {
        const int ib = comp.bases[1].global_index(bv[1].first_index + b);
        const double wab = bv[0].values(0, a) * bv[1].values(0, b);
        for (int e = 0; e < comp.bases[2].n_local(); ++e) {
          const int ie = comp.bases[2].global_index(bv[2].first_index + e);
          sum += coeffs[space.offset(c) + comp.flat(ia, ib, ie)] * (wab * bv[2].values(0, e));
        }
      }
    }
    out[c] = sum;
  }
  return out;
}

/// Basis values at every quadrature point: values[cell][point].
struct BasisTable {
  QuadratureRule rule;
  std::vector<std::vector<BasisValues>> values;
};

BasisTable tabulate(const BSplineBasis1D& basis, const QuadratureRule& rule, int nderiv = 0);

std::vector<Vec3> eval_field(const FieldCoeffs& f, const std::vector<Vec3>& points);

using VectorFunction = std::function<Vec3(const Vec3&)>;

/// Options shared by the projections.
struct ProjectionOptions {
  /// Gauss points per cell (per sub-interval for histopolation).
  int quad_points = 8;
  double tol = 1e-12;
  int max_iter = 500;
};

/// L2 projection: solve M c = (<Lambda_i, fn>) with PCG and a Kronecker mass preconditioner.
FieldCoeffs project_L2(const TensorSpace& space, const VectorFunction& fn,
                       const ProjectionOptions& opts = {});

/// Commuting projection by Greville interpolation in N directions and histopolation
/// between consecutive Greville points in D directions.
FieldCoeffs project_commuting(const TensorSpace& space, const VectorFunction& fn,
                              const ProjectionOptions& opts = {});

}  // namespace coldplasma
