#pragma once

#include "coldplasma/linsolve.hpp"
#include "coldplasma/plasma.hpp"

#include <complex>
#include <optional>

namespace coldplasma {

using CSpMat = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using CVector = Eigen::VectorXcd;

/// A face of the box: direction d, side 0 (lo) or 1 (hi).
struct Face {
  int direction = 0;
  int side = 0;
  Vec3 normal() const {
    Vec3 n = Vec3::Zero();
    n[direction] = side == 0 ? -1.0 : 1.0;
    return n;
  }
};

/// Faces of Gamma_A: every face of a non-periodic direction.
std::vector<Face> artificial_faces(const DeRhamComplex& cx);
/// Throws std::invalid_argument if a face lies in a periodic direction.
void check_faces(const DeRhamComplex& cx, const std::vector<Face>& faces);

template <typename Scalar>
using MatrixWeight = std::function<Eigen::Matrix<Scalar, 3, 3>(const Vec3&)>;

/// Number of Gauss points per cell and direction used by default (p_max + 2).
int default_quad_points(const DeRhamComplex& cx);

/// <Lambda^row_i, W Lambda^col_j> over the box. Scalar spaces use entry (0, 0) of W (or row 0 /
/// column 0 when only one of the spaces is scalar).
template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> assemble_weighted(const TensorSpace& row, const TensorSpace& col,
                                                              const MatrixWeight<Scalar>& weight, int quad_points);

/// Same pairing restricted to one face of the box.
template <typename Scalar>
Eigen::SparseMatrix<Scalar, Eigen::RowMajor> assemble_face(const TensorSpace& row, const TensorSpace& col,
                                                          const Face& face, const MatrixWeight<Scalar>& weight,
                                                          int quad_points);

/// <Lambda_i, w Lambda_j>; an empty weight means w = 1.
SpMat assemble_mass(const TensorSpace& space, const ScalarFunction& weight = {}, int quad_points = 0);

/// <Lambda_i x Lambda_j, v> with v = omega_c b0; skew-symmetric.
SpMat assemble_rotation(const TensorSpace& v1, const VectorFunction& v, int quad_points = 0);

/// <nu x Lambda_i, nu x Lambda_j> summed over the given faces.
SpMat assemble_boundary_penalty(const TensorSpace& v1, const std::vector<Face>& faces, int quad_points = 0);

/// <nu x Lambda_i, nu x f> summed over faces; f may depend on the face normal.
using BoundaryFunction = std::function<Vec3(const Vec3& x, const Vec3& normal)>;
Eigen::VectorXd assemble_boundary_vector(const TensorSpace& v1, const std::vector<Face>& faces,
                                         const BoundaryFunction& f, int quad_points = 0);
/// <Lambda_i, f> over the box.
Eigen::VectorXd assemble_volume_vector(const TensorSpace& space, const VectorFunction& f, int quad_points = 0);

/// Time-harmonic forcing s(t) = Re{s_hat e^{-it}} = s_R cos t + s_I sin t.
struct SourceSpec {
  BoundaryFunction boundary_R;
  BoundaryFunction boundary_I;
  VectorFunction volume_R;
  VectorFunction volume_I;
  /// Ramp multiplying the forcing; empty means 1.
  std::function<double(double)> envelope;
};

struct SourceArrays {
  Eigen::VectorXd S_R;
  Eigen::VectorXd S_I;
};

SourceArrays assemble_boundary_source(const TensorSpace& v1, const SourceSpec& spec, const std::vector<Face>& faces,
                                      int quad_points = 0);

/// <Lambda^0_i, Lambda^1_j . nu> over the faces.
SpMat assemble_boundary_divergence(const TensorSpace& v0, const TensorSpace& v1, const std::vector<Face>& faces,
                                   int quad_points = 0);

/// Weak divergence -G^T M1 + B1 (rows V0, columns V1).
SpMat assemble_weak_div(const DeRhamComplex& cx, const SpMat& M1, const std::vector<Face>& faces,
                        int quad_points = 0);

/// <Lambda_i, eps Lambda_j> with the cold-plasma dielectric tensor.
CSpMat assemble_dielectric_mass(const PlasmaProfile& profile, const TensorSpace& v1, int quad_points = 0);

/// Matrices and source arrays of the semi-discrete system.
struct SystemOperators {
  const DeRhamComplex* complex = nullptr;
  std::vector<Face> faces;
  SpMat M1, M2;
  SpMat M1_wp, M1_nu, R1;
  SpMat A1;
  /// Boundary part of the weak divergence and the full weak divergence.
  SpMat B1, weak_div;
  Eigen::VectorXd S_R, S_I;
  std::function<double(double)> envelope;
  KroneckerMassSolver M1_solver;

  int dim_E() const { return static_cast<int>(M1.rows()); }
  int dim_B() const { return static_cast<int>(M2.rows()); }
  int dim_total() const { return 2 * dim_E() + dim_B(); }
  double envelope_at(double t) const { return envelope ? envelope(t) : 1.0; }
  /// int_{t0}^{t1} chi s(t) dt, with chi frozen at the midpoint.
  Eigen::VectorXd source_integral(double t0, double t1) const;
};

SystemOperators assemble_system(const DeRhamComplex& cx, const PlasmaProfile& profile,
                                const std::optional<SourceSpec>& source, int quad_points = 0);

/// Source spec of a manufactured solution.
SourceSpec manufactured_source(const ManufacturedSolution& sol);
/// Gaussian beam on the x = x_lo face; zero elsewhere. No volume source.
SourceSpec beam_source(const BeamParams& beam, double x_inc, double dt);

}  // namespace coldplasma
