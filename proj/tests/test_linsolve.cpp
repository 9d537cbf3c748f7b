#include "doctest.h"
#include "oracles.hpp"

using namespace coldplasma;

namespace {

SpMat spd_matrix(int n) {
  SpMat A(n, n);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 4.0 + 0.01 * i);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -1.0);
      t.emplace_back(i + 1, i, -1.0);
    }
  }
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

SpMat nonsymmetric_matrix(int n) {
  SpMat A(n, n);
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 3.0);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -1.5);
      t.emplace_back(i + 1, i, 0.5);
    }
  }
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

Box unit_box() { return Box{{Interval{0.0, 1.0}, Interval{0.0, 2.0}, Interval{0.0, 1.0}}}; }

}  // namespace

TEST_SUITE("linsolve") {

TEST_CASE("PCG solves an SPD system and counts 1 + n products each") {
  const SpMat A = spd_matrix(50);
  const Vector b = Vector::LinSpaced(50, -1.0, 1.0);
  Vector x = Vector::Zero(50);
  const SolveStats st = pcg(LinearOperator::from_matrix(A), LinearOperator::identity(50), b, x, {1e-12, 200});
  CHECK(st.converged);
  CHECK(st.status == SolveStatus::Converged);
  CHECK((A * x - b).norm() <= 1e-12 * b.norm());
  CHECK(st.matvec_A == 1 + st.iterations);
  CHECK(st.matvec_P == 1 + st.iterations);
}

TEST_CASE("PBiCGStab solves a nonsymmetric system and counts 1 + 2n products each") {
  const SpMat A = nonsymmetric_matrix(60);
  const Vector b = Vector::Ones(60);
  Vector x = Vector::Zero(60);
  const SolveStats st = pbicgstab(LinearOperator::from_matrix(A), LinearOperator::identity(60), b, x, {1e-12, 200});
  CHECK(st.converged);
  CHECK((A * x - b).norm() <= 1e-10 * b.norm());
  CHECK(st.matvec_A == 1 + 2 * st.iterations);
  CHECK(st.matvec_P == 1 + 2 * st.iterations);
}

TEST_CASE("zero right-hand side returns immediately") {
  const SpMat A = spd_matrix(10);
  Vector x = Vector::Zero(10);
  const SolveStats st = pcg(LinearOperator::from_matrix(A), LinearOperator::identity(10), Vector::Zero(10), x);
  CHECK(st.converged);
  CHECK(st.iterations == 0);
  CHECK(x.norm() == 0.0);
}

TEST_CASE("hitting the iteration cap is reported, not hidden") {
  const SpMat A = spd_matrix(80);
  Vector x = Vector::Zero(80);
  const SolveStats st =
      pcg(LinearOperator::from_matrix(A), LinearOperator::identity(80), Vector::Ones(80), x, {1e-14, 2});
  CHECK_FALSE(st.converged);
  CHECK(st.status == SolveStatus::MaxIterations);
  CHECK(st.iterations == 2);
}

TEST_CASE("size mismatch throws") {
  const SpMat A = spd_matrix(5);
  Vector x = Vector::Zero(5);
  CHECK_THROWS_AS(pcg(LinearOperator::from_matrix(A), LinearOperator::identity(4), Vector::Ones(5), x),
                  std::invalid_argument);
  CHECK_THROWS_AS(pbicgstab(LinearOperator::from_matrix(A), LinearOperator::identity(4), Vector::Ones(5), x),
                  std::invalid_argument);
}

TEST_CASE("Kronecker mass solver inverts the mass matrix") {
  for (bool periodic : {false, true}) {
    const DeRhamComplex cx = build_complex({4, 3, 2}, {3, 2, 2}, {false, periodic, true}, unit_box());
    for (int k = 0; k < 4; ++k) {
      const TensorSpace& s = cx.V(k);
      const KroneckerMassSolver solver(s);
      const SpMat M = assemble_mass(s);
      const Vector b = Vector::LinSpaced(s.dimension(), 0.0, 3.0).array().sin();
      Vector x, y;
      solver.solve(b, x);
      CHECK((M * x - b).norm() < 1e-11 * b.norm());
      solver.multiply(b, y);
      CHECK((M * b - y).norm() < 1e-12 * y.norm());
    }
  }
}

TEST_CASE("block diagonal preconditioner acts slice by slice") {
  const LinearOperator twice(3, [](const Vector& in, Vector& out) { out = 2.0 * in; });
  const LinearOperator P = block_diag_precond({LinearOperator::identity(2), twice}, 5);
  Vector out;
  P.apply(Vector::Ones(5), out);
  CHECK(out[1] == 1.0);
  CHECK(out[2] == 2.0);
  CHECK_THROWS_AS(block_diag_precond({LinearOperator::identity(2)}, 5), std::invalid_argument);
}

TEST_CASE("block matrix places scaled blocks") {
  SpMat a(2, 2), b(2, 3);
  a.setIdentity();
  b.insert(0, 2) = 1.0;
  const SpMat m = block_matrix({{{&a, 2.0}, {&b, -1.0}}, {{nullptr, 1.0}, {nullptr, 1.0}}}, {2, 1}, {2, 3});
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 5);
  CHECK(m.coeff(1, 1) == 2.0);
  CHECK(m.coeff(0, 4) == -1.0);
  CHECK_THROWS_AS(block_matrix({{{&b, 1.0}}}, {2}, {2}), std::invalid_argument);
}

}
