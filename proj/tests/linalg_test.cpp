#include "qcompat/linalg.hpp"

#include <random>

#include <gtest/gtest.h>

namespace qcompat::linalg {
namespace {

CMatrix random_matrix(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      const double re = n(rng);
      m(i, j) = cplx(re, n(rng));
    }
  }
  return m;
}

CMatrix random_hermitian(int d, std::uint64_t seed) { return hermitian_part(random_matrix(d, d, seed)); }

TEST(Kron, IdentityTimesIdentity) {
  EXPECT_EQ(kron(identity(2), identity(2)), identity(4));
}

TEST(Kron, ScalarFactor) {
  const CMatrix a = random_matrix(2, 3, 1);
  CMatrix c(1, 1);
  c(0, 0) = cplx(2.0, -1.0);
  EXPECT_LT((kron(a, c) - c(0, 0) * a).norm(), 1e-15);
}

TEST(Kron, PauliXTimesPauliZ) {
  const CMatrix k = kron(pauli_x(), pauli_z());
  CMatrix expected = CMatrix::Zero(4, 4);
  expected(0, 2) = 1.0;
  expected(1, 3) = -1.0;
  expected(2, 0) = 1.0;
  expected(3, 1) = -1.0;
  EXPECT_EQ(k, expected);
}

TEST(Kron, Associative) {
  const CMatrix a = random_matrix(2, 3, 2);
  const CMatrix b = random_matrix(3, 2, 3);
  const CMatrix c = random_matrix(2, 2, 4);
  EXPECT_LT((kron(kron(a, b), c) - kron(a, kron(b, c))).norm(), 1e-14);
}

TEST(PartialTrace, ProductOperator) {
  const CMatrix a = random_matrix(2, 2, 5);
  const CMatrix b = random_matrix(3, 3, 6);
  EXPECT_LT((partial_trace(kron(a, b), {2, 3}, {0}) - b.trace() * a).norm(), 1e-12);
  EXPECT_LT((partial_trace(kron(a, b), {2, 3}, {1}) - a.trace() * b).norm(), 1e-12);
}

TEST(PartialTrace, EmptyKeepIsFullTrace) {
  const CMatrix a = random_matrix(5, 5, 7);
  const CMatrix t = partial_trace(a, {5}, {});
  ASSERT_EQ(t.rows(), 1);
  EXPECT_LT(std::abs(t(0, 0) - a.trace()), 1e-12);
}

TEST(PartialTrace, MaximallyEntangledGivesIdentity) {
  CMatrix omega = CMatrix::Zero(4, 4);
  for (int a : {0, 3}) {
    for (int b : {0, 3}) omega(a, b) = 1.0;
  }
  EXPECT_LT((partial_trace(omega, {2, 2}, {0}) - identity(2)).norm(), 1e-15);
  EXPECT_LT((partial_trace(omega, {2, 2}, {1}) - identity(2)).norm(), 1e-15);
}

TEST(PartialTrace, KeepOrderPermutes) {
  const CMatrix a = random_matrix(2, 2, 8);
  const CMatrix b = random_matrix(3, 3, 9);
  const CMatrix c = random_matrix(2, 2, 10);
  const CMatrix abc = kron_all({a, b, c});
  EXPECT_LT((partial_trace(abc, {2, 3, 2}, {2, 0}) - b.trace() * kron(c, a)).norm(), 1e-11);
}

TEST(PartialTrace, PreservesTraceForEveryKeepSet) {
  const CMatrix a = random_matrix(12, 12, 11);
  const DimTuple dims{2, 3, 2};
  const std::vector<std::vector<int>> keeps{{}, {0}, {1}, {2}, {0, 1}, {0, 2}, {1, 2}, {0, 1, 2}};
  for (const auto& keep : keeps) {
    EXPECT_LT(std::abs(partial_trace(a, dims, keep).trace() - a.trace()), 1e-12);
  }
}

TEST(PartialTrace, DimensionMismatchThrows) {
  EXPECT_THROW(partial_trace(identity(5), {2, 2}, {0}), std::invalid_argument);
  EXPECT_THROW(partial_trace(identity(4), {2, 2}, {2}), std::invalid_argument);
}

TEST(PermuteSubsystems, SwapsKroneckerFactors) {
  const CMatrix a = random_matrix(2, 2, 12);
  const CMatrix b = random_matrix(3, 3, 13);
  EXPECT_LT((permute_subsystems(kron(a, b), {2, 3}, {1, 0}) - kron(b, a)).norm(), 1e-14);
}

TEST(PartialTranspose, MatchesProductRule) {
  const CMatrix a = random_matrix(2, 2, 14);
  const CMatrix b = random_matrix(3, 3, 15);
  EXPECT_LT((partial_transpose(kron(a, b), {2, 3}, {0}) - kron(a.transpose(), b)).norm(), 1e-14);
  EXPECT_LT((partial_transpose(kron(a, b), {2, 3}, {1}) - kron(a, b.transpose())).norm(), 1e-14);
}

TEST(EmbedIdentity, IsAdjointOfPartialTrace) {
  const CMatrix x = random_matrix(12, 12, 16);
  const CMatrix g = random_matrix(4, 4, 17);
  const DimTuple dims{2, 3, 2};
  const cplx lhs = (g * partial_trace(x, dims, {0, 2})).trace();
  const cplx rhs = (embed_identity(g, dims, {0, 2}) * x).trace();
  EXPECT_LT(std::abs(lhs - rhs), 1e-11);
}

TEST(Eigh, DiagonalInput) {
  CMatrix a = CMatrix::Zero(2, 2);
  a(0, 0) = 3.0;
  a(1, 1) = 1.0;
  const auto e = eigh(a);
  EXPECT_NEAR(e.values(0), 3.0, 1e-15);
  EXPECT_NEAR(e.values(1), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(e.vectors(1, 1)), 1.0, 1e-15);
}

TEST(Eigh, PauliX) {
  const auto e = eigh(pauli_x());
  EXPECT_NEAR(e.values(0), 1.0, 1e-15);
  EXPECT_NEAR(e.values(1), -1.0, 1e-15);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), r, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), r, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 0) - e.vectors(1, 0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(0, 1) + e.vectors(1, 1)), 0.0, 1e-14);
}

TEST(Eigh, ZeroMatrix) {
  const auto e = eigh(zeros(3, 3));
  EXPECT_EQ(e.values.norm(), 0.0);
  EXPECT_LT((e.vectors.adjoint() * e.vectors - identity(3)).norm(), 1e-14);
}

TEST(Eigh, ReconstructionUpToDimension64) {
  for (int d : {1, 2, 5, 17, 33, 64}) {
    const CMatrix a = random_hermitian(d, 100 + d);
    const auto e = eigh(a);
    const double scale = std::max(1.0, a.norm());
    EXPECT_LT((e.vectors * e.values.asDiagonal() * e.vectors.adjoint() - a).norm(), 1e-9 * scale);
    EXPECT_LT((e.vectors.adjoint() * e.vectors - identity(d)).norm(), 1e-9);
    for (int k = 1; k < d; ++k) EXPECT_GE(e.values(k - 1), e.values(k));
  }
}

TEST(Eigh, RejectsNonHermitian) {
  CMatrix a = identity(2);
  a(0, 1) = 1e-3;
  EXPECT_THROW(eigh(a), std::invalid_argument);
}

TEST(Eigh, SymmetrizesTinyAsymmetry) {
  CMatrix a = pauli_x();
  a(0, 1) += 1e-13;
  EXPECT_NO_THROW(eigh(a));
}

TEST(PsdProjection, IdempotentAndContractive) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const CMatrix a = random_hermitian(6, 200 + s);
    const CMatrix p = psd_projection(a);
    EXPECT_GE(min_eigenvalue(p), -1e-12);
    EXPECT_LT((psd_projection(p) - p).norm(), 1e-12);
    const CMatrix g = random_matrix(6, 6, 300 + s);
    const CMatrix psd = g * g.adjoint();
    EXPECT_LE((p - psd).norm(), (a - psd).norm() + 1e-12);
  }
}

TEST(PsdSqrt, SquaresBack) {
  const CMatrix g = random_matrix(4, 4, 18);
  const CMatrix a = g * g.adjoint();
  const CMatrix r = psd_sqrt(a);
  EXPECT_LT((r * r - a).norm(), 1e-10);
}

TEST(GellMann, OrthonormalHermitianBasis) {
  for (int d : {1, 2, 3, 4}) {
    const auto basis = gell_mann_basis(d);
    ASSERT_EQ(static_cast<int>(basis.size()), d * d);
    for (size_t i = 0; i < basis.size(); ++i) {
      EXPECT_LT(hermiticity_error(basis[i]), 1e-15);
      for (size_t j = 0; j < basis.size(); ++j) {
        const double ip = (basis[i] * basis[j]).trace().real();
        EXPECT_NEAR(ip, i == j ? 1.0 : 0.0, 1e-14);
      }
    }
  }
}

TEST(RandomIsometry, SquareCaseIsUnitary) {
  const CMatrix v = random_isometry(2, 2, 3);
  EXPECT_LT((v.adjoint() * v - identity(2)).norm(), 1e-10);
  EXPECT_LT((v * v.adjoint() - identity(2)).norm(), 1e-10);
}

TEST(RandomIsometry, SingleColumnIsUnitVector) {
  const CMatrix v = random_isometry(1, 3, 4);
  ASSERT_EQ(v.rows(), 3);
  ASSERT_EQ(v.cols(), 1);
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
}

TEST(RandomIsometry, Deterministic) {
  EXPECT_EQ(random_isometry(3, 7, 42), random_isometry(3, 7, 42));
  EXPECT_NE(random_isometry(3, 7, 42), random_isometry(3, 7, 43));
}

TEST(RandomIsometry, RejectsShrinking) {
  EXPECT_THROW(random_isometry(3, 2, 0), std::invalid_argument);
}

TEST(RandomDensityMatrix, IsState) {
  const CMatrix rho = random_density_matrix(4, 2, 5);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
  EXPECT_GE(min_eigenvalue(rho), -1e-12);
  EXPECT_NEAR(eigvalsh(rho)(2), 0.0, 1e-12);
}

}  // namespace
}  // namespace qcompat::linalg
