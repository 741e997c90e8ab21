#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tsv/hilbert.hpp"

using namespace tsv;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

StateVector plus() { return StateVector{kInvSqrt2, kInvSqrt2}; }

}  // namespace

TEST(Inner, BasisCases) {
  const auto e0 = StateVector::basis(2, 0);
  const auto e1 = StateVector::basis(2, 1);
  EXPECT_EQ(inner(e0, e0), Complex(1.0));
  EXPECT_EQ(inner(e0, e1), Complex(0.0));
  EXPECT_NEAR(std::abs(inner(plus(), e0) - Complex(kInvSqrt2)), 0.0, 1e-15);
}

TEST(Inner, ConjugatesLeftArgument) {
  const StateVector phi{Complex(0, 1), 0.0};
  const StateVector psi{1.0, 0.0};
  EXPECT_EQ(inner(phi, psi), Complex(0, -1));
}

TEST(Inner, DimensionMismatchThrows) {
  EXPECT_THROW(inner(StateVector::basis(2, 0), StateVector::basis(3, 0)), DimensionMismatch);
}

TEST(Apply, IdentityFlipAndProjection) {
  const auto psi = plus();
  EXPECT_LE(max_abs_diff(apply(Operator::identity(2), psi), psi), 0.0);
  EXPECT_LE(max_abs_diff(apply(pauli_x(), StateVector::basis(2, 0)), StateVector::basis(2, 1)), 0.0);

  const auto projected = apply(Projector::onto_basis(2, {0}), psi);
  EXPECT_NEAR(projected[0].real(), kInvSqrt2, 1e-15);
  EXPECT_EQ(projected[1], Complex(0.0));
  EXPECT_NEAR(projected.norm(), kInvSqrt2, 1e-15);
  EXPECT_THROW(apply(Operator::identity(3), psi), DimensionMismatch);
}

TEST(Tensor, BasisAndIdentity) {
  const auto e00 = tensor(StateVector::basis(2, 0), StateVector::basis(2, 0));
  EXPECT_LE(max_abs_diff(e00, StateVector::basis(4, 0)), 0.0);
  EXPECT_LE(max_abs_diff(tensor(Operator::identity(2), Operator::identity(2)), Operator::identity(4)), 0.0);

  // Row-major, first factor most significant.
  const auto e01 = tensor(StateVector::basis(2, 0), StateVector::basis(2, 1));
  EXPECT_EQ(e01[1], Complex(1.0));
  const auto e12 = tensor(StateVector::basis(2, 1), StateVector::basis(3, 2));
  EXPECT_EQ(e12[1 * 3 + 2], Complex(1.0));
}

TEST(Tensor, OperatorActsFactorwise) {
  Rng rng(21);
  const auto a = random_unitary(2, rng);
  const auto b = random_unitary(3, rng);
  const auto x = random_state(2, rng);
  const auto y = random_state(3, rng);
  EXPECT_LE(max_abs_diff(apply(tensor(a, b), tensor(x, y)), tensor(apply(a, x), apply(b, y))), 1e-14);
}

TEST(Tensor, AssociativeElementwise) {
  Rng rng(4);
  const auto a = random_state(2, rng);
  const auto b = random_state(3, rng);
  const auto c = random_state(2, rng);
  EXPECT_LE(max_abs_diff(tensor(tensor(a, b), c), tensor(a, tensor(b, c))), 1e-15);

  const auto ua = random_unitary(2, rng);
  const auto ub = random_unitary(2, rng);
  const auto uc = random_unitary(3, rng);
  EXPECT_LE(max_abs_diff(tensor(tensor(ua, ub), uc), tensor(ua, tensor(ub, uc))), 1e-15);
}

TEST(PartialTrace, BellStateGivesMaximallyMixed) {
  const StateVector bell{kInvSqrt2, 0.0, 0.0, kInvSqrt2};
  const auto reduced = partial_trace(density(bell), 0, {2, 2});
  EXPECT_LE(max_abs_diff(reduced, Complex(0.5) * Operator::identity(2)), 1e-15);
}

TEST(PartialTrace, ProductStateRecoversFactor) {
  Rng rng(8);
  const auto rho_a = density(random_state(3, rng));
  const auto rho_b = density(random_state(2, rng));
  const auto rho = tensor(rho_a, rho_b);
  EXPECT_LE(max_abs_diff(partial_trace(rho, 0, {3, 2}), rho_a), 1e-14);
  EXPECT_LE(max_abs_diff(partial_trace(rho, 1, {3, 2}), rho_b), 1e-14);
}

TEST(PartialTrace, WitnessOverlapAppearsOffDiagonal) {
  // Hand oracle: psi = (e0 (x) w0 + e1 (x) w1) / sqrt2 has
  // rho_A(0,1) = <w1|w0> / 2 = conj(c) / 2 with c = <w0|w1>.
  const Complex c = std::polar(0.6, 0.7);
  const StateVector w0{1.0, 0.0};
  const StateVector w1{c, std::sqrt(1.0 - std::norm(c))};
  ASSERT_NEAR(std::abs(inner(w0, w1) - c), 0.0, 1e-15);

  Eigen::VectorXcd amps(4);
  amps << w0[0], w0[1], w1[0], w1[1];
  const StateVector psi(amps / std::sqrt(2.0));
  const auto reduced = partial_trace(density(psi), 0, {2, 2});
  EXPECT_NEAR(std::abs(reduced(0, 1) - std::conj(c) / 2.0), 0.0, 1e-15);
  EXPECT_NEAR(reduced(0, 0).real(), 0.5, 1e-15);
}

TEST(PartialTrace, MiddleFactorOfThree) {
  Rng rng(5);
  const auto a = density(random_state(2, rng));
  const auto b = density(random_state(3, rng));
  const auto c = density(random_state(2, rng));
  const auto rho = tensor(a, tensor(b, c));
  EXPECT_LE(max_abs_diff(partial_trace(rho, 1, {2, 3, 2}), b), 1e-14);
}

TEST(PartialTrace, PreservesTraceAndHermiticity) {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rho = density(random_state(12, rng));
    for (std::size_t keep = 0; keep < 2; ++keep) {
      const auto r = partial_trace(rho, keep, {3, 4});
      EXPECT_NEAR(std::abs(r.trace() - rho.trace()), 0.0, 1e-12);
      EXPECT_TRUE(r.is_hermitian(1e-12));
    }
  }
}

TEST(PartialTrace, RejectsInconsistentDims) {
  EXPECT_THROW(partial_trace(Operator::identity(4), 0, {2, 3}), DimensionMismatch);
  EXPECT_THROW(partial_trace(Operator::identity(4), 2, {2, 2}), InvalidArgument);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(4, 4);
  m(0, 1) = 1.0;
  EXPECT_THROW(partial_trace(Operator(m), 0, {2, 2}), InvalidArgument);
}

TEST(Refinements, UnitaryAndProjectorChecks) {
  EXPECT_NO_THROW(Unitary(Operator::identity(3)));
  EXPECT_THROW(Unitary(Complex(2.0) * Operator::identity(2)), InvalidArgument);
  EXPECT_NO_THROW(Projector::onto(StateVector{1.0, 1.0}));
  EXPECT_THROW(Projector(Complex(0.5) * Operator::identity(2)), InvalidArgument);
  Eigen::MatrixXcd nonherm(2, 2);
  nonherm << 1, 1, 0, 0;
  EXPECT_THROW(Projector{nonherm}, InvalidArgument);
  EXPECT_THROW(StateVector(Eigen::VectorXcd()), InvalidArgument);
}

TEST(Random, UnitaryIsUnitaryAndStateIsNormalized) {
  Rng rng1(1);
  const auto u = random_unitary(4, rng1);
  const auto d = u.matrix().adjoint() * u.matrix() - Eigen::MatrixXcd::Identity(4, 4);
  EXPECT_LE(d.cwiseAbs().maxCoeff(), 1e-10);

  Rng rng7(7);
  EXPECT_NEAR(random_state(3, rng7).norm(), 1.0, 1e-12);

  EXPECT_THROW(random_state(0, rng7), InvalidArgument);
  EXPECT_THROW(random_unitary(0, rng7), InvalidArgument);
}

TEST(Random, UnitaryPreservesNorm) {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    const std::size_t d = 1 + rng.uniform_index(16);
    const auto u = random_unitary(d, rng);
    const StateVector psi(random_state(d, rng).amps() * 2.5);
    EXPECT_NEAR(apply(u, psi).norm(), psi.norm(), 1e-10);
  }
}

TEST(Random, HaarFirstMoment) {
  // E|<e0|psi>|^2 = 1/d for Haar psi; Monte Carlo standard error ~ 0.0009.
  Rng rng(2024);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += std::norm(random_state(2, rng)[0]);
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(Random, HaarUnitarySecondMoment) {
  // For Haar U in dim d, E|U_00|^4 = 2 / (d (d + 1)). A QR without the
  // phase fix fails this, so it checks the orthonormalization convention.
  Rng rng(77);
  const std::size_t d = 3;
  double sum = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) {
    const auto u = random_unitary(d, rng);
    sum += std::pow(std::norm(u(1, 1)), 2);
  }
  EXPECT_NEAR(sum / n, 2.0 / (d * (d + 1.0)), 0.005);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(123), b(123);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  Rng c(5), d(5);
  const auto uc = random_unitary(5, c);
  const auto ud = random_unitary(5, d);
  EXPECT_EQ(max_abs_diff(uc, ud), 0.0);
}

TEST(Rng, SplitStreamsAreStableAndDistinct) {
  const Rng master(9);
  Rng s0 = master.split(0), s0b = master.split(0), s1 = master.split(1);
  EXPECT_EQ(s0.next_u64(), s0b.next_u64());
  EXPECT_NE(s0.next_u64(), s1.next_u64());
}

TEST(Rng, KnownFirstOutputOfMt19937_64) {
  // std::mt19937_64 default-seed 10000th output is fixed by the standard.
  Rng r(5489);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = r.next_u64();
  EXPECT_EQ(x, 9981545732273789042ULL);
}
