#include <gtest/gtest.h>

#include <random>

#include "celkit/matcore.hpp"

using namespace celkit;

namespace {

CMat random_hermitian(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, 1.0);
  CMat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(d(rng), d(rng));
  return scale * hermitize(a);
}

}  // namespace

TEST(Matcore, WrapPhaseRange) {
  EXPECT_DOUBLE_EQ(wrap_phase(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_phase(-kPi), kPi);
  EXPECT_NEAR(wrap_phase(3 * kPi + 0.1), -kPi + 0.1, 1e-12);
  EXPECT_NEAR(circ_dist(0.1, kTwoPi - 0.1), 0.2, 1e-12);
  EXPECT_NEAR(chord(0.0, kPi), 2.0, 1e-15);
}

TEST(Matcore, ExpLogRoundTrip) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    CMat h = random_hermitian(5, rng);
    const double r = op_norm(h);
    h *= 2.5 / r;  // spectrum inside (-pi, pi)
    const CMat u = mat_exp_i(h);
    EXPECT_LT(unitary_defect(u), 1e-12);
    const CMat back = principal_log_unitary(u, 1e-9);
    EXPECT_LT(op_norm(back - h), 1e-10);
  }
}

TEST(Matcore, ExpAgainstTaylorSeries) {
  std::mt19937_64 rng(11);
  const CMat h = random_hermitian(4, rng, 0.2);
  CMat term = identity(4), sum = identity(4);
  for (int k = 1; k < 40; ++k) {
    term = term * (cplx(0, 1) * h) / static_cast<double>(k);
    sum += term;
  }
  EXPECT_LT(op_norm(mat_exp_i(h) - sum), 1e-13);
}

TEST(Matcore, EigphasesSortedAndReconstruct) {
  std::mt19937_64 rng(3);
  const CMat u = mat_exp_i(random_hermitian(6, rng));
  const UnitaryEig e = unitary_eigphases(u);
  for (Eigen::Index j = 1; j < e.phases.size(); ++j) EXPECT_LE(e.phases(j - 1), e.phases(j));
  EXPECT_LT(op_norm(compose_unitary(e.vectors, e.phases) - u), 1e-12);
}

TEST(Matcore, BranchCutDetected) {
  CMat u = identity(2);
  u(1, 1) = -1.0;
  try {
    principal_log_unitary(u, 1e-9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BranchCutHit);
  }
}

TEST(Matcore, RejectsNonHermitianAndNonUnitary) {
  CMat a = identity(2);
  a(0, 1) = 1.0;
  try {
    herm_eig(a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotHermitian);
  }
  try {
    unitary_eigphases(2.0 * identity(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotUnitary);
  }
}

TEST(Matcore, OpNormMatchesSpectralRadiusForHermitian) {
  std::mt19937_64 rng(5);
  const CMat h = random_hermitian(5, rng);
  const HermEig e = herm_eig(h);
  EXPECT_NEAR(op_norm(h), std::max(std::abs(e.values(0)), std::abs(e.values(4))), 1e-12);
}
