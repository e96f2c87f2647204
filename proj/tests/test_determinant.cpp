#include <gtest/gtest.h>

#include <random>

#include "celkit/determinant.hpp"

using namespace celkit;

namespace {

CMat random_unitary(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  CMat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(d(rng), d(rng));
  Eigen::HouseholderQR<CMat> qr(a);
  return qr.householderQ();
}

// Oracle: Det = (1/2 pi i) int_0^1 tr(u'(t) u(t)^*) dt with central
// differences and composite Simpson quadrature.
double det_quadrature(const std::function<CMat(double)>& u, int panels = 400) {
  const double h = 1e-5;
  auto integrand = [&](double t) {
    const CMat du = (u(t + h) - u(t - h)) / (2.0 * h);
    return (du * u(t).adjoint()).trace() / static_cast<double>(u(t).rows());
  };
  cplx acc = integrand(0.0) + integrand(1.0);
  for (int k = 1; k < panels; ++k) acc += (k % 2 ? 4.0 : 2.0) * integrand(static_cast<double>(k) / panels);
  acc *= 1.0 / (3.0 * panels);
  return (acc / cplx(0.0, kTwoPi)).real();
}

}  // namespace

TEST(Determinant, ScalarLoopIsOne) {
  auto p = UnitaryPath::from_generator(Grid::uniform(257), [](double t) {
    return CMat(identity(4) * std::polar(1.0, kTwoPi * t));
  });
  const auto r = dls_determinant(p);
  EXPECT_NEAR(r.value, 1.0, 1e-12);
  EXPECT_NEAR(r.residue, 0.0, 1e-12);
}

TEST(Determinant, DiagonalWindingsGiveAverage) {
  const std::vector<int> k = {1, 2, -1, 0, 3};
  auto gen = [&](double t) {
    CMat d = CMat::Zero(5, 5);
    for (int j = 0; j < 5; ++j) d(j, j) = std::polar(1.0, kTwoPi * k[j] * t);
    return d;
  };
  const auto r = dls_determinant(UnitaryPath::from_generator(Grid::uniform(513), gen));
  EXPECT_NEAR(r.value, 5.0 / 5.0, 1e-12);
  EXPECT_NEAR(TraceLattice{5}.distance(r.value), 0.0, 1e-12);
}

TEST(Determinant, AgreesWithQuadratureOracle) {
  std::mt19937_64 rng(19);
  const CMat z = random_unitary(4, rng);
  CMat a = CMat::Random(4, 4);
  a = hermitize(a);
  auto gen = [&](double t) -> CMat {
    CMat d = CMat::Zero(4, 4);
    const double ph[4] = {1.3 * t, -0.4 * t, 2.2 * t * t, 0.0};
    for (int j = 0; j < 4; ++j) d(j, j) = std::polar(1.0, ph[j]);
    return z * d * z.adjoint() * mat_exp_i(std::sin(kPi * t) * a);
  };
  const auto r = dls_determinant(UnitaryPath::from_generator(Grid::uniform(1025), gen));
  EXPECT_NEAR(r.value, det_quadrature(gen), 1e-6);
}

TEST(Determinant, BranchCutOnCoarseGrid) {
  auto p = UnitaryPath::from_samples(Grid({0.0, 1.0}), {identity(2), [] {
                                                           CMat m = identity(2);
                                                           m(0, 0) = std::polar(1.0, kPi - 5e-7);
                                                           return m;
                                                         }()});
  try {
    dls_determinant(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BranchCutHit);
  }
}

TEST(Determinant, CuMembership) {
  auto p = UnitaryPath::from_generator(Grid::uniform(65), [](double t) {
    CMat d = CMat::Zero(3, 3);
    d(0, 0) = std::polar(1.0, 2.0 * t);
    d(1, 1) = std::polar(1.0, -t);
    d(2, 2) = std::polar(1.0, -t);
    return d;
  });
  EXPECT_TRUE(cu_membership(p).member);
  auto q = UnitaryPath::from_generator(Grid::uniform(65), [](double t) {
    CMat d = identity(2);
    d(0, 0) = std::polar(1.0, t);
    return d;
  });
  const auto rep = cu_membership(q);
  EXPECT_FALSE(rep.member);
  EXPECT_EQ(rep.worst_index, 64u);
  EXPECT_NEAR(det_winding(q), 1.0 / kTwoPi, 1e-12);
}

TEST(Determinant, RotationNumberEndpointCheck) {
  const CMat u = identity(2);
  CMat v = identity(2);
  v(0, 0) = std::polar(1.0, 1.0);
  const auto g = geodesic_path(u, v, Grid::uniform(33));
  EXPECT_NEAR(rotation_number(u, v, g).value, 1.0 / (2.0 * kTwoPi), 1e-12);
  EXPECT_THROW(rotation_number(v, u, g), Error);
}

TEST(Determinant, TrivIdentityOnRandomTriples) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> d(0.0, 0.3);
  for (int trial = 0; trial < 10; ++trial) {
    const CMat u = random_unitary(4, rng);
    const CMat w = random_unitary(4, rng);
    CMat k(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) k(i, j) = cplx(d(rng), d(rng));
    k = hermitize(k);
    const CMat v = w * u * w.adjoint() * mat_exp_i(k);
    // a path from u to v that does not go through the triple structure
    std::vector<CMat> mids;
    const CMat m = random_unitary(4, rng);
    const auto p1 = geodesic_path(u, m, Grid::uniform(65));
    const auto p2 = geodesic_path(m, v, Grid::uniform(65));
    const auto c = concatenate(p1, p2);
    const auto tc = check_triv_identity(u, v, w, c);
    EXPECT_LT(tc.residual, 1e-9) << "trial " << trial;
  }
}

TEST(Determinant, TrivSignMattersWhenDeterminantsDiffer) {
  // v = w u w* e^{iK} with tr K != 0: only one sign of the log term is a lattice identity
  std::mt19937_64 rng(31);
  const CMat u = random_unitary(3, rng);
  const CMat w = random_unitary(3, rng);
  CMat k = CMat::Zero(3, 3);
  k(0, 0) = 0.4;
  k(1, 1) = 0.1;
  const CMat v = w * u * w.adjoint() * mat_exp_i(k);
  const auto c = concatenate(geodesic_path(u, identity(3), Grid::uniform(65)),
                             geodesic_path(identity(3), v, Grid::uniform(65)));
  const auto tc = check_triv_identity(u, v, w, c);
  EXPECT_LT(tc.residual, 1e-9);
  EXPECT_GT(TraceLattice{3}.distance(tc.rotation - tc.log_term), 1e-3);
}
