#include <gtest/gtest.h>

#include "celkit/celcert.hpp"
#include "celkit/generators.hpp"
#include "celkit/logfactory.hpp"

using namespace celkit;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no exception";
  return ErrorKind::IoError;
}

}  // namespace

TEST(CoveringArc, WrapsAroundPi) {
  const Arc a = covering_arc({kPi - 0.1, -kPi + 0.2});
  EXPECT_NEAR(a.halfwidth, 0.15, 1e-12);
  EXPECT_TRUE(a.contains(kPi));
  EXPECT_FALSE(a.contains(0.0));
}

TEST(BandSeparation, ConstantDiagonal) {
  const auto p = constant_path(diagonal_unitary({0.3, -2.0}), Grid::uniform(9));
  const auto b = band_separation(p, 0.0, 1.0, {Arc{-2.0, 1e-9}}, 0.1);
  EXPECT_NEAR(b.g.front(), 0.3, 1e-12);
  EXPECT_NEAR(b.gap, 2.3 - 1e-9, 1e-9);
}

TEST(BandSeparation, UniexamSliceWithPerPointArcs) {
  const auto ex = gen_uniexam({5, Grid::uniform(251)});
  const auto first = *ex.u.grid().find(0.2, 1e-9);
  const auto last = *ex.u.grid().find(0.9, 1e-9);
  std::vector<Arc> arcs;
  for (std::size_t i = first; i <= last; ++i) arcs.push_back({-ex.theta0 * ex.u.grid()[i] / 4, 1e-9});
  const auto b = band_separation(ex.u, 0.2, ex.u.grid()[last], arcs, 0.05);
  EXPECT_GT(b.gap, 0.05);
  for (std::size_t i = 0; i < b.g.size(); ++i) {
    EXPECT_NEAR(b.g[i], ex.theta0 * ex.u.grid()[first + i], 1e-9);
  }
  EXPECT_TRUE(b.covers(kPi));
}

TEST(BandSeparation, NegativeControls) {
  const auto ex = gen_uniexam({5, Grid::uniform(251)});
  // a fixed arc around the cluster phase at t = 0.5 loses the cluster later
  EXPECT_EQ(kind_of([&] { band_separation(ex.u, 0.2, 0.8, {Arc{-ex.theta0 * 0.5 / 4, 0.02}}, 0.05); }),
            ErrorKind::RankNotOne);
  // rest eigenvalue inside the band corridor
  const auto p = constant_path(diagonal_unitary({0.3, 0.32}), Grid::uniform(5));
  EXPECT_EQ(kind_of([&] { band_separation(p, 0.0, 1.0, {Arc{0.32, 1e-9}}, 0.1); }), ErrorKind::GapViolated);
}

TEST(CelCertificate, UniexamFiveMeetsBound) {
  const auto ex = gen_uniexam({5, Grid::uniform(257)});
  const auto cert = certify_length_lower_bound(ex.F, 0.02, 0.1);
  EXPECT_GE(cert.lower_bound, 1.75 * kPi - 0.1);
  EXPECT_LE(cert.lower_bound, 1.75 * kPi + 1e-9);
  const auto v = verify_cel_certificate(cert);
  EXPECT_TRUE(v.ok) << (v.problems.empty() ? "" : v.problems.front());
  EXPECT_NEAR(v.recomputed_bound, cert.lower_bound, 1e-12);
}

TEST(CelCertificate, UniexamTwo) {
  const auto ex = gen_uniexam({2, Grid::uniform(257)});
  const auto cert = certify_length_lower_bound(ex.F, std::nullopt, 0.1);
  EXPECT_GE(cert.lower_bound, kPi - 0.1);
  EXPECT_TRUE(verify_cel_certificate(cert).ok);
}

TEST(CelCertificate, IdentityFactorizationGivesZero) {
  const Grid g = Grid::uniform(17);
  ExpFactorization f({HermitianPath::from_generator(g, [](double) { return CMat(CMat::Zero(3, 3)); })});
  const auto cert = certify_length_lower_bound(f, 0.01, 0.1);
  EXPECT_EQ(cert.lower_bound, 0.0);
  EXPECT_TRUE(cert.band_lost);
}

TEST(CelCertificate, TamperedCertificateRejected) {
  const auto ex = gen_uniexam({3, Grid::uniform(129)});
  auto cert = certify_length_lower_bound(ex.F, 0.05, 0.2);
  ASSERT_TRUE(verify_cel_certificate(cert).ok);
  auto bad = cert;
  bad.lower_bound += 0.01;
  EXPECT_FALSE(verify_cel_certificate(bad).ok);
  bad = cert;
  bad.stages[3].increment *= 3.0;
  EXPECT_FALSE(verify_cel_certificate(bad).ok);
}

TEST(CelCertificate, MonotoneUnderFinerSteps) {
  const auto ex = gen_uniexam({4, Grid::uniform(257)});
  const auto a = certify_length_lower_bound(ex.F, 0.08, 0.2);
  const auto b = certify_length_lower_bound(ex.F, 0.04, 0.2);
  EXPECT_GE(b.lower_bound, a.lower_bound - 1e-6);
}

TEST(TraceWindow, DetOneLogGivesZero) {
  const auto p = gen_random_detone(4, 3, Grid::uniform(65));
  const auto lp = trace_zero_log_path(p, 1e-8);
  std::vector<CMat> hs;
  for (const auto& s : lp.h.samples()) hs.push_back(kTwoPi * s);
  const auto w = winding_trace_window(p, HermitianPath::from_samples(p.grid(), hs), 1e-6);
  ASSERT_TRUE(w.L.has_value());
  EXPECT_EQ(*w.L, 0);
}

TEST(TraceWindow, Ex2NaturalLogAndBump) {
  const auto ex = gen_ex2({13, 4, 0, std::nullopt, Grid::uniform(65)});
  const auto w = winding_trace_window(ex.u, ex.F.terms.front(), 1e-9);
  ASSERT_TRUE(w.L.has_value());
  EXPECT_EQ(*w.L, 0);
  std::vector<CMat> hs = ex.F.terms.front().samples();
  for (auto& s : hs) s(0, 0) += kTwoPi;
  const auto w1 = winding_trace_window(ex.u, HermitianPath::from_samples(ex.u.grid(), hs), 1e-9);
  ASSERT_TRUE(w1.L.has_value());
  EXPECT_EQ(*w1.L, 1);
}

TEST(TraceWindow, JumpInTraceHasNoConsistentL) {
  const auto ex = gen_ex2({13, 4, 0, std::nullopt, Grid::uniform(17)});
  std::vector<CMat> hs = ex.F.terms.front().samples();
  for (std::size_t i = 9; i < hs.size(); ++i) hs[i](0, 0) += kTwoPi;
  EXPECT_EQ(kind_of([&] { winding_trace_window(ex.u, HermitianPath::from_samples(ex.u.grid(), hs), 1e-9); }),
            ErrorKind::NoConsistentL);
}

TEST(Obstruction, NaturalLogViolatesNormHypothesis) {
  const auto ex = gen_ex2({13, 4, 0, std::nullopt, Grid::uniform(65)});
  EXPECT_EQ(kind_of([&] { obstruction_check(ex.u, ex.F.terms.front(), {13, 4, 0, 0.1, std::nullopt}, 1e-6); }),
            ErrorKind::InvalidParams);
}

TEST(Obstruction, WindowsAndThreshold) {
  const auto ex = gen_ex2({13, 4, 0, std::nullopt, Grid::uniform(65)});
  const ObstructionParams p{13, 4, 0, 0.1, std::nullopt};
  const auto rep = obstruction_windows(ex.u, p, 1e-3);
  EXPECT_EQ(rep.verdict, Verdict::Contradiction);
  ASSERT_EQ(rep.windows.size(), 2u);
  EXPECT_EQ(rep.windows[0].feasible_L, std::vector<long>{-4});
  EXPECT_EQ(rep.windows[1].feasible_L, std::vector<long>{0});
  EXPECT_EQ(rep.windows[0].a1, 4);
  EXPECT_EQ(rep.windows[0].a2, 48);
  EXPECT_EQ(rep.worstcase_verdict, "inconclusive (m below m0)");
  const double th = obstruction_threshold(ex.u, p);
  // the cluster lift -theta0/12 + 2 pi sits pi/144 above the cap at t = 1
  EXPECT_NEAR(th, 2.0 * std::sin(kPi / 288.0), 1e-5);
  EXPECT_NE(obstruction_windows(ex.u, p, th + 1e-3).verdict, Verdict::Contradiction);
}

TEST(Obstruction, DefectBlockWidensWindows) {
  // k0 = 12 defect eigenvalues each admit two lifts within the cap, so the
  // windows widen by up to 12 integers; with m = 4 they overlap
  const auto small = gen_ex2({13, 4, 12, std::nullopt, Grid::uniform(5)});
  const auto rs = obstruction_windows(small.u, {13, 4, 12, 0.1, std::nullopt}, 1e-4);
  EXPECT_EQ(rs.N, 64);
  EXPECT_NE(rs.verdict, Verdict::Contradiction);
  const auto k0 = gen_ex2({13, 4, 0, std::nullopt, Grid::uniform(5)});
  const auto r0 = obstruction_windows(k0.u, {13, 4, 0, 0.1, std::nullopt}, 1e-4);
  EXPECT_GT(rs.windows[0].feasible_L.size(), r0.windows[0].feasible_L.size());
  // with m large against 2 k0 the windows separate again
  const auto big = gen_ex2({13, 30, 12, std::nullopt, Grid::uniform(5)});
  const auto rb = obstruction_windows(big.u, {13, 30, 12, 0.1, std::nullopt}, 1e-4);
  EXPECT_EQ(rb.N, 402);
  EXPECT_EQ(rb.verdict, Verdict::Contradiction);
}

TEST(BestApprox, FeasibleTarget) {
  const auto p = gen_random_detone(3, 11, Grid::uniform(65), 1.0);
  const auto r = best_exp_approx(p, 3.0, 2000, 1);
  EXPECT_LE(r.residual, 1e-6);
}

TEST(BestApprox, ScalarClosedForm) {
  const double theta = 2.5, cap = 2.0;
  const auto p = constant_path(diagonal_unitary({theta}), Grid::uniform(9));
  const auto r = best_exp_approx(p, cap, 5000, 2);
  EXPECT_NEAR(r.residual, 2.0 * std::sin((theta - cap) / 2.0), 1e-6);
  for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1]);
}

TEST(BestApprox, UniexamNaturalLogFeasible) {
  const auto ex = gen_uniexam({5, Grid::uniform(129)});
  const auto r = best_exp_approx(ex.u, 1.75 * kPi, 2000, 3);
  EXPECT_LE(r.residual, 1e-4);
}

TEST(BestApprox, Deterministic) {
  const auto ex = gen_ex2({5, 1, 0, std::nullopt, Grid::uniform(33)});
  const auto a = best_exp_approx(ex.u, 5.0, 800, 9);
  const auto b = best_exp_approx(ex.u, 5.0, 800, 9);
  EXPECT_EQ(a.residual, b.residual);
}
