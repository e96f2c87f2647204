#include <gtest/gtest.h>

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

void expect_selection_invariants(const BranchSelection& s) {
  EXPECT_NEAR(s.sum(), 0.0, 1e-12);
  for (double a : s.a) EXPECT_LT(std::abs(a), 1.0);
  EXPECT_LT(s.spread(), 1.0);
}

}  // namespace

TEST(BranchSelect, ZeroSumUnchanged) {
  const auto s = branch_select_zero_sum({1.0 / 3, -1.0 / 3, 0.0});
  EXPECT_EQ(s.k, 0);
  EXPECT_TRUE(s.shifted_indices.empty());
  EXPECT_DOUBLE_EQ(s.a[0], 1.0 / 3);
  expect_selection_invariants(s);
}

TEST(BranchSelect, PositiveSumLowersLargest) {
  const auto s = branch_select_zero_sum({0.5, 0.4, 0.1});
  EXPECT_EQ(s.k, 1);
  EXPECT_DOUBLE_EQ(s.a[0], -0.5);
  EXPECT_DOUBLE_EQ(s.a[1], 0.4);
  EXPECT_DOUBLE_EQ(s.a[2], 0.1);
  EXPECT_NEAR(s.spread(), 0.9, 1e-15);
  expect_selection_invariants(s);
}

TEST(BranchSelect, NegativeSumRaisesSmallest) {
  const auto s = branch_select_zero_sum({-0.45, -0.35, -0.2});
  EXPECT_EQ(s.k, -1);
  EXPECT_NEAR(s.a[0], 0.55, 1e-15);
  EXPECT_DOUBLE_EQ(s.a[1], -0.35);
  EXPECT_EQ(s.shifted_indices.count(0), 1u);
  expect_selection_invariants(s);
}

TEST(BranchSelect, Errors) {
  EXPECT_EQ(kind_of([] { branch_select_zero_sum({0.1, 0.2}); }), ErrorKind::NonIntegerSum);
  EXPECT_EQ(kind_of([] { branch_select_zero_sum({0.25, 0.25, -0.5 + 1e-3}); }), ErrorKind::NonIntegerSum);
  EXPECT_EQ(kind_of([] { branch_select_zero_sum({0.25, 0.25, -0.5}); }), ErrorKind::InvalidParams);
  EXPECT_EQ(kind_of([] { branch_select_zero_sum({0.3, 0.3, 0.4}); }), ErrorKind::DuplicateEntries);
}

TEST(BranchSelect, RandomIntegerSumsKeepInvariants) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 7;
    std::vector<double> b(static_cast<std::size_t>(n));
    double s = 0.0;
    for (int j = 0; j + 1 < n; ++j) {
      b[j] = u(rng);
      s += b[j];
    }
    // choose the last entry so that the sum is an integer and it lies in (-1/2, 1/2]
    double last = std::round(s) - s;
    if (last <= -0.5) last += 1.0;
    b[n - 1] = last;
    const auto sel = branch_select_zero_sum(b);
    expect_selection_invariants(sel);
  }
}

TEST(LogPath, ConstantDiagonal) {
  const CMat u = diagonal_unitary({kTwoPi / 3, -kTwoPi / 3, 0.0});
  const auto lp = trace_zero_log_path(constant_path(u, Grid::uniform(17)), 1e-6);
  EXPECT_FALSE(lp.perturbation_applied);
  EXPECT_LT(op_norm(lp.h[0] - diagonal_hermitian({1.0 / 3, -1.0 / 3, 0.0})), 1e-12);
  EXPECT_NEAR(lp.sup_norm, 1.0 / 3, 1e-12);
  EXPECT_LT(lp.max_trace, 1e-12);
}

TEST(LogPath, UniexamMatchesHalfOfH) {
  const int n = 5;
  const auto ex = gen_uniexam({n, Grid::uniform(257)});
  const double eps = 1e-6;
  const auto lp = trace_zero_log_path(ex.u, eps);
  EXPECT_TRUE(lp.perturbation_applied);
  for (std::size_t i = 0; i < ex.u.size(); ++i) {
    EXPECT_LT(op_norm(lp.h[i] - 0.5 * ex.h[i]), eps) << "i=" << i;
  }
  EXPECT_NEAR(lp.sup_norm, (2.0 - 1.0 / (n - 1)) / 2.0, eps);
  EXPECT_LT(lp.approx_error, eps);
  const auto rep = verify_log_certificate(ex.u, lp.h, eps);
  EXPECT_TRUE(rep.ok);
  EXPECT_NEAR(rep.certified_length_bound, 1.75 * kPi, 1e-5);
}

TEST(LogPath, RandomDetOneCorpus) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto p = gen_random_detone(4 + static_cast<Eigen::Index>(seed % 3), seed, Grid::uniform(257));
    const double eps = 1e-6;
    const auto lp = trace_zero_log_path(p, eps);
    const auto rep = verify_log_certificate(p, lp.h, eps);
    EXPECT_TRUE(rep.ok) << "seed " << seed << " violations " << rep.violations.size();
    EXPECT_LT(rep.sup_norm, 1.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_LT(op_norm(mat_exp_i(kTwoPi * lp.h[i]) - lp.u1[i]), 1e-10);
      double s = 0.0;
      for (const auto& l : lp.lifts) s += l[i];
      EXPECT_NEAR(s, 0.0, 1e-10);
    }
  }
}

TEST(LogPath, NearIdentityStart) {
  const auto p = constant_path(identity(3), Grid::uniform(9));
  const double eps = 1e-5;
  const auto lp = trace_zero_log_path(p, eps);
  EXPECT_TRUE(lp.perturbation_applied);
  EXPECT_LT(op_norm(lp.h[0]), eps);
  EXPECT_LT(lp.max_trace, 1e-12);
}

TEST(LogPath, RejectsNonDetOne) {
  const auto p = UnitaryPath::from_generator(Grid::uniform(9), [](double t) {
    return diagonal_unitary({t, 0.0});
  });
  EXPECT_EQ(kind_of([&] { trace_zero_log_path(p, 1e-6); }), ErrorKind::NotDetOne);
}

TEST(LogCertificate, FlagsInjectedTrace) {
  const auto p = gen_random_detone(3, 5, Grid::uniform(65));
  auto lp = trace_zero_log_path(p, 1e-6);
  std::vector<CMat> hs = lp.h.samples();
  hs[10] += 0.01 / 3.0 * identity(3);
  const auto bad = HermitianPath::from_samples(p.grid(), hs);
  const auto rep = verify_log_certificate(p, bad, 1e-6);
  EXPECT_FALSE(rep.ok);
  bool found = false;
  for (const auto& v : rep.violations) found = found || (v.kind == "trace" && v.index == 10);
  EXPECT_TRUE(found);
}
