#pragma once

// Example paths: the uniexam unitary, the Ex2 family, finite stages of the
// Ex2ml inductive system, and random determinant-one paths.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "celkit/determinant.hpp"
#include "celkit/pathalg.hpp"

namespace celkit {

/// (2 - 1/(n-1)) pi.
inline double uniexam_theta0(int n) {
  if (n < 2) throw Error(ErrorKind::InvalidParams, "n must be >= 2");
  return (2.0 - 1.0 / static_cast<double>(n - 1)) * kPi;
}

inline CMat diagonal_unitary(const std::vector<double>& phases) {
  const auto n = static_cast<Eigen::Index>(phases.size());
  CMat d = CMat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) d(j, j) = std::polar(1.0, phases[static_cast<std::size_t>(j)]);
  return d;
}

inline CMat diagonal_hermitian(const std::vector<double>& values) {
  const auto n = static_cast<Eigen::Index>(values.size());
  CMat d = CMat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) d(j, j) = values[static_cast<std::size_t>(j)];
  return d;
}

// ---------------------------------------------------------------------------
// uniexam

struct UniexamParams {
  int n = 5;
  Grid grid = Grid::uniform();
};

struct Uniexam {
  UnitaryPath u;
  HermitianPath h;       // u = exp(i pi h)
  ExpFactorization F;    // single term pi h
  double theta0 = 0.0;
};

/// h(t) = diag(t c, -t c/(n-1), ..., -t c/(n-1)) with c = 2 - 1/(n-1).
inline std::vector<double> uniexam_h_diagonal(int n, double t) {
  const double c = uniexam_theta0(n) / kPi;
  std::vector<double> d(static_cast<std::size_t>(n), -t * c / static_cast<double>(n - 1));
  d[0] = t * c;
  return d;
}

inline Uniexam gen_uniexam(const UniexamParams& p) {
  const int n = p.n;
  const double theta0 = uniexam_theta0(n);
  auto hgen = [n](double t) { return diagonal_hermitian(uniexam_h_diagonal(n, t)); };
  auto ugen = [n](double t) {
    std::vector<double> d = uniexam_h_diagonal(n, t);
    for (double& x : d) x *= kPi;
    return diagonal_unitary(d);
  };
  auto fgen = [n](double t) {
    std::vector<double> d = uniexam_h_diagonal(n, t);
    for (double& x : d) x *= kPi;
    return diagonal_hermitian(d);
  };
  Uniexam out;
  out.u = UnitaryPath::from_generator(p.grid, ugen);
  out.h = HermitianPath::from_generator(p.grid, hgen);
  out.F = ExpFactorization({HermitianPath::from_generator(p.grid, fgen)});
  out.theta0 = theta0;
  return out;
}

// ---------------------------------------------------------------------------
// Ex2

/// Conjugate pairs e^{+-2 pi i j/(k+1)}, plus 1 when k is odd.
inline std::vector<cplx> default_defect_phases(int k) {
  // odd k: all k-th roots of unity; even k: the nontrivial (k+1)-th roots
  std::vector<cplx> out;
  const int pairs = k / 2;
  const double order = static_cast<double>(k % 2 == 1 ? k : k + 1);
  for (int j = 1; j <= pairs; ++j) {
    const double a = kTwoPi * j / order;
    out.push_back(std::polar(1.0, a));
    out.push_back(std::polar(1.0, -a));
  }
  if (k % 2 == 1) out.emplace_back(1.0, 0.0);
  return out;
}

struct Ex2Params {
  int n = 13;
  int m = 4;
  int k = 0;
  std::optional<std::vector<cplx>> defect_phases;
  Grid grid = Grid::uniform();
};

struct Ex2 {
  UnitaryPath u;
  ExpFactorization F;     // h(t) = diag(t theta0 (x m), -t theta0/(n-1) (x (n-1)m), arg lambda_j)
  int N = 0;
  int rank_p1 = 0;
  int rank_p2 = 0;
  double theta0 = 0.0;
  std::vector<cplx> lambdas;
};

inline Ex2 gen_ex2(const Ex2Params& p) {
  if (p.n < 2 || p.m < 1 || p.k < 0) throw Error(ErrorKind::InvalidParams, "need n >= 2, m >= 1, k >= 0");
  std::vector<cplx> lambdas = p.defect_phases.value_or(default_defect_phases(p.k));
  if (static_cast<int>(lambdas.size()) != p.k) {
    throw Error(ErrorKind::InvalidDefect, "expected " + std::to_string(p.k) + " defect phases");
  }
  cplx prod(1.0, 0.0);
  for (const cplx& l : lambdas) {
    if (std::abs(std::abs(l) - 1.0) > 1e-10) throw Error(ErrorKind::InvalidDefect, "defect phase not unimodular");
    prod *= l;
  }
  if (std::abs(prod - 1.0) > 1e-10) throw Error(ErrorKind::InvalidDefect, "product of defect phases is not 1");

  Ex2 out;
  out.theta0 = uniexam_theta0(p.n);
  out.N = p.m * p.n + p.k;
  out.rank_p1 = p.m;
  out.rank_p2 = (p.n - 1) * p.m;
  out.lambdas = lambdas;
  std::vector<double> defect_args;
  for (const cplx& l : lambdas) defect_args.push_back(std::arg(l));
  const double theta0 = out.theta0;
  const int r1 = out.rank_p1, r2 = out.rank_p2, n = p.n;
  auto hdiag = [=](double t) {
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(r1 + r2) + defect_args.size());
    for (int j = 0; j < r1; ++j) d.push_back(t * theta0);
    for (int j = 0; j < r2; ++j) d.push_back(-t * theta0 / static_cast<double>(n - 1));
    d.insert(d.end(), defect_args.begin(), defect_args.end());
    return d;
  };
  out.u = UnitaryPath::from_generator(p.grid, [hdiag](double t) { return diagonal_unitary(hdiag(t)); });
  out.F = ExpFactorization(
      {HermitianPath::from_generator(p.grid, [hdiag](double t) { return diagonal_hermitian(hdiag(t)); })});
  return out;
}

// ---------------------------------------------------------------------------
// Inductive system

/// Single-summand connecting map at stage k: f -> diag(f x (M-k), f(t(1,k)), ..., f(t(k,k))).
struct InductiveStage {
  int k = 1;
  std::vector<int> source_dims;
  std::vector<int> target_dims;
  std::vector<std::vector<int>> multiplicities;  // [j][i]
  std::vector<double> partition;                 // t(i,k) = i/(k+1), i = 0..k

  static InductiveStage single(int k, int multiplicity, int source_dim) {
    if (k < 0) throw Error(ErrorKind::InvalidParams, "stage index must be >= 0");
    InductiveStage s;
    s.k = k;
    s.source_dims = {source_dim};
    s.target_dims = {multiplicity * source_dim};
    s.multiplicities = {{multiplicity}};
    for (int i = 0; i <= k; ++i) s.partition.push_back(static_cast<double>(i) / static_cast<double>(k + 1));
    return s;
  }

  double t(int i) const { return partition.at(static_cast<std::size_t>(i)); }
};

inline UnitaryPath inductive_step(const UnitaryPath& f, const InductiveStage& stage, std::size_t j = 0,
                                  std::size_t i = 0) {
  const int mult = stage.multiplicities.at(j).at(i);
  const int k = stage.k;
  if (mult < k) {
    throw Error(ErrorKind::InsufficientMultiplicity,
                "multiplicity " + std::to_string(mult) + " < " + std::to_string(k) + " point evaluations");
  }
  const Eigen::Index r = f.n();
  std::vector<CMat> frozen;
  for (int q = 1; q <= k; ++q) frozen.push_back(f.at(stage.t(q)));
  auto assemble = [=](const CMat& moving) {
    CMat out = CMat::Zero(r * mult, r * mult);
    Eigen::Index off = 0;
    for (int c = 0; c < mult - k; ++c, off += r) out.block(off, off, r, r) = moving;
    for (const CMat& fz : frozen) {
      out.block(off, off, r, r) = fz;
      off += r;
    }
    return out;
  };
  std::vector<CMat> samples;
  samples.reserve(f.size());
  for (const CMat& s : f.samples()) samples.push_back(assemble(s));
  MatrixFn gen;
  if (f.has_generator()) gen = [g = f.generator(), assemble](double t) -> CMat { return assemble(g(t)); };
  return UnitaryPath::from_parts(f.grid(), std::move(samples), std::move(gen));
}

/// Seed block u_j(t) = e^{i theta0 t} p1 + e^{-i theta0 t/(n-1)} p2 + p3 with
/// rank p1 = d, rank p2 = (n-1) d, rank p3 = k.
inline std::vector<double> ex2ml_block_phases(int n, int d, int k, double t) {
  const double theta0 = uniexam_theta0(n);
  std::vector<double> ph;
  ph.reserve(static_cast<std::size_t>(d * n + k));
  for (int a = 0; a < d; ++a) ph.push_back(theta0 * t);
  for (int a = 0; a < (n - 1) * d; ++a) ph.push_back(-theta0 * t / static_cast<double>(n - 1));
  for (int a = 0; a < k; ++a) ph.push_back(0.0);
  return ph;
}

/// Symbolic stage image: a multiset of seed blocks, each either moving
/// (evaluated at t) or frozen at a point tau.
struct StageImage {
  // (seed index, moving?, tau) -> multiplicity; tau = -1 for moving blocks
  std::map<std::tuple<int, bool, double>, long> entries;

  void add(int seed, bool moving, double tau, long count) {
    entries[{seed, moving, moving ? -1.0 : tau}] += count;
  }

  /// Image under one connecting map with multiplicity M at stage k.
  StageImage step(int k, int M) const {
    StageImage out;
    for (const auto& [key, c] : entries) {
      const auto& [seed, moving, tau] = key;
      if (moving) {
        out.add(seed, true, 0.0, c * (M - k));
        for (int q = 1; q <= k; ++q) out.add(seed, false, static_cast<double>(q) / (k + 1), c);
      } else {
        out.add(seed, false, tau, c * M);
      }
    }
    return out;
  }
};

struct Ex2mlStage {
  int n = 0;
  std::vector<int> d;
  std::vector<int> k;
  int stages = 0;
  std::vector<int> schedule;       // M used at step s (s = 1..stages)
  StageImage image;
  long dim = 0;
  long rank_p1 = 0;                // moving e^{i theta0 t} part
  long rank_p2 = 0;                // moving e^{-i theta0 t/(n-1)} part
  long rank_defect = 0;            // identity parts of moving blocks plus frozen blocks
  long frozen_blocks = 0;
  std::optional<UnitaryPath> dense;

  long seed_dim(std::size_t j) const { return static_cast<long>(d[j]) * n + k[j]; }

  /// Eigenphases (with multiplicity) of the stage image at t.
  std::vector<double> phases(double t) const {
    std::vector<double> out;
    for (const auto& [key, c] : image.entries) {
      const auto& [seed, moving, tau] = key;
      const auto ph = ex2ml_block_phases(n, d[static_cast<std::size_t>(seed)], k[static_cast<std::size_t>(seed)],
                                         moving ? t : tau);
      for (long r = 0; r < c; ++r) out.insert(out.end(), ph.begin(), ph.end());
    }
    return out;
  }

  /// Normalized trace of the stage image at t from the symbolic entries.
  cplx normalized_trace_at(double t) const {
    cplx acc(0.0, 0.0);
    for (double p : phases(t)) acc += std::polar(1.0, p);
    return acc / static_cast<double>(dim);
  }

  /// Normalized trace of the seed direct sum w at t.
  cplx seed_trace(double t) const {
    cplx acc(0.0, 0.0);
    long total = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      for (double p : ex2ml_block_phases(n, d[j], k[j], t)) acc += std::polar(1.0, p);
      total += seed_dim(j);
    }
    return acc / static_cast<double>(total);
  }

  /// Same trace via the per-step mixing recursion
  /// tr(psi f)(t) = ((M-k) tr f(t) + sum_i tr f(t(i,k))) / M.
  cplx recursive_trace(double t) const { return recursive_trace_impl(t, stages); }

 private:
  cplx recursive_trace_impl(double t, int s) const {
    if (s == 0) return seed_trace(t);
    const int kk = s;
    const int M = schedule[static_cast<std::size_t>(s - 1)];
    cplx acc = static_cast<double>(M - kk) * recursive_trace_impl(t, s - 1);
    for (int q = 1; q <= kk; ++q) acc += recursive_trace_impl(static_cast<double>(q) / (kk + 1), s - 1);
    return acc / static_cast<double>(M);
  }
};

inline int ex2ml_default_multiplicity(int step) { return 2 * step + 3; }

inline UnitaryPath materialize(const Ex2mlStage& st, const Grid& grid) {
  return UnitaryPath::from_generator(grid, [st](double t) { return diagonal_unitary(st.phases(t)); });
}

/// Stage `stages` image of w = u_1 + ... + u_m under the connecting maps
/// psi_1, ..., psi_stages (step s uses k = s point evaluations).
inline Ex2mlStage gen_ex2ml_stage(int n, const std::vector<int>& d, std::optional<std::vector<int>> k, int stages,
                                  const Grid& grid = Grid::uniform(), long dense_limit = 300) {
  if (n < 2) throw Error(ErrorKind::InvalidParams, "n must be >= 2");
  if (d.empty()) throw Error(ErrorKind::InvalidParams, "at least one seed block");
  for (int x : d) {
    if (x < 1) throw Error(ErrorKind::InvalidParams, "block sizes d(j) must be >= 1");
  }
  if (stages < 0) throw Error(ErrorKind::InvalidParams, "stages must be >= 0");
  Ex2mlStage st;
  st.n = n;
  st.d = d;
  st.k = k.value_or(std::vector<int>(d.size(), 0));
  if (st.k.size() != d.size()) throw Error(ErrorKind::InvalidParams, "k list length must match d list");
  for (int x : st.k) {
    if (x < 0 || x >= n) throw Error(ErrorKind::InvalidParams, "k(j) must lie in [0, n)");
  }
  st.stages = stages;
  for (std::size_t j = 0; j < d.size(); ++j) st.image.add(static_cast<int>(j), true, 0.0, 1);
  for (int s = 1; s <= stages; ++s) {
    const int M = ex2ml_default_multiplicity(s);
    st.schedule.push_back(M);
    st.image = st.image.step(s, M);
  }
  for (const auto& [key, c] : st.image.entries) {
    const auto& [seed, moving, tau] = key;
    const auto j = static_cast<std::size_t>(seed);
    st.dim += c * st.seed_dim(j);
    if (moving) {
      st.rank_p1 += c * d[j];
      st.rank_p2 += c * (n - 1) * d[j];
      st.rank_defect += c * st.k[j];
    } else {
      st.rank_defect += c * st.seed_dim(j);
      st.frozen_blocks += c;
    }
  }
  if (st.dim <= dense_limit) st.dense = materialize(st, grid);
  return st;
}

// ---------------------------------------------------------------------------
// Random paths

inline CMat random_unitary(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<CMat> qr(a);
  CMat q = qr.householderQ();
  const CMat r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

/// Traceless Hermitian matrix with operator norm `norm`.
inline CMat random_traceless_hermitian(Eigen::Index n, std::mt19937_64& rng, double norm) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  a = hermitize(a);
  a -= normalized_trace(a) * identity(n);
  return a * (norm / op_norm(a));
}

/// t -> exp(i A1 phi1(t)) exp(i A2 phi2(t)) with traceless Hermitian A1, A2,
/// phi1(t) = t, phi2(t) = sin(pi t / 2)^2; det is identically 1.
inline UnitaryPath gen_random_detone(Eigen::Index n, std::uint64_t seed, const Grid& grid = Grid::uniform(),
                                     double norm = 2.0) {
  std::mt19937_64 rng(seed);
  const CMat a1 = random_traceless_hermitian(n, rng, norm);
  const CMat a2 = random_traceless_hermitian(n, rng, 0.5 * norm);
  const HermEig e1 = herm_eig(a1), e2 = herm_eig(a2);
  return UnitaryPath::from_generator(grid, [e1, e2](double t) {
    const double s = std::sin(0.5 * kPi * t);
    return CMat(compose_unitary(e1.vectors, t * e1.values) * compose_unitary(e2.vectors, s * s * e2.values));
  });
}

/// Closed loop Z diag(e^{2 pi i k_j t}) Z* exp(i A sin(pi t)) based at the identity.
inline UnitaryPath gen_random_loop(Eigen::Index n, std::uint64_t seed, const Grid& grid = Grid::uniform(),
                                   int max_winding = 2) {
  std::mt19937_64 rng(seed);
  const CMat z = random_unitary(n, rng);
  std::uniform_int_distribution<int> w(-max_winding, max_winding);
  std::vector<int> ks(static_cast<std::size_t>(n));
  for (int& x : ks) x = w(rng);
  std::normal_distribution<double> g(0.0, 0.5);
  CMat a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
  const HermEig ea = herm_eig(hermitize(a));
  return UnitaryPath::from_generator(grid, [z, ks, ea](double t) {
    std::vector<double> ph;
    for (int x : ks) ph.push_back(kTwoPi * x * t);
    return CMat(z * diagonal_unitary(ph) * z.adjoint() * compose_unitary(ea.vectors, std::sin(kPi * t) * ea.values));
  });
}

}  // namespace celkit
