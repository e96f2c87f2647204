#pragma once

// Lower bounds for exponential length: band separation along homotopy
// slices, the stage-wise length certificate, trace windows for the Ex2
// obstruction, and a heuristic best-approximation oracle.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "celkit/generators.hpp"
#include "celkit/pathalg.hpp"
#include "celkit/spectral.hpp"

namespace celkit {

/// Closed arc {e^{is} : |s - center| <= halfwidth}.
struct Arc {
  double center = 0.0;
  double halfwidth = 0.0;

  bool contains(double phase, double slack = 0.0) const { return circ_dist(phase, center) <= halfwidth + slack; }
  /// Circular distance from `phase` to the arc (0 inside).
  double distance(double phase) const { return std::max(0.0, circ_dist(phase, center) - halfwidth); }
};

/// Smallest arc containing all `phases` (empty input gives a degenerate arc).
inline Arc covering_arc(std::vector<double> phases) {
  if (phases.empty()) return {0.0, -1.0};
  for (double& p : phases) p = wrap_phase(p);
  std::sort(phases.begin(), phases.end());
  const std::size_t m = phases.size();
  // the arc is the complement of the largest empty gap
  double best_gap = phases.front() + kTwoPi - phases.back();
  std::size_t after = 0;  // arc starts at phases[after]
  for (std::size_t i = 1; i < m; ++i) {
    const double g = phases[i] - phases[i - 1];
    if (g > best_gap) {
      best_gap = g;
      after = i;
    }
  }
  const double start = phases[after];
  const double width = kTwoPi - best_gap;
  return {wrap_phase(start + 0.5 * width), 0.5 * width};
}

// ---------------------------------------------------------------------------
// Band separation

struct BandDecomposition {
  double c = 0.0;
  double d = 0.0;
  std::size_t first = 0;          // grid indices of [c, d]
  std::size_t last = 0;
  std::vector<double> g;          // band lift on first..last
  std::vector<Arc> rest;          // arc holding the other eigenphases, per point
  double gap = 0.0;               // min distance band to rest arc
  double g_min = 0.0;
  double g_max = 0.0;

  /// Arc swept by the band: by continuity every angle between g_min and
  /// g_max is an eigenphase at some t in [c, d].
  std::pair<double, double> coverage() const { return {g_min, g_max}; }
  bool covers(double angle) const {
    const double k = std::ceil((g_min - angle) / kTwoPi);
    return angle + k * kTwoPi <= g_max;
  }
};

namespace detail {

inline BandDecomposition band_from_eigs(const Grid& grid, const std::vector<UnitaryEig>& eigs, std::size_t first,
                                        std::size_t last, const std::vector<Arc>& arcs, double min_gap) {
  BandDecomposition out;
  out.first = first;
  out.last = last;
  out.c = grid[first];
  out.d = grid[last];
  out.gap = std::numeric_limits<double>::infinity();
  double lift = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const Arc& arc = arcs.size() == 1 ? arcs.front() : arcs[i - first];
    const RVec& ph = eigs[i].phases;
    int outside = 0;
    double band = 0.0;
    for (Eigen::Index j = 0; j < ph.size(); ++j) {
      if (!arc.contains(ph(j), 1e-12)) {
        ++outside;
        band = ph(j);
      }
    }
    if (outside != 1) {
      throw Error(ErrorKind::RankNotOne, std::to_string(outside) + " eigenphases outside the rest arc at t=" +
                                             std::to_string(grid[i]));
    }
    const double gap = arc.distance(band);
    if (gap < min_gap) {
      throw Error(ErrorKind::GapViolated, "gap " + std::to_string(gap) + " at t=" + std::to_string(grid[i]));
    }
    out.gap = std::min(out.gap, gap);
    if (i == first) {
      lift = band;
    } else {
      const double step = wrap_phase(band - lift);
      if (std::abs(step) >= 0.5 * min_gap) {
        throw Error(ErrorKind::GapViolated, "band moves " + std::to_string(step) + " at t=" + std::to_string(grid[i]));
      }
      lift += step;
    }
    out.g.push_back(lift);
    out.rest.push_back(arc);
  }
  out.g_min = *std::min_element(out.g.begin(), out.g.end());
  out.g_max = *std::max_element(out.g.begin(), out.g.end());
  return out;
}

inline std::vector<UnitaryEig> eig_range(const UnitaryPath& p, std::size_t first, std::size_t last) {
  std::vector<UnitaryEig> out(p.size());
  for (std::size_t i = first; i <= last; ++i) out[i] = unitary_eigphases(p[i]);
  return out;
}

}  // namespace detail

/// Splits the spectrum of the slice on [c, d] into one isolated eigenvalue
/// and the rest.  `rest` is either a single arc or one arc per grid point of
/// [c, d].
inline BandDecomposition band_separation(const UnitaryPath& slice, double c, double d, const std::vector<Arc>& rest,
                                         double min_gap) {
  const auto first = slice.grid().find(c, 1e-9);
  const auto last = slice.grid().find(d, 1e-9);
  if (!first || !last || *first > *last) throw Error(ErrorKind::InvalidParams, "t-interval endpoints must be grid points");
  if (rest.empty() || (rest.size() != 1 && rest.size() != *last - *first + 1)) {
    throw Error(ErrorKind::InvalidParams, "need one rest arc or one per grid point");
  }
  return detail::band_from_eigs(slice.grid(), detail::eig_range(slice, *first, *last), *first, *last, rest, min_gap);
}

// ---------------------------------------------------------------------------
// Length certificate

struct CelStage {
  double s = 0.0;
  std::size_t first = 0;    // band interval (grid indices)
  std::size_t last = 0;
  double g_start = 0.0;     // band phase at the anchor point
  double g_min = 0.0;
  double g_max = 0.0;
  double g_absmax = 0.0;    // max |wrap(g)| over the band interval
  double gap = 0.0;
  double increment = 0.0;   // measured length from the previous stage
  double accumulated = 0.0; // L_j
  double remaining = 0.0;   // R_j
  bool pi_reached = false;
};

struct CelCertificate {
  Eigen::Index n = 0;
  std::size_t grid_size = 0;
  double eps = 0.0;
  double step_d = 0.0;
  double lipschitz = 0.0;   // r = total norm of the factorization
  double ds = 0.0;
  int substeps = 4;
  double min_gap = 0.0;
  std::size_t anchor = 0;   // grid index used to follow the band across stages
  std::vector<CelStage> stages;
  double lower_bound = 0.0;
  std::size_t best_stage = 0;
  std::string terminal_reason;
  bool band_lost = false;
};

struct CelOptions {
  int substeps = 4;
  double gap_factor = 2.5;  // min_gap = gap_factor * step_d
  bool strict = false;      // throw BandLost instead of returning a partial bound
};

namespace detail {

/// Cached eigendata of each factor so that W(t, s) is cheap for many s.
class FactorCache {
 public:
  explicit FactorCache(const ExpFactorization& f) : n_(f.n()), m_(f.grid().size()) {
    for (const auto& term : f.terms) {
      std::vector<HermEig> col;
      col.reserve(m_);
      for (std::size_t i = 0; i < m_; ++i) col.push_back(herm_eig(term[i], 1e-6));
      eig_.push_back(std::move(col));
    }
  }

  CMat value(std::size_t ti, double s) const {
    CMat out = identity(n_);
    for (const auto& col : eig_) out = out * compose_unitary(col[ti].vectors, (1.0 - s) * col[ti].values);
    return out;
  }

  std::size_t size() const { return m_; }

 private:
  Eigen::Index n_;
  std::size_t m_;
  std::vector<std::vector<HermEig>> eig_;
};

struct BandScan {
  bool found = false;
  BandDecomposition band;
  double anchor_phase = 0.0;
};

/// Grows a separated run around `anchor` following the eigenvalue nearest to
/// `seed_phase`.  Rest arcs are the covering arcs of the other eigenphases.
inline BandScan scan_band(const Grid& grid, const std::vector<UnitaryEig>& eigs, std::size_t anchor, double seed_phase,
                          double min_gap, double prev_anchor_tol) {
  BandScan out;
  auto pick = [&](std::size_t i, double near, double& band, Arc& arc) {
    const RVec& ph = eigs[i].phases;
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < ph.size(); ++j) {
      if (chord(ph(j), near) < chord(ph(best), near)) best = j;
    }
    std::vector<double> others;
    for (Eigen::Index j = 0; j < ph.size(); ++j) {
      if (j != best) others.push_back(ph(j));
    }
    band = ph(best);
    arc = covering_arc(others);
    if (others.empty()) return true;
    if (arc.contains(band)) return false;
    return arc.distance(band) >= min_gap;
  };

  double band = 0.0;
  Arc arc;
  if (!pick(anchor, seed_phase, band, arc)) return out;
  if (circ_dist(band, seed_phase) > prev_anchor_tol) return out;
  out.anchor_phase = band;

  // extend to the right and to the left while separated and continuous
  std::size_t lo = anchor, hi = anchor;
  double cur = band;
  for (std::size_t i = anchor + 1; i < grid.size(); ++i) {
    double b;
    Arc a;
    if (!pick(i, cur, b, a) || std::abs(wrap_phase(b - cur)) >= 0.5 * min_gap) break;
    cur = b;
    hi = i;
  }
  cur = band;
  for (std::size_t i = anchor; i-- > 0;) {
    double b;
    Arc a;
    if (!pick(i, cur, b, a) || std::abs(wrap_phase(b - cur)) >= 0.5 * min_gap) break;
    cur = b;
    lo = i;
  }
  // per-point rest arcs on [lo, hi], then the independent separation check
  std::vector<Arc> arcs;
  cur = eigs[lo].phases(0);
  {
    double b;
    Arc a;
    // walk from the anchor to lo to recover the band phase at lo
    double w = band;
    for (std::size_t i = anchor; i-- > lo;) {
      pick(i, w, b, a);
      w = b;
    }
    cur = w;
  }
  for (std::size_t i = lo; i <= hi; ++i) {
    double b;
    Arc a;
    pick(i, cur, b, a);
    arcs.push_back(a);
    cur = b;
  }
  out.band = band_from_eigs(grid, eigs, lo, hi, arcs, min_gap);
  out.found = true;
  return out;
}

/// Eigenvalue with the largest distance to the rest; ties go to the larger phase.
inline std::pair<double, double> most_isolated(const RVec& ph) {
  double best_gap = -1.0, best_phase = 0.0;
  for (Eigen::Index j = 0; j < ph.size(); ++j) {
    double g = kPi;
    for (Eigen::Index k = 0; k < ph.size(); ++k) {
      if (k != j) g = std::min(g, circ_dist(ph(j), ph(k)));
    }
    if (g > best_gap + 1e-12 || (std::abs(g - best_gap) <= 1e-12 && ph(j) > best_phase)) {
      best_gap = g;
      best_phase = ph(j);
    }
  }
  return {best_gap, best_phase};
}

inline double remaining_from_band(const BandDecomposition& b, bool& pi_reached) {
  pi_reached = b.covers(kPi);
  if (pi_reached) return kPi;
  double r = 0.0;
  for (double x : b.g) r = std::max(r, std::abs(wrap_phase(x)));
  return r;
}

}  // namespace detail

/// Lower bound for the length of s -> eval_factorization(F, s) (sup norm over
/// t).  Stage j sits at s_j = j ds with ds = step_d / r; L_j is the measured
/// chord length up to s_j and R_j is pi when the band at s_j sweeps -1,
/// otherwise the largest |phase| of the band: any path from W(., s_j) to 1
/// has length at least R_j.  The bound is max_j (L_j + R_j).
inline CelCertificate certify_length_lower_bound(const ExpFactorization& f, std::optional<double> step_d,
                                                 double eps, const CelOptions& opt = {}) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParams, "eps must be positive");
  CelCertificate cert;
  cert.n = f.n();
  cert.grid_size = f.grid().size();
  cert.eps = eps;
  cert.step_d = step_d.value_or(eps / 8.0);
  if (!(cert.step_d > 0.0)) throw Error(ErrorKind::InvalidParams, "step_d must be positive");
  cert.lipschitz = f.total_norm;
  cert.substeps = std::max(1, opt.substeps);
  cert.min_gap = opt.gap_factor * cert.step_d;
  if (cert.lipschitz <= 0.0) {
    cert.terminal_reason = "constant factorization: no band";
    cert.band_lost = true;
    return cert;
  }
  cert.ds = cert.step_d / cert.lipschitz;
  const Grid& grid = f.grid();
  const detail::FactorCache cache(f);
  const std::size_t m = grid.size();
  // the band must be able to move one grid step without leaving its corridor
  double t_step = 0.0;
  for (std::size_t i = 1; i < m; ++i) t_step = std::max(t_step, op_norm(cache.value(i, 0.0) - cache.value(i - 1, 0.0)));
  cert.min_gap = std::max(cert.min_gap, opt.gap_factor * 2.0 * std::asin(std::min(1.0, 0.5 * t_step)));
  auto eigs_at = [&](double s) {
    std::vector<UnitaryEig> e(m);
    for (std::size_t i = 0; i < m; ++i) e[i] = unitary_eigphases(cache.value(i, s), 1e-6);
    return e;
  };
  auto values_at = [&](double s) {
    std::vector<CMat> v(m);
    for (std::size_t i = 0; i < m; ++i) v[i] = cache.value(i, s);
    return v;
  };

  // stage 0: anchor at the grid point where the most isolated eigenvalue is best separated
  std::vector<UnitaryEig> eigs = eigs_at(0.0);
  double best = -1.0, seed = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto [g, ph] = detail::most_isolated(eigs[i].phases);
    if (g > best + 1e-12) {
      best = g;
      seed = ph;
      cert.anchor = i;
    }
  }
  const std::size_t stage_count = static_cast<std::size_t>(std::ceil(1.0 / cert.ds - 1e-12));
  std::vector<CMat> prev_vals = values_at(0.0);
  double accumulated = 0.0;
  double prev_phase = seed;
  double tol = 1e-12;
  for (std::size_t j = 0; j <= stage_count; ++j) {
    const double s = std::min(1.0, static_cast<double>(j) * cert.ds);
    double increment = 0.0;
    if (j > 0) {
      // measured length of [s_{j-1}, s_j], chord sums over substeps
      const double s0 = std::min(1.0, static_cast<double>(j - 1) * cert.ds);
      for (int q = 1; q <= cert.substeps; ++q) {
        const double sq = s0 + (s - s0) * q / cert.substeps;
        std::vector<CMat> vals = values_at(sq);
        double sup = 0.0;
        for (std::size_t i = 0; i < m; ++i) sup = std::max(sup, op_norm(vals[i] - prev_vals[i]));
        increment += sup;
        prev_vals = std::move(vals);
      }
      accumulated += increment;
      eigs = eigs_at(s);
      tol = 2.0 * std::asin(std::min(1.0, 0.5 * cert.step_d)) + 1e-9;
    } else {
      tol = kPi;
    }
    const detail::BandScan scan = detail::scan_band(grid, eigs, cert.anchor, prev_phase, cert.min_gap, tol);
    if (!scan.found) {
      cert.band_lost = true;
      cert.terminal_reason = "band lost at stage " + std::to_string(j) + " (s=" + std::to_string(s) + ")";
      if (opt.strict) throw Error(ErrorKind::BandLost, cert.terminal_reason);
      break;
    }
    CelStage st;
    st.s = s;
    st.first = scan.band.first;
    st.last = scan.band.last;
    st.g_start = scan.anchor_phase;
    st.g_min = scan.band.g_min;
    st.g_max = scan.band.g_max;
    for (double x : scan.band.g) st.g_absmax = std::max(st.g_absmax, std::abs(wrap_phase(x)));
    st.gap = scan.band.gap;
    st.increment = increment;
    st.accumulated = accumulated;
    st.remaining = detail::remaining_from_band(scan.band, st.pi_reached);
    cert.stages.push_back(st);
    prev_phase = scan.anchor_phase;
    if (st.accumulated + st.remaining > cert.lower_bound) {
      cert.lower_bound = st.accumulated + st.remaining;
      cert.best_stage = cert.stages.size() - 1;
    }
  }
  if (cert.terminal_reason.empty()) cert.terminal_reason = "homotopy exhausted";
  if (!cert.stages.empty() && cert.stages[cert.best_stage].pi_reached) {
    cert.terminal_reason = "pi reached in band at stage " + std::to_string(cert.best_stage) + "; " +
                           cert.terminal_reason;
  }
  return cert;
}

struct CelVerifyReport {
  bool ok = true;
  std::vector<std::string> problems;
  double recomputed_bound = 0.0;
};

/// Re-derives the bound from the stage records alone.
inline CelVerifyReport verify_cel_certificate(const CelCertificate& c) {
  CelVerifyReport rep;
  auto fail = [&](const std::string& msg) {
    rep.ok = false;
    rep.problems.push_back(msg);
  };
  const double upper = c.lipschitz * c.ds * (1.0 + 1e-9) + 1e-12;
  const double move = 2.0 * std::asin(std::min(1.0, 0.5 * c.step_d)) + 1e-9;
  double acc = 0.0;
  for (std::size_t j = 0; j < c.stages.size(); ++j) {
    const CelStage& st = c.stages[j];
    const std::string at = "stage " + std::to_string(j) + ": ";
    if (!(st.gap > 0.0) || st.gap < c.min_gap) fail(at + "gap below min_gap");
    if (st.first > c.anchor || st.last < c.anchor || st.last >= c.grid_size) fail(at + "band interval misses anchor");
    if (st.increment < 0.0 || st.increment > upper) fail(at + "increment exceeds r ds");
    acc += st.increment;
    if (std::abs(acc - st.accumulated) > 1e-9 * (1.0 + acc)) fail(at + "accumulated length mismatch");
    if (j > 0 && circ_dist(st.g_start, c.stages[j - 1].g_start) > move) fail(at + "band jumps between stages");
    if (st.g_min > st.g_start + 1e-12 || st.g_max < st.g_start - 1e-12) fail(at + "band range excludes anchor");
    BandDecomposition b;
    b.g_min = st.g_min;
    b.g_max = st.g_max;
    const bool covers = b.covers(kPi);
    if (covers != st.pi_reached) fail(at + "pi containment flag inconsistent");
    const double r = covers ? kPi : st.g_absmax;
    if (std::abs(r - st.remaining) > 1e-12) fail(at + "remaining length mismatch");
    rep.recomputed_bound = std::max(rep.recomputed_bound, st.accumulated + r);
  }
  if (std::abs(rep.recomputed_bound - c.lower_bound) > 1e-9) fail("lower bound does not match stage data");
  return rep;
}

// ---------------------------------------------------------------------------
// Trace windows

struct TraceWindow {
  std::vector<double> lo;      // per grid point, bounds on l
  std::vector<double> hi;
  std::vector<long> feasible;  // integers l inside every window
  std::optional<long> L;       // set when exactly one integer fits
  double rho = 0.0;            // 2 asin(delta/2)
};

/// Integers l with |tr h(t)/2pi - l/N| 2pi <= 2 asin(delta/2) + slack (tr the
/// normalized trace) at every grid point, where u(t) is within delta of
/// exp(i h(t)) and det u = 1.
inline TraceWindow winding_trace_window(const UnitaryPath& u, const HermitianPath& h, double delta,
                                        double slack = 1e-9) {
  if (!(delta >= 0.0 && delta < 2.0)) throw Error(ErrorKind::InvalidParams, "delta must lie in [0, 2)");
  if (!(u.grid() == h.grid()) || u.n() != h.n()) throw Error(ErrorKind::InvalidParams, "u and h must share grid and size");
  const double nn = static_cast<double>(u.n());
  TraceWindow w;
  w.rho = 2.0 * std::asin(0.5 * delta);
  const double half = (w.rho + slack) / kTwoPi;
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double x = normalized_trace(h[i]).real() / kTwoPi;
    w.lo.push_back(nn * (x - half));
    w.hi.push_back(nn * (x + half));
    lo = std::max(lo, w.lo.back());
    hi = std::min(hi, w.hi.back());
  }
  for (long l = static_cast<long>(std::ceil(lo)); static_cast<double>(l) <= hi; ++l) w.feasible.push_back(l);
  if (w.feasible.empty()) {
    throw Error(ErrorKind::NoConsistentL, "no integer fits all trace windows (delta too large or h discontinuous)");
  }
  if (w.feasible.size() == 1) w.L = w.feasible.front();
  return w;
}

// ---------------------------------------------------------------------------
// Ex2 obstruction

enum class Verdict { Contradiction, Consistent, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Contradiction: return "contradiction";
    case Verdict::Consistent: return "consistent";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct WindowAt {
  double t = 0.0;
  double trace_lo = 0.0;      // bounds on tr h(t) (normalized trace)
  double trace_hi = 0.0;
  double lo = 0.0;            // bounds on L/N
  double hi = 0.0;
  std::vector<long> feasible_L;
  int a1 = 0;                 // eigenvalues near e^{i t theta0}
  int a2 = 0;                 // near e^{-i t theta0/(n-1)}
  int a3 = 0;                 // elsewhere
  int straddling = 0;         // rho-neighbourhoods crossing an arc edge
};

struct ObstructionReport {
  int n = 0;
  Eigen::Index N = 0;
  double eps = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double cap = 0.0;
  std::vector<WindowAt> windows;   // t = 1 and t = 1/n
  bool contradiction = false;
  Verdict verdict = Verdict::Inconclusive;
  std::string reason;
  // the same question with the worst-case constants of the original argument
  double worstcase_m0 = 0.0;
  double worstcase_eps = 0.0;
  std::string worstcase_verdict;
  // largest delta with a contradiction verdict (bisection)
  double threshold_delta = 0.0;
  double h_norm = 0.0;
  double h_residual = 0.0;
};

struct ObstructionParams {
  int n = 13;
  int m = 4;
  int k = 0;
  double eps = 0.1;
  std::optional<double> norm_bound;  // default 2(1 - 1/(n-1)) pi
};

inline double obstruction_default_cap(int n) { return 2.0 * (1.0 - 1.0 / static_cast<double>(n - 1)) * kPi; }

namespace detail {

/// Bounds on the sum of lifts: each eigenvalue of exp(i h) lies within rho of
/// some eigenvalue e^{i phi} of u (spectral variation of unitaries), and the
/// corresponding eigenvalue of h lies in [-cap, cap].
inline WindowAt window_at(const CMat& ut, double t, int n, double theta0, double eps, double rho, double cap) {
  const UnitaryEig e = unitary_eigphases(ut);
  const double nn = static_cast<double>(ut.rows());
  WindowAt w;
  w.t = t;
  double sum_lo = 0.0, sum_hi = 0.0;
  const Arc i_arc{wrap_phase(t * theta0), 0.5 * eps};
  const Arc j_arc{wrap_phase(-t * theta0 / (n - 1)), 0.5 * eps};
  for (Eigen::Index j = 0; j < e.phases.size(); ++j) {
    const double phi = e.phases(j);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int k = -3; k <= 3; ++k) {
      const double a = phi + kTwoPi * k - rho, b = phi + kTwoPi * k + rho;
      const double clo = std::max(a, -cap), chi = std::min(b, cap);
      if (clo <= chi) {
        lo = std::min(lo, clo);
        hi = std::max(hi, chi);
      }
    }
    if (lo > hi) {
      // no admissible lift at all: any h is excluded outright
      lo = hi = std::numeric_limits<double>::quiet_NaN();
    }
    sum_lo += lo;
    sum_hi += hi;
    const bool in_i = i_arc.contains(phi), in_j = j_arc.contains(phi);
    if (in_i) ++w.a1;
    else if (in_j) ++w.a2;
    else ++w.a3;
    auto straddles = [&](const Arc& arc) {
      const double dd = circ_dist(phi, arc.center);
      return std::abs(dd - arc.halfwidth) <= rho;
    };
    if (straddles(i_arc) || straddles(j_arc)) ++w.straddling;
  }
  w.trace_lo = sum_lo / nn;
  w.trace_hi = sum_hi / nn;
  w.lo = (w.trace_lo - rho) / kTwoPi;
  w.hi = (w.trace_hi + rho) / kTwoPi;
  if (std::isfinite(w.lo) && std::isfinite(w.hi)) {
    for (long l = static_cast<long>(std::ceil(nn * w.lo - 1e-12)); static_cast<double>(l) <= nn * w.hi + 1e-12; ++l) {
      w.feasible_L.push_back(l);
    }
  }
  return w;
}

}  // namespace detail

/// Decides from the eigendata of uE alone whether some continuous h with
/// ||h|| <= cap and ||uE - exp(ih)|| <= delta can exist: tr h(t) stays within
/// rho of 2 pi L / N for one integer L, and the admissible lifts at t = 1 and
/// t = 1/n pin L to two integer sets.  Disjoint sets are a contradiction.
inline ObstructionReport obstruction_windows(const UnitaryPath& ue, const ObstructionParams& p, double delta) {
  if (p.n < 3) throw Error(ErrorKind::InvalidParams, "n must be >= 3");
  if (!(delta >= 0.0 && delta < 2.0)) throw Error(ErrorKind::InvalidParams, "delta must lie in [0, 2)");
  ObstructionReport rep;
  rep.n = p.n;
  rep.N = ue.n();
  rep.eps = p.eps;
  rep.delta = delta;
  rep.rho = 2.0 * std::asin(0.5 * delta);
  rep.cap = p.norm_bound.value_or(obstruction_default_cap(p.n));
  const double theta0 = uniexam_theta0(p.n);
  for (double t : {1.0, 1.0 / p.n}) {
    rep.windows.push_back(detail::window_at(ue.at(t), t, p.n, theta0, p.eps, rep.rho, rep.cap));
  }
  const auto& a = rep.windows[0].feasible_L;
  const auto& b = rep.windows[1].feasible_L;
  bool disjoint = true;
  for (long x : a) disjoint = disjoint && std::find(b.begin(), b.end(), x) == b.end();
  const double nn = static_cast<double>(rep.N);
  const bool unique_l = nn * rep.rho < kPi;  // a single integer per t, hence constant along t
  if (!unique_l) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "N rho >= pi: the trace integer need not be constant";
  } else if (disjoint) {
    rep.verdict = Verdict::Contradiction;
    rep.reason = "integer windows at t=1 and t=1/n are disjoint";
  } else if (rep.windows[0].straddling + rep.windows[1].straddling > 0) {
    rep.verdict = Verdict::Inconclusive;
    rep.reason = "eigenvalues within rho of an arc edge";
  } else {
    rep.verdict = Verdict::Consistent;
    rep.reason = "integer windows overlap";
  }
  rep.contradiction = rep.verdict == Verdict::Contradiction;

  const double k0 = static_cast<double>(p.k);
  const double n3 = std::pow(static_cast<double>(p.n), 3);
  rep.worstcase_m0 = std::pow(2.0, 15) * (k0 + 1.0) * n3 * kPi * kPi;
  rep.worstcase_eps = 1.0 / (256.0 * kPi * p.n * p.n);
  rep.worstcase_verdict = static_cast<double>(p.m) > rep.worstcase_m0 ? "applicable"
                                                              : "inconclusive (m below m0)";
  return rep;
}

/// Largest delta (to `tol`) for which obstruction_windows reports a contradiction.
inline double obstruction_threshold(const UnitaryPath& ue, const ObstructionParams& p, double tol = 1e-6) {
  double lo = 0.0, hi = 1.999;
  if (obstruction_windows(ue, p, 0.0).verdict != Verdict::Contradiction) return 0.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (obstruction_windows(ue, p, mid).verdict == Verdict::Contradiction) lo = mid;
    else hi = mid;
  }
  return lo;
}

/// Checks the hypotheses on h, then evaluates the windows at `delta`.
inline ObstructionReport obstruction_check(const UnitaryPath& ue, const HermitianPath& h, const ObstructionParams& p,
                                           double delta) {
  if (!(ue.grid() == h.grid()) || ue.n() != h.n()) throw Error(ErrorKind::InvalidParams, "uE and h must share grid");
  const double cap = p.norm_bound.value_or(obstruction_default_cap(p.n));
  double nrm = 0.0, res = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const HermEig e = herm_eig(h[i]);
    nrm = std::max(nrm, e.values.cwiseAbs().maxCoeff());
    res = std::max(res, op_norm(ue[i] - compose_unitary(e.vectors, e.values)));
  }
  if (nrm > cap + 1e-12) {
    throw Error(ErrorKind::InvalidParams, "||h|| = " + std::to_string(nrm) + " exceeds " + std::to_string(cap));
  }
  if (res > delta + 1e-12) {
    throw Error(ErrorKind::InvalidParams, "residual " + std::to_string(res) + " exceeds delta " + std::to_string(delta));
  }
  ObstructionReport rep = obstruction_windows(ue, p, delta);
  rep.h_norm = nrm;
  rep.h_residual = res;
  rep.threshold_delta = obstruction_threshold(ue, p);
  return rep;
}

// ---------------------------------------------------------------------------
// Best approximation by a single exponential

struct BestApprox {
  HermitianPath h;
  double residual = 0.0;              // sup_t ||u(t) - exp(i h(t))||
  std::vector<double> history;        // best residual after each restart
  std::size_t iterations = 0;
  int restarts = 0;
  bool continuous = true;             // lifts move < pi/2 per grid step
};

struct BestApproxOptions {
  double mu = 1e-6;         // continuity penalty weight
  double step = 0.2;        // gradient step
  int restarts = 8;
  double noise = 0.1;
  double max_lift_step = kPi / 2;
};

/// Heuristic: h(t) = V(t) diag(x(t)) V(t)* in the eigenbasis of u, each lift x_j
/// fitted by projected gradient descent on sum_i |e^{i x} - lambda|^2 + mu sum (dx)^2
/// with |x| <= cap, restarted from random sheet shifts.
inline BestApprox best_exp_approx(const UnitaryPath& u, double cap, std::size_t budget, std::uint64_t seed,
                                  const BestApproxOptions& opt = {}) {
  if (!(cap > 0.0)) throw Error(ErrorKind::InvalidParams, "norm cap must be positive");
  const BranchDecomposition bd = branch_decompose(u, 1e-9);
  const EigenBranchSet& set = bd.set;
  const std::size_t nb = set.count();
  const std::size_t m = u.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, opt.noise);
  std::uniform_int_distribution<int> sheet(-1, 1);

  std::vector<std::vector<double>> target(nb, std::vector<double>(m));
  for (std::size_t j = 0; j < nb; ++j)
    for (std::size_t i = 0; i < m; ++i) target[j][i] = kPi * set.branches[j][i];

  auto clamp = [cap](double x) { return std::clamp(x, -cap, cap); };
  auto branch_residual = [&](const std::vector<double>& x, std::size_t j) {
    double r = 0.0;
    for (std::size_t i = 0; i < m; ++i) r = std::max(r, chord(x[i], target[j][i]));
    return r;
  };
  auto continuous = [&](const std::vector<double>& x) {
    for (std::size_t i = 1; i < m; ++i) {
      if (std::abs(x[i] - x[i - 1]) >= opt.max_lift_step) return false;
    }
    return true;
  };

  BestApprox out;
  std::vector<std::vector<double>> best(nb);
  std::vector<double> best_res(nb, std::numeric_limits<double>::infinity());
  const int restarts = std::max(1, opt.restarts);
  const std::size_t per_restart = std::max<std::size_t>(1, budget / static_cast<std::size_t>(restarts));
  for (int r = 0; r < restarts; ++r) {
    for (std::size_t j = 0; j < nb; ++j) {
      std::vector<double> x(m);
      const int k = r == 0 ? 0 : sheet(rng);
      for (std::size_t i = 0; i < m; ++i) x[i] = clamp(target[j][i] + kTwoPi * k + (r == 0 ? 0.0 : noise(rng)));
      std::vector<double> grad(m);
      for (std::size_t it = 0; it < per_restart; ++it) {
        double moved = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double g = 2.0 * std::sin(x[i] - target[j][i]);
          if (i > 0) g += 2.0 * opt.mu * (x[i] - x[i - 1]);
          if (i + 1 < m) g += 2.0 * opt.mu * (x[i] - x[i + 1]);
          grad[i] = g;
        }
        for (std::size_t i = 0; i < m; ++i) {
          const double nx = clamp(x[i] - opt.step * grad[i]);
          moved = std::max(moved, std::abs(nx - x[i]));
          x[i] = nx;
        }
        ++out.iterations;
        if (moved < 1e-13) break;
      }
      if (!continuous(x)) continue;
      const double res = branch_residual(x, j);
      if (res < best_res[j]) {
        best_res[j] = res;
        best[j] = x;
      }
    }
    double total = 0.0;
    for (double v : best_res) total = std::max(total, v);
    out.history.push_back(total);
    ++out.restarts;
  }
  std::vector<CMat> hs;
  hs.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    RVec vals(static_cast<Eigen::Index>(nb));
    for (std::size_t j = 0; j < nb; ++j) vals(static_cast<Eigen::Index>(j)) = best[j][i];
    hs.push_back(compose_hermitian(set.vectors[i], vals));
  }
  out.h = HermitianPath::from_samples(u.grid(), std::move(hs));
  for (std::size_t i = 0; i < m; ++i) {
    const HermEig e = herm_eig(out.h[i]);
    out.residual = std::max(out.residual, op_norm(u[i] - compose_unitary(e.vectors, e.values)));
  }
  return out;
}

}  // namespace celkit
