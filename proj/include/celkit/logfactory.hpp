#pragma once

// Trace-zero logarithms of determinant-one unitary paths: a zero-sum branch
// selection at t = 0 followed by continuation of each eigenvalue branch.
// Phases in this header are in full turns (u = exp(2 pi i h)).

#include <algorithm>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "celkit/determinant.hpp"
#include "celkit/spectral.hpp"

namespace celkit {

struct BranchSelection {
  std::vector<double> b;            // initial phases in (-1/2, 1/2]
  long k = 0;                       // round(sum b)
  std::vector<double> a;            // shifted phases, sum zero
  std::set<std::size_t> shifted_indices;

  double sum() const { return std::accumulate(a.begin(), a.end(), 0.0); }
  double spread() const {
    if (a.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
    return *hi - *lo;
  }
};

/// Shifts entries of b by integers so that they sum to zero: for k >= 1 the k
/// largest entries drop by one, for k <= -1 the |k| smallest rise by one.
inline BranchSelection branch_select_zero_sum(const std::vector<double>& b, double sum_tol = 1e-9,
                                              double dup_tol = 1e-12) {
  if (b.empty()) throw Error(ErrorKind::InvalidParams, "empty phase list");
  for (double x : b) {
    if (!(x > -0.5 && x <= 0.5)) {
      throw Error(ErrorKind::InvalidParams, "phase " + std::to_string(x) + " outside (-1/2, 1/2]");
    }
  }
  const double s = std::accumulate(b.begin(), b.end(), 0.0);
  const double k = std::round(s);
  if (std::abs(s - k) > sum_tol) {
    throw Error(ErrorKind::NonIntegerSum, "sum of phases " + std::to_string(s) + " is not an integer");
  }
  std::vector<std::size_t> order(b.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return b[x] < b[y]; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (b[order[i]] - b[order[i - 1]] <= dup_tol) {
      throw Error(ErrorKind::DuplicateEntries, "phases at indices " + std::to_string(order[i - 1]) + " and " +
                                                   std::to_string(order[i]) + " coincide");
    }
  }

  BranchSelection sel;
  sel.b = b;
  sel.k = static_cast<long>(k);
  sel.a = b;
  if (sel.k >= 1) {
    for (long c = 0; c < sel.k; ++c) {
      const std::size_t j = order[order.size() - 1 - static_cast<std::size_t>(c)];
      sel.a[j] -= 1.0;
      sel.shifted_indices.insert(j);
    }
  } else if (sel.k <= -1) {
    for (long c = 0; c < -sel.k; ++c) {
      const std::size_t j = order[static_cast<std::size_t>(c)];
      sel.a[j] += 1.0;
      sel.shifted_indices.insert(j);
    }
  }
  if (std::abs(sel.sum()) > std::max(sum_tol, 1e-12)) {
    throw Error(ErrorKind::NonIntegerSum, "shifted phases do not sum to zero");
  }
  for (double x : sel.a) {
    if (!(std::abs(x) < 1.0)) throw Error(ErrorKind::InvalidParams, "shifted phase outside (-1, 1)");
  }
  if (!(sel.spread() < 1.0)) throw Error(ErrorKind::InvalidParams, "shifted phases spread >= 1");
  return sel;
}

struct LogPath {
  HermitianPath h;                          // full turns
  UnitaryPath u1;                           // exp(2 pi i h) at grid points
  BranchSelection selection;
  std::vector<std::vector<double>> lifts;   // lifts[j][i], full turns
  double eps = 0.0;
  bool perturbation_applied = false;
  double perturbation_norm = 0.0;
  double approx_error = 0.0;                // sup_t ||P - u1||
  double sup_norm = 0.0;                    // sup_t max_j |h_j(t)|
  double max_trace = 0.0;                   // sup_t |sum_j h_j(t)|
  double min_spread = 0.0;
  double max_spread = 0.0;
};

/// Hermitian h with exp(2 pi i h) within eps of P, tr h = 0 and ||h|| < 1.
inline LogPath trace_zero_log_path(const UnitaryPath& p, double eps, const BranchOptions& opt = {}) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParams, "eps must be positive");
  const CuReport cu = cu_membership(p);
  if (!cu.member) {
    throw Error(ErrorKind::NotDetOne, "|det - 1| = " + std::to_string(cu.worst_defect) + " at index " +
                                          std::to_string(cu.worst_index));
  }
  const BranchDecomposition bd = branch_decompose(p, eps, opt);
  const EigenBranchSet& set = bd.set;
  const std::size_t n = set.count();
  const std::size_t m = p.size();

  std::vector<double> b(n);
  for (std::size_t j = 0; j < n; ++j) {
    double x = 0.5 * set.branches[j][0];
    if (x <= -0.5) x += 1.0;  // -1/2 belongs to the positive end
    b[j] = x;
  }
  LogPath out;
  out.eps = eps;
  out.selection = branch_select_zero_sum(b);
  out.perturbation_applied = bd.perturbation_applied;
  out.perturbation_norm = bd.perturbation_norm;

  out.lifts.assign(n, std::vector<double>(m));
  for (std::size_t j = 0; j < n; ++j) {
    const double shift = out.selection.a[j] - 0.5 * set.branches[j][0];
    for (std::size_t i = 0; i < m; ++i) out.lifts[j][i] = 0.5 * set.branches[j][i] + shift;
  }

  std::vector<CMat> hs, us;
  hs.reserve(m);
  us.reserve(m);
  out.min_spread = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    RVec vals(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) vals(static_cast<Eigen::Index>(j)) = out.lifts[j][i];
    hs.push_back(compose_hermitian(set.vectors[i], vals));
    us.push_back(compose_unitary(set.vectors[i], kTwoPi * vals));
    out.sup_norm = std::max(out.sup_norm, vals.cwiseAbs().maxCoeff());
    out.max_trace = std::max(out.max_trace, std::abs(vals.sum()));
    const double sp = vals.maxCoeff() - vals.minCoeff();
    out.min_spread = std::min(out.min_spread, sp);
    out.max_spread = std::max(out.max_spread, sp);
    out.approx_error = std::max(out.approx_error, op_norm(p[i] - us.back()));
  }
  out.h = HermitianPath::from_samples(p.grid(), std::move(hs));
  out.u1 = UnitaryPath::from_samples(p.grid(), std::move(us));
  return out;
}

struct LogViolation {
  std::string kind;  // hermitian | trace | norm | approximation
  std::size_t index = 0;
  double value = 0.0;
};

struct LogCertificateReport {
  bool ok = true;
  std::vector<LogViolation> violations;
  double eps = 0.0;
  double sup_norm = 0.0;          // sup_t ||h(t)||
  double max_trace = 0.0;         // sup_t |tr h(t)|
  double approx_error = 0.0;      // sup_t ||P - exp(2 pi i h)||
  double min_spread = 0.0;
  double max_spread = 0.0;
  double certified_length_bound = 0.0;  // 2 pi sup_t ||h(t)||
};

/// Re-derives every property of a trace-zero logarithm from (P, h) alone.
inline LogCertificateReport verify_log_certificate(const UnitaryPath& p, const HermitianPath& h, double eps,
                                                   double trace_tol = 1e-10, double herm_tol = 1e-10) {
  LogCertificateReport rep;
  rep.eps = eps;
  rep.min_spread = std::numeric_limits<double>::infinity();
  if (!(p.grid() == h.grid())) {
    rep.ok = false;
    rep.violations.push_back({"grid", 0, 0.0});
    return rep;
  }
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double hd = hermitian_defect(h[i]);
    if (hd > herm_tol) rep.violations.push_back({"hermitian", i, hd});
    const HermEig e = herm_eig(hermitize(h[i]), std::max(hd, kDefaultTol) * 2.0);
    const double tr = std::abs(e.values.sum());
    rep.max_trace = std::max(rep.max_trace, tr);
    if (tr > trace_tol) rep.violations.push_back({"trace", i, tr});
    const double nrm = e.values.cwiseAbs().maxCoeff();
    rep.sup_norm = std::max(rep.sup_norm, nrm);
    if (!(nrm < 1.0)) rep.violations.push_back({"norm", i, nrm});
    const double sp = e.values.maxCoeff() - e.values.minCoeff();
    rep.min_spread = std::min(rep.min_spread, sp);
    rep.max_spread = std::max(rep.max_spread, sp);
    const double err = op_norm(p[i] - compose_unitary(e.vectors, kTwoPi * e.values));
    rep.approx_error = std::max(rep.approx_error, err);
    if (!(err < eps)) rep.violations.push_back({"approximation", i, err});
  }
  rep.certified_length_bound = kTwoPi * rep.sup_norm;
  rep.ok = rep.violations.empty();
  return rep;
}

}  // namespace celkit
