#pragma once

// Continuous eigenvalue selections along sampled paths, branch decomposition
// with eps-perturbation to distinct eigenvalues, and empirical spectral
// measures on the circle.

#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "celkit/pathalg.hpp"

namespace celkit {

/// Minimum-cost perfect matching (Hungarian method with potentials).
/// Returns assign[row] = column.
inline std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(n, -1);
  for (int j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
  return assign;
}

/// Smallest circular gap between distinct entries of `phases`.
inline double min_circular_gap(const RVec& phases) {
  double g = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < phases.size(); ++a) {
    for (Eigen::Index b = a + 1; b < phases.size(); ++b) g = std::min(g, circ_dist(phases(a), phases(b)));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Single continuous selection

struct SpectralSelection {
  Grid grid;
  std::vector<double> phases;  // continuous lift, radians
  double length = 0.0;         // sum of chords between successive selections
  double equality_defect = 0.0;  // sum_i (||U_{i+1} - U_i|| - chord_i) >= 0
};

/// Follows one eigenvalue of P starting at e^{i start_phase}.  At each step
/// the candidates are the eigenvalue clusters within ||U_{i+1} - U_i|| of the
/// current point (nonempty for normal matrices); ties are broken by the
/// overlap of the tracked eigenvector with each cluster's eigenspace when a
/// start vector is supplied, otherwise by chord distance.
inline SpectralSelection track_selection(const UnitaryPath& p, double start_phase,
                                         const std::optional<CVec>& start_vector = std::nullopt,
                                         double start_tol = 1e-7) {
  constexpr double cluster_tol = 1e-8;
  SpectralSelection sel{p.grid(), {}, 0.0, 0.0};
  sel.phases.reserve(p.size());

  auto cluster_projector = [&](const UnitaryEig& e, double phase) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < e.phases.size(); ++j) {
      if (circ_dist(e.phases(j), phase) <= cluster_tol) cols.push_back(j);
    }
    CMat basis(e.vectors.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) basis.col(static_cast<Eigen::Index>(c)) = e.vectors.col(cols[c]);
    return basis;
  };

  const UnitaryEig e0 = unitary_eigphases(p[0]);
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < e0.phases.size(); ++j) {
    if (chord(e0.phases(j), start_phase) < chord(e0.phases(best), start_phase)) best = j;
  }
  if (chord(e0.phases(best), start_phase) > start_tol) {
    throw Error(ErrorKind::StartNotInSpectrum, "start phase " + std::to_string(start_phase) + " not in sp(P(0))");
  }
  double theta = start_phase;
  std::optional<CVec> vec;
  if (start_vector) {
    const CMat basis = cluster_projector(e0, e0.phases(best));
    CVec proj = basis * (basis.adjoint() * (*start_vector));
    if (proj.norm() < 1e-8) {
      throw Error(ErrorKind::StartNotInSpectrum, "start vector has no component in the start eigenspace");
    }
    vec = proj / proj.norm();
  }
  sel.phases.push_back(theta);

  for (std::size_t i = 1; i < p.size(); ++i) {
    const double step = op_norm(p[i] - p[i - 1]);
    const UnitaryEig e = unitary_eigphases(p[i]);
    // cluster representatives
    std::vector<double> reps;
    for (Eigen::Index j = 0; j < e.phases.size(); ++j) {
      bool seen = false;
      for (double r : reps) seen = seen || circ_dist(r, e.phases(j)) <= cluster_tol;
      if (!seen) reps.push_back(e.phases(j));
    }
    std::vector<double> candidates;
    double nearest = reps.front();
    for (double r : reps) {
      if (chord(r, theta) < chord(nearest, theta)) nearest = r;
      if (chord(r, theta) <= step + 1e-9) candidates.push_back(r);
    }
    if (candidates.empty()) candidates.push_back(nearest);
    double chosen = candidates.front();
    if (vec && candidates.size() > 1) {
      double best_overlap = -1.0;
      for (double c : candidates) {
        const CMat basis = cluster_projector(e, c);
        const double ov = (basis.adjoint() * (*vec)).norm();
        if (ov > best_overlap + 1e-12) {
          best_overlap = ov;
          chosen = c;
        }
      }
    } else {
      for (double c : candidates) {
        if (chord(c, theta) < chord(chosen, theta)) chosen = c;
      }
    }
    if (vec) {
      const CMat basis = cluster_projector(e, chosen);
      CVec proj = basis * (basis.adjoint() * (*vec));
      if (proj.norm() > 1e-12) {
        vec = proj / proj.norm();
      } else {
        vec = basis.col(0);
      }
    }
    const double c = chord(theta, chosen);
    sel.length += c;
    sel.equality_defect += std::max(0.0, step - c);
    theta += wrap_phase(chosen - theta);
    sel.phases.push_back(theta);
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Branch decomposition

/// n continuous branches h_j (units of pi) with eigenvectors aligned per
/// grid point: P(t_i) = sum_j exp(i pi h_j(t_i)) v_j v_j*.
struct EigenBranchSet {
  Grid grid;
  std::vector<std::vector<double>> branches;  // branches[j][i], units of pi
  std::vector<CMat> vectors;                  // vectors[i].col(j) spans p_j(t_i)

  std::size_t count() const { return branches.size(); }

  CMat projection(std::size_t j, std::size_t i) const {
    const CVec v = vectors[i].col(static_cast<Eigen::Index>(j));
    return v * v.adjoint();
  }

  /// sum_j exp(i pi h_j) p_j at grid point i.
  CMat reconstruct(std::size_t i) const {
    RVec ph(static_cast<Eigen::Index>(count()));
    for (std::size_t j = 0; j < count(); ++j) ph(static_cast<Eigen::Index>(j)) = kPi * branches[j][i];
    return compose_unitary(vectors[i], ph);
  }
};

struct BranchDecomposition {
  EigenBranchSet set;
  UnitaryPath perturbed;
  bool perturbation_applied = false;
  double perturbation_norm = 0.0;  // ||P - perturbed||_sup
  double min_gap = 0.0;            // smallest eigenvalue gap over the grid (radians)
  std::vector<double> offsets;     // delta_j, sum zero
};

struct BranchOptions {
  int max_attempts = 8;
  std::optional<double> gap_floor;  // default min(1e-7, eps / (16 n))
};

namespace detail {

inline double golden_fraction(std::uint64_t k) {
  const double phi_inv = 0.6180339887498949;
  const double x = static_cast<double>(k) * phi_inv;
  return x - std::floor(x);
}

inline double min_gap_over(const std::vector<UnitaryEig>& eigs) {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& e : eigs) g = std::min(g, min_circular_gap(e.phases));
  return g;
}

inline std::vector<UnitaryEig> eig_all(const UnitaryPath& p) {
  std::vector<UnitaryEig> out;
  out.reserve(p.size());
  for (const CMat& s : p.samples()) out.push_back(unitary_eigphases(s));
  return out;
}

}  // namespace detail

/// Aligns eigen data of successive grid points by optimal assignment on
/// chord^2 + (1 - |<v, w>|^2) and lifts each branch continuously.
inline EigenBranchSet continue_branches(const Grid& grid, const std::vector<UnitaryEig>& eigs,
                                        double max_step_pi = 0.5) {
  const Eigen::Index n = eigs.front().phases.size();
  EigenBranchSet set;
  set.grid = grid;
  set.branches.assign(static_cast<std::size_t>(n), std::vector<double>(grid.size()));
  set.vectors.resize(grid.size());
  set.vectors[0] = eigs[0].vectors;
  std::vector<double> lift(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    lift[j] = eigs[0].phases(j);
    set.branches[j][0] = lift[j] / kPi;
  }
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const UnitaryEig& e = eigs[i];
    const CMat overlap = set.vectors[i - 1].adjoint() * e.vectors;
    Eigen::MatrixXd cost(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const double c = chord(lift[a], e.phases(b));
        cost(a, b) = c * c + (1.0 - std::norm(overlap(a, b)));
      }
    }
    const std::vector<int> assign = min_cost_assignment(cost);
    CMat vecs(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const Eigen::Index b = assign[a];
      const double step = wrap_phase(e.phases(b) - lift[a]);
      if (std::abs(step) >= max_step_pi * kPi) {
        throw Error(ErrorKind::GridTooCoarse, "branch " + std::to_string(a) + " moves " +
                                                  std::to_string(step) + " rad at index " + std::to_string(i));
      }
      lift[a] += step;
      set.branches[a][i] = lift[a] / kPi;
      // keep a consistent phase convention on the eigenvector
      CVec w = e.vectors.col(b);
      const cplx ov = overlap(a, b);
      if (std::abs(ov) > 1e-12) w *= std::conj(ov) / std::abs(ov);
      vecs.col(a) = w;
    }
    set.vectors[i] = vecs;
  }
  return set;
}

/// Branch decomposition of P.  When eigenvalues collide (gap below the
/// floor at some grid point), P is replaced by P(t) W with
/// W = Q diag(e^{i delta_j}) Q*, Q an eigenbasis of P(0), sum delta_j = 0 and
/// |delta_j| < eps/2; det is preserved and ||P - PW|| < eps.
inline BranchDecomposition branch_decompose(const UnitaryPath& p, double eps, const BranchOptions& opt = {}) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParams, "eps must be positive");
  const Eigen::Index n = p.n();
  const double gap_floor = opt.gap_floor.value_or(std::min(1e-7, eps / (16.0 * static_cast<double>(n))));

  BranchDecomposition out;
  std::vector<UnitaryEig> eigs = detail::eig_all(p);
  double gap = n > 1 ? detail::min_gap_over(eigs) : kPi;
  if (gap >= gap_floor) {
    out.perturbed = p;
    out.min_gap = gap;
    out.offsets.assign(static_cast<std::size_t>(n), 0.0);
    out.set = continue_branches(p.grid(), eigs);
    return out;
  }

  const CMat q = eigs[0].vectors;
  for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
    RVec x(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      x(j) = detail::golden_fraction(static_cast<std::uint64_t>(j + 1 + attempt * n));
    }
    const RVec delta = (0.5 * eps) * (x.array() - x.mean()).matrix();
    const CMat w = compose_unitary(q, delta);
    std::vector<CMat> samples;
    samples.reserve(p.size());
    for (const CMat& s : p.samples()) samples.push_back(s * w);
    MatrixFn gen;
    if (p.has_generator()) gen = [g = p.generator(), w](double t) -> CMat { return g(t) * w; };
    UnitaryPath candidate = UnitaryPath::from_parts(p.grid(), std::move(samples), std::move(gen));
    eigs = detail::eig_all(candidate);
    gap = detail::min_gap_over(eigs);
    if (gap >= gap_floor) {
      out.perturbed = std::move(candidate);
      out.perturbation_applied = true;
      out.perturbation_norm = op_norm(w - identity(n));
      out.min_gap = gap;
      out.offsets.assign(delta.data(), delta.data() + n);
      out.set = continue_branches(p.grid(), eigs);
      return out;
    }
  }
  throw Error(ErrorKind::PerturbationFailed,
              "could not separate eigenvalues with offsets < eps after " + std::to_string(opt.max_attempts) +
                  " attempts");
}

// ---------------------------------------------------------------------------
// Spectral measures

struct Atom {
  double phase = 0.0;      // in (-pi, pi]
  int multiplicity = 0;
};

/// Normalized-trace spectral measure of a unitary in M_n: atoms carry
/// multiplicity / n.
struct EmpiricalMeasure {
  int n = 0;
  std::vector<Atom> atoms;

  double mass(std::size_t i) const { return static_cast<double>(atoms[i].multiplicity) / n; }
  double total() const {
    int c = 0;
    for (const auto& a : atoms) c += a.multiplicity;
    return static_cast<double>(c) / n;
  }
};

inline EmpiricalMeasure spectral_measure(const CMat& u, double atom_tol = 1e-9) {
  const UnitaryEig e = unitary_eigphases(u);
  EmpiricalMeasure mu;
  mu.n = static_cast<int>(u.rows());
  for (Eigen::Index j = 0; j < e.phases.size(); ++j) {
    const double ph = e.phases(j);
    bool merged = false;
    for (auto& a : mu.atoms) {
      if (circ_dist(a.phase, ph) <= atom_tol) {
        ++a.multiplicity;
        merged = true;
        break;
      }
    }
    if (!merged) mu.atoms.push_back({ph, 1});
  }
  return mu;
}

/// Number of eigenvalues (with multiplicity) on the closed arc
/// {e^{is} : |s - center| <= halfwidth}.
inline int arc_count(const EmpiricalMeasure& mu, double center, double halfwidth) {
  int c = 0;
  for (const auto& a : mu.atoms) {
    if (circ_dist(a.phase, center) <= halfwidth + 1e-12) c += a.multiplicity;
  }
  return c;
}

inline double arc_mass(const EmpiricalMeasure& mu, double center, double halfwidth) {
  if (!(halfwidth > 0.0 && halfwidth < kPi)) throw Error(ErrorKind::InvalidParams, "halfwidth must lie in (0, pi)");
  return static_cast<double>(arc_count(mu, center, halfwidth)) / mu.n;
}

/// Eigenvalues whose circular distance to an arc edge is below `tol`.
inline int boundary_count(const EmpiricalMeasure& mu, double center, double halfwidth, double tol) {
  int c = 0;
  for (const auto& a : mu.atoms) {
    if (std::abs(circ_dist(a.phase, center) - halfwidth) < tol) c += a.multiplicity;
  }
  return c;
}

// ---------------------------------------------------------------------------
// Concentration of the spectral measure on the two Ex2 arcs

struct ConcentrationRow {
  double t = 0.0;
  int dim = 0;                 // N
  int i_count = 0;             // eigenvalues in I_t (center t theta0)
  int j_count = 0;             // eigenvalues in J_t (center -t theta0/(n-1))
  double i_mass = 0.0;
  double j_mass = 0.0;
  // |i_count/N - 1/n| = i_dev_num / i_dev_den, exact
  long i_dev_num = 0;
  long i_dev_den = 1;
  long j_dev_num = 0;
  long j_dev_den = 1;
  double i_dev = 0.0;
  double j_dev = 0.0;
  int boundary = 0;            // eigenvalues within 1e-9 of an arc edge
  bool i_within = true;        // i_dev < 5 eps / 64
  bool j_within = true;        // j_dev < 5 eps / 64
};

struct ConcentrationReport {
  int n = 0;
  double theta0 = 0.0;
  double eps = 0.0;
  double bound = 0.0;               // 5 eps / 64
  double perturbation_norm = 0.0;   // as measured by the caller
  std::vector<ConcentrationRow> rows;
  bool i_all_within = true;
  bool j_all_within = true;
};

/// Arc masses of I_t = [t theta0 - eps/2, t theta0 + eps/2] and
/// J_t = [-t theta0/(n-1) - eps/2, -t theta0/(n-1) + eps/2] under the spectral
/// measure of v(t), with exact rational deviations from 1/n and (n-1)/n.
inline ConcentrationReport measure_concentration_report(const UnitaryPath& v, int n, double theta0,
                                                        const std::vector<double>& t_values, double eps,
                                                        double perturbation_norm = 0.0) {
  if (n < 3) throw Error(ErrorKind::InvalidParams, "n must be >= 3");
  if (!(eps > 0.0 && eps < kPi)) throw Error(ErrorKind::InvalidParams, "eps must lie in (0, pi)");
  ConcentrationReport rep;
  rep.n = n;
  rep.theta0 = theta0;
  rep.eps = eps;
  rep.bound = 5.0 * eps / 64.0;
  rep.perturbation_norm = perturbation_norm;
  const double lo = 1.0 / static_cast<double>(n - 1);
  for (double t : t_values) {
    if (t < lo - 1e-12 || t > 1.0 + 1e-12) {
      throw Error(ErrorKind::InvalidParams, "t = " + std::to_string(t) + " outside [1/(n-1), 1]");
    }
    const EmpiricalMeasure mu = spectral_measure(v.at(t));
    ConcentrationRow row;
    row.t = t;
    row.dim = mu.n;
    const double ci = t * theta0;
    const double cj = -t * theta0 / static_cast<double>(n - 1);
    row.i_count = arc_count(mu, ci, 0.5 * eps);
    row.j_count = arc_count(mu, cj, 0.5 * eps);
    row.i_mass = static_cast<double>(row.i_count) / row.dim;
    row.j_mass = static_cast<double>(row.j_count) / row.dim;
    const long nn = n, dd = row.dim;
    auto reduce = [](long num, long den, long& on, long& od) {
      const long g = std::gcd(num, den);
      on = num / (g == 0 ? 1 : g);
      od = den / (g == 0 ? 1 : g);
    };
    reduce(std::abs(row.i_count * nn - dd), dd * nn, row.i_dev_num, row.i_dev_den);
    reduce(std::abs(row.j_count * nn - (nn - 1) * dd), dd * nn, row.j_dev_num, row.j_dev_den);
    row.i_dev = static_cast<double>(row.i_dev_num) / static_cast<double>(row.i_dev_den);
    row.j_dev = static_cast<double>(row.j_dev_num) / static_cast<double>(row.j_dev_den);
    row.boundary = boundary_count(mu, ci, 0.5 * eps, 1e-9) + boundary_count(mu, cj, 0.5 * eps, 1e-9);
    row.i_within = row.i_dev < rep.bound;
    row.j_within = row.j_dev < rep.bound;
    rep.i_all_within = rep.i_all_within && row.i_within;
    rep.j_all_within = rep.j_all_within && row.j_within;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace celkit
