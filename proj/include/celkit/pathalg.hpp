#pragma once

// Grid-sampled unitary paths, Hermitian paths, exponential factorizations
// u = prod_j exp(i h_j) and the straight-line homotopy
// u_s = prod_j exp(i h_j (1 - s)).

#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "celkit/matcore.hpp"

namespace celkit {

/// Strictly increasing points with endpoints exactly 0 and 1.
class Grid {
 public:
  Grid() : points_{0.0, 1.0} {}

  explicit Grid(std::vector<double> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw Error(ErrorKind::InvalidGrid, "grid needs at least two points");
    if (points_.front() != 0.0 || points_.back() != 1.0) {
      throw Error(ErrorKind::InvalidGrid, "grid endpoints must be exactly 0 and 1");
    }
    for (std::size_t i = 1; i < points_.size(); ++i) {
      if (!(points_[i] > points_[i - 1])) {
        throw Error(ErrorKind::InvalidGrid, "grid not strictly increasing at index " + std::to_string(i));
      }
    }
  }

  /// `count` equally spaced points; count = 2^8 + 1 by default.
  static Grid uniform(std::size_t count = 257) {
    if (count < 2) throw Error(ErrorKind::InvalidGrid, "uniform grid needs at least two points");
    std::vector<double> p(count);
    const double denom = static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) p[i] = static_cast<double>(i) / denom;
    p.back() = 1.0;
    return Grid(std::move(p));
  }

  /// Every interval split into `factor` equal pieces; original points kept.
  Grid refined(int factor) const {
    if (factor < 2) throw Error(ErrorKind::InvalidParams, "refinement factor must be >= 2");
    std::vector<double> p;
    p.reserve((points_.size() - 1) * static_cast<std::size_t>(factor) + 1);
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      p.push_back(points_[i]);
      for (int k = 1; k < factor; ++k) {
        p.push_back(points_[i] + (points_[i + 1] - points_[i]) * k / static_cast<double>(factor));
      }
    }
    p.push_back(points_.back());
    return Grid(std::move(p));
  }

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  const std::vector<double>& points() const { return points_; }

  /// Index of the point equal to t within `tol`, if any.
  std::optional<std::size_t> find(double t, double tol = 1e-12) const {
    auto it = std::lower_bound(points_.begin(), points_.end(), t - tol);
    if (it != points_.end() && std::abs(*it - t) <= tol) {
      return static_cast<std::size_t>(it - points_.begin());
    }
    return std::nullopt;
  }

  bool operator==(const Grid&) const = default;

 private:
  std::vector<double> points_;
};

using MatrixFn = std::function<CMat(double)>;

/// Unitary samples on a grid, optionally backed by an analytic generator so
/// that refinement re-evaluates instead of interpolating.
class UnitaryPath {
 public:
  UnitaryPath() = default;

  static UnitaryPath from_samples(Grid grid, std::vector<CMat> samples, double tol = kDefaultTol) {
    return UnitaryPath(std::move(grid), std::move(samples), MatrixFn{}, tol);
  }

  /// Samples that were already produced by `gen` on `grid`.
  static UnitaryPath from_parts(Grid grid, std::vector<CMat> samples, MatrixFn gen,
                                double tol = kDefaultTol) {
    return UnitaryPath(std::move(grid), std::move(samples), std::move(gen), tol);
  }

  static UnitaryPath from_generator(Grid grid, MatrixFn gen, double tol = kDefaultTol) {
    std::vector<CMat> samples;
    samples.reserve(grid.size());
    for (double t : grid.points()) samples.push_back(gen(t));
    return UnitaryPath(std::move(grid), std::move(samples), std::move(gen), tol);
  }

  Eigen::Index n() const { return samples_.empty() ? 0 : samples_.front().rows(); }
  const Grid& grid() const { return grid_; }
  std::size_t size() const { return samples_.size(); }
  const CMat& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<CMat>& samples() const { return samples_; }
  const CMat& front() const { return samples_.front(); }
  const CMat& back() const { return samples_.back(); }
  bool has_generator() const { return static_cast<bool>(gen_); }
  const MatrixFn& generator() const { return gen_; }

  /// Value at an arbitrary t: generator if present, grid sample if t is a
  /// grid point, otherwise geodesic interpolation between neighbours.
  CMat at(double t) const;

 private:
  UnitaryPath(Grid grid, std::vector<CMat> samples, MatrixFn gen, double tol)
      : grid_(std::move(grid)), samples_(std::move(samples)), gen_(std::move(gen)) {
    if (samples_.size() != grid_.size()) {
      throw Error(ErrorKind::InvalidParams, "sample count does not match grid size");
    }
    const Eigen::Index dim = samples_.front().rows();
    if (dim == 0) throw Error(ErrorKind::InvalidParams, "empty matrices");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const CMat& s = samples_[i];
      if (s.rows() != dim || s.cols() != dim) {
        throw Error(ErrorKind::InvalidParams, "inconsistent sample dimension at index " + std::to_string(i));
      }
      if (!all_finite(s)) throw Error(ErrorKind::InvalidParams, "non-finite sample at index " + std::to_string(i));
      const double d = unitary_defect(s);
      if (d > tol) {
        throw Error(ErrorKind::NotUnitary,
                    "sample " + std::to_string(i) + " has unitary defect " + std::to_string(d));
      }
      if (i > 0 && op_norm(s - samples_[i - 1]) >= 2.0) {
        throw Error(ErrorKind::AliasedPath, "successive samples " + std::to_string(i - 1) + "," +
                                                std::to_string(i) + " differ by >= 2");
      }
    }
  }

  Grid grid_;
  std::vector<CMat> samples_;
  MatrixFn gen_;
};

/// U exp(i theta L) with L the principal log of U* V; theta in [0,1].
inline CMat geodesic_point(const CMat& u, const CMat& v, double theta, double gap_tol = 1e-9) {
  const CMat l = principal_log_unitary(u.adjoint() * v, gap_tol);
  return u * mat_exp_i(theta * l);
}

inline CMat UnitaryPath::at(double t) const {
  if (gen_) return gen_(t);
  if (auto idx = grid_.find(t)) return samples_[*idx];
  if (t < 0.0 || t > 1.0) throw Error(ErrorKind::InvalidParams, "t outside [0,1]");
  const auto& p = grid_.points();
  const std::size_t hi = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), t) - p.begin());
  const std::size_t lo = hi - 1;
  const double theta = (t - p[lo]) / (p[hi] - p[lo]);
  return geodesic_point(samples_[lo], samples_[hi], theta);
}

/// Geodesic path u exp(i s log(u* v)) sampled on `grid`.
inline UnitaryPath geodesic_path(const CMat& u, const CMat& v, const Grid& grid, double gap_tol = 1e-9) {
  const CMat l = principal_log_unitary(u.adjoint() * v, gap_tol);
  return UnitaryPath::from_generator(grid, [u, l](double s) -> CMat { return u * mat_exp_i(s * l); });
}

inline UnitaryPath constant_path(const CMat& u, const Grid& grid) {
  return UnitaryPath::from_generator(grid, [u](double) { return u; });
}

/// Sum of chord norms ||U_{i+1} - U_i|| over the grid; a lower bound for the
/// rectifiable length that increases under refinement.
inline double path_length(const UnitaryPath& p) {
  double total = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) total += op_norm(p[i] - p[i - 1]);
  return total;
}

inline double max_step(const UnitaryPath& p) {
  double m = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) m = std::max(m, op_norm(p[i] - p[i - 1]));
  return m;
}

/// Grid refined by `factor`; original samples are kept, new ones come from
/// the generator or from geodesic interpolation.
inline UnitaryPath refine(const UnitaryPath& p, int factor) {
  const Grid fine = p.grid().refined(factor);
  if (p.has_generator()) {
    std::vector<CMat> samples;
    samples.reserve(fine.size());
    std::size_t coarse = 0;
    for (std::size_t i = 0; i < fine.size(); ++i) {
      if (i % static_cast<std::size_t>(factor) == 0) {
        samples.push_back(p[coarse++]);
      } else {
        samples.push_back(p.generator()(fine[i]));
      }
    }
    return UnitaryPath::from_parts(fine, std::move(samples), p.generator());
  }
  std::vector<CMat> samples;
  samples.reserve(fine.size());
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    samples.push_back(p[i]);
    const CMat l = principal_log_unitary(p[i].adjoint() * p[i + 1], 1e-9);
    for (int k = 1; k < factor; ++k) {
      samples.push_back(p[i] * mat_exp_i((k / static_cast<double>(factor)) * l));
    }
  }
  samples.push_back(p.back());
  return UnitaryPath::from_samples(fine, std::move(samples));
}

/// p on [0,1/2] followed by q on [1/2,1]; requires p(1) = q(0).
inline UnitaryPath concatenate(const UnitaryPath& p, const UnitaryPath& q, double tol = 1e-8) {
  if (op_norm(p.back() - q.front()) > tol) {
    throw Error(ErrorKind::EndpointMismatch, "concatenate: p(1) != q(0)");
  }
  std::vector<double> pts;
  std::vector<CMat> samples;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pts.push_back(0.5 * p.grid()[i]);
    samples.push_back(p[i]);
  }
  for (std::size_t i = 1; i < q.size(); ++i) {
    pts.push_back(0.5 + 0.5 * q.grid()[i]);
    samples.push_back(q[i]);
  }
  pts.back() = 1.0;
  MatrixFn gen;
  if (p.has_generator() && q.has_generator()) {
    gen = [pg = p.generator(), qg = q.generator()](double t) -> CMat {
      return t <= 0.5 ? pg(2.0 * t) : qg(2.0 * t - 1.0);
    };
  }
  return UnitaryPath::from_parts(Grid(std::move(pts)), std::move(samples), std::move(gen));
}

/// Time-reversed path t -> p(1 - t).
inline UnitaryPath reverse(const UnitaryPath& p) {
  std::vector<double> pts;
  std::vector<CMat> samples;
  for (std::size_t i = p.size(); i-- > 0;) {
    pts.push_back(1.0 - p.grid()[i]);
    samples.push_back(p[i]);
  }
  pts.front() = 0.0;
  pts.back() = 1.0;
  MatrixFn gen;
  if (p.has_generator()) gen = [g = p.generator()](double t) { return g(1.0 - t); };
  return UnitaryPath::from_parts(Grid(std::move(pts)), std::move(samples), std::move(gen));
}

/// Pointwise product p(t) q(t) on a common grid.
inline UnitaryPath multiply(const UnitaryPath& p, const UnitaryPath& q) {
  if (!(p.grid() == q.grid())) throw Error(ErrorKind::InvalidParams, "multiply: grids differ");
  std::vector<CMat> samples;
  samples.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) samples.push_back(p[i] * q[i]);
  MatrixFn gen;
  if (p.has_generator() && q.has_generator()) {
    gen = [pg = p.generator(), qg = q.generator()](double t) -> CMat { return pg(t) * qg(t); };
  }
  return UnitaryPath::from_parts(p.grid(), std::move(samples), std::move(gen));
}

/// Hermitian-valued samples on a grid (the h_j of a factorization).
class HermitianPath {
 public:
  HermitianPath() = default;

  static HermitianPath from_samples(Grid grid, std::vector<CMat> samples, double tol = kDefaultTol) {
    return HermitianPath(std::move(grid), std::move(samples), MatrixFn{}, tol);
  }

  static HermitianPath from_generator(Grid grid, MatrixFn gen, double tol = kDefaultTol) {
    std::vector<CMat> samples;
    samples.reserve(grid.size());
    for (double t : grid.points()) samples.push_back(gen(t));
    return HermitianPath(std::move(grid), std::move(samples), std::move(gen), tol);
  }

  Eigen::Index n() const { return samples_.empty() ? 0 : samples_.front().rows(); }
  const Grid& grid() const { return grid_; }
  std::size_t size() const { return samples_.size(); }
  const CMat& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<CMat>& samples() const { return samples_; }
  bool has_generator() const { return static_cast<bool>(gen_); }
  const MatrixFn& generator() const { return gen_; }

  CMat at(double t) const {
    if (gen_) return gen_(t);
    if (auto idx = grid_.find(t)) return samples_[*idx];
    throw Error(ErrorKind::InvalidParams, "HermitianPath::at: t is not a grid point and no generator");
  }

  /// max_t ||h(t)|| over the grid.
  double sup_norm() const {
    double m = 0.0;
    for (const CMat& s : samples_) m = std::max(m, op_norm(s));
    return m;
  }

 private:
  HermitianPath(Grid grid, std::vector<CMat> samples, MatrixFn gen, double tol)
      : grid_(std::move(grid)), samples_(std::move(samples)), gen_(std::move(gen)) {
    if (samples_.size() != grid_.size()) {
      throw Error(ErrorKind::InvalidParams, "sample count does not match grid size");
    }
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (!all_finite(samples_[i])) {
        throw Error(ErrorKind::InvalidParams, "non-finite sample at index " + std::to_string(i));
      }
      const double d = hermitian_defect(samples_[i]);
      if (d > tol) {
        throw Error(ErrorKind::NotHermitian,
                    "sample " + std::to_string(i) + " has hermitian defect " + std::to_string(d));
      }
    }
  }

  Grid grid_;
  std::vector<CMat> samples_;
  MatrixFn gen_;
};

/// u = prod_j exp(i h_j), terms applied left to right.
struct ExpFactorization {
  std::vector<HermitianPath> terms;
  double total_norm = 0.0;  // sum_j sup_t ||h_j(t)||

  ExpFactorization() = default;

  explicit ExpFactorization(std::vector<HermitianPath> ts) : terms(std::move(ts)) {
    if (terms.empty()) throw Error(ErrorKind::InvalidParams, "factorization needs at least one term");
    for (const auto& h : terms) {
      if (!(h.grid() == terms.front().grid()) || h.n() != terms.front().n()) {
        throw Error(ErrorKind::InvalidParams, "factorization terms must share grid and dimension");
      }
      total_norm += h.sup_norm();
    }
  }

  const Grid& grid() const { return terms.front().grid(); }
  Eigen::Index n() const { return terms.front().n(); }
  bool has_generator() const {
    return std::all_of(terms.begin(), terms.end(), [](const HermitianPath& h) { return h.has_generator(); });
  }

  /// u_s(t) = prod_j exp(i h_j(t) (1 - s)).
  CMat value(double t, double s) const {
    CMat out = identity(n());
    for (const auto& h : terms) out = out * mat_exp_i((1.0 - s) * h.at(t));
    return out;
  }

  CMat value_at_index(std::size_t ti, double s) const {
    CMat out = identity(n());
    for (const auto& h : terms) out = out * mat_exp_i((1.0 - s) * h[ti]);
    return out;
  }
};

/// The path t -> u_s(t).  s = 0 reproduces u, s = 1 is the constant identity.
inline UnitaryPath eval_factorization(const ExpFactorization& f, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorKind::InvalidParams, "s must lie in [0,1]");
  std::vector<CMat> samples;
  samples.reserve(f.grid().size());
  for (std::size_t i = 0; i < f.grid().size(); ++i) samples.push_back(f.value_at_index(i, s));
  MatrixFn gen;
  if (f.has_generator()) gen = [f, s](double t) { return f.value(t, s); };
  return UnitaryPath::from_parts(f.grid(), std::move(samples), std::move(gen));
}

/// W(t, s) = u_s(t) sampled on a (t, s) grid pair; samples[s_index][t_index].
struct Homotopy {
  Grid t_grid;
  Grid s_grid;
  std::vector<std::vector<CMat>> samples;

  /// Fixed-s slice, a path in t.
  UnitaryPath t_slice(std::size_t si) const { return UnitaryPath::from_samples(t_grid, samples[si]); }

  /// Fixed-t slice, a path in s.
  UnitaryPath s_slice(std::size_t ti) const {
    std::vector<CMat> col;
    col.reserve(samples.size());
    for (const auto& row : samples) col.push_back(row[ti]);
    return UnitaryPath::from_samples(s_grid, std::move(col));
  }
};

inline Homotopy build_homotopy(const ExpFactorization& f, const Grid& s_grid) {
  Homotopy h{f.grid(), s_grid, {}};
  h.samples.reserve(s_grid.size());
  for (double s : s_grid.points()) {
    std::vector<CMat> row;
    row.reserve(f.grid().size());
    for (std::size_t i = 0; i < f.grid().size(); ++i) row.push_back(f.value_at_index(i, s));
    h.samples.push_back(std::move(row));
  }
  return h;
}

/// Length of s -> W(., s) in the sup-over-grid norm (chord sum, lower bound).
inline double homotopy_length(const Homotopy& h) {
  double total = 0.0;
  for (std::size_t si = 1; si < h.samples.size(); ++si) {
    double step = 0.0;
    for (std::size_t ti = 0; ti < h.t_grid.size(); ++ti) {
      step = std::max(step, op_norm(h.samples[si][ti] - h.samples[si - 1][ti]));
    }
    total += step;
  }
  return total;
}

struct LipschitzReport {
  double worst_ratio = 0.0;  // max ||u_{s1}(t) - u_{s2}(t)|| / (r |s1 - s2|)
  double t = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  std::size_t checked = 0;
};

inline constexpr double kLipschitzSlack = 1e-6;

namespace detail {
inline void lipschitz_record(LipschitzReport& rep, double ratio, double t, double s1, double s2) {
  ++rep.checked;
  if (ratio > rep.worst_ratio) rep = {ratio, t, s1, s2, rep.checked};
}

inline void lipschitz_enforce(const LipschitzReport& rep) {
  if (rep.worst_ratio > 1.0 + kLipschitzSlack) {
    throw Error(ErrorKind::BoundViolated, "ratio " + std::to_string(rep.worst_ratio) + " at t=" +
                                              std::to_string(rep.t) + " s1=" + std::to_string(rep.s1) +
                                              " s2=" + std::to_string(rep.s2));
  }
}
}  // namespace detail

/// Checks ||u_{s1} - u_{s2}|| <= r |s1 - s2| (r = total_norm) over all pairs of
/// `samples` uniform s-levels and every grid t.
inline LipschitzReport lipschitz_check(const ExpFactorization& f, int samples) {
  if (samples < 2) throw Error(ErrorKind::InvalidParams, "lipschitz_check needs samples >= 2");
  const Grid sg = Grid::uniform(static_cast<std::size_t>(samples));
  const Homotopy h = build_homotopy(f, sg);
  LipschitzReport rep;
  const double r = f.total_norm;
  for (std::size_t a = 0; a < sg.size(); ++a) {
    for (std::size_t b = a + 1; b < sg.size(); ++b) {
      for (std::size_t ti = 0; ti < f.grid().size(); ++ti) {
        const double diff = op_norm(h.samples[a][ti] - h.samples[b][ti]);
        const double denom = r * (sg[b] - sg[a]);
        const double ratio = denom > 0.0 ? diff / denom : (diff > 0.0 ? INFINITY : 0.0);
        detail::lipschitz_record(rep, ratio, f.grid()[ti], sg[a], sg[b]);
      }
    }
  }
  detail::lipschitz_enforce(rep);
  return rep;
}

/// Same bound on `count` random (t, s1, s2) triples; t is drawn from [0,1]
/// when the factorization has generators, otherwise from the grid.
inline LipschitzReport lipschitz_check_random(const ExpFactorization& f, std::size_t count,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> idx(0, f.grid().size() - 1);
  const bool gen = f.has_generator();
  LipschitzReport rep;
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t ti = idx(rng);
    const double t = gen ? unit(rng) : f.grid()[ti];
    double s1 = unit(rng);
    double s2 = unit(rng);
    if (s1 == s2) continue;
    const CMat a = gen ? f.value(t, s1) : f.value_at_index(ti, s1);
    const CMat b = gen ? f.value(t, s2) : f.value_at_index(ti, s2);
    const double denom = f.total_norm * std::abs(s1 - s2);
    const double diff = op_norm(a - b);
    const double ratio = denom > 0.0 ? diff / denom : (diff > 0.0 ? INFINITY : 0.0);
    detail::lipschitz_record(rep, ratio, t, s1, s2);
  }
  detail::lipschitz_enforce(rep);
  return rep;
}

}  // namespace celkit
