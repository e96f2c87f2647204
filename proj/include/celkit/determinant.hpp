#pragma once

// de la Harpe-Skandalis determinant of unitary paths in M_n with the
// normalized trace: Det(u) = (1/2 pi i) int tr(u'(t) u(t)*) dt, computed as a
// telescoping sum of principal logarithms.  Values are canonical modulo the
// trace lattice (1/n)Z.

#include <cmath>
#include <string>
#include <vector>

#include "celkit/pathalg.hpp"

namespace celkit {

struct TraceLattice {
  Eigen::Index n = 1;

  double modulus() const { return 1.0 / static_cast<double>(n); }

  /// value - floor(value * n) / n, in [0, 1/n).
  double residue(double value) const {
    const double nn = static_cast<double>(n);
    double r = value - std::floor(value * nn) / nn;
    if (r >= modulus()) r -= modulus();
    if (r < 0.0) r += modulus();
    // a value a rounding error below a lattice point belongs to that point
    if (modulus() - r < 1e-12) r = 0.0;
    return r;
  }

  /// Distance from `value` to the nearest lattice point.
  double distance(double value) const {
    const double nn = static_cast<double>(n);
    return std::abs(value * nn - std::round(value * nn)) / nn;
  }
};

struct DetReport {
  double value = 0.0;
  TraceLattice lattice;
  double residue = 0.0;
  std::vector<double> cumulative;  // running Det after each grid point
};

struct RotationNumber {
  double value = 0.0;
  TraceLattice lattice;
};

inline constexpr double kStepGapTol = 1e-6;

/// Det of the path from P(0) to P(1).  Throws BranchCutHit when a step
/// U_i* U_{i+1} has an eigenvalue near -1 (grid too coarse: refine).
inline DetReport dls_determinant(const UnitaryPath& p) {
  DetReport rep;
  rep.lattice = {p.n()};
  rep.cumulative.reserve(p.size());
  rep.cumulative.push_back(0.0);
  double acc = 0.0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    const UnitaryEig e = unitary_eigphases(p[i - 1].adjoint() * p[i]);
    for (Eigen::Index j = 0; j < e.phases.size(); ++j) {
      if (kPi - std::abs(e.phases(j)) < kStepGapTol) {
        throw Error(ErrorKind::BranchCutHit, "step " + std::to_string(i) + " has eigenvalue at -1; refine");
      }
    }
    acc += e.phases.sum() / static_cast<double>(p.n()) / kTwoPi;
    rep.cumulative.push_back(acc);
  }
  rep.value = acc;
  rep.residue = rep.lattice.residue(acc);
  return rep;
}

inline RotationNumber rotation_number(const CMat& u, const CMat& v, const UnitaryPath& connecting,
                                      double tol = 1e-8) {
  if (op_norm(connecting.front() - u) > tol || op_norm(connecting.back() - v) > tol) {
    throw Error(ErrorKind::EndpointMismatch, "connecting path does not run from u to v");
  }
  return {dls_determinant(connecting).value, TraceLattice{u.rows()}};
}

/// Unwrapped phase change of det P(t) along the grid, in full turns.
inline double det_winding(const UnitaryPath& p, double tol = 1e-8) {
  double total = 0.0;
  cplx prev = determinant(p[0]);
  if (std::abs(std::abs(prev) - 1.0) > tol) throw Error(ErrorKind::NotUnitary, "|det P(0)| != 1");
  for (std::size_t i = 1; i < p.size(); ++i) {
    const cplx cur = determinant(p[i]);
    if (std::abs(std::abs(cur) - 1.0) > tol) {
      throw Error(ErrorKind::NotUnitary, "|det| != 1 at index " + std::to_string(i));
    }
    const double jump = std::arg(cur / prev);
    if (std::abs(jump) >= kPi - 1e-12) {
      throw Error(ErrorKind::AliasedPhase, "det phase jumps by >= pi at index " + std::to_string(i));
    }
    total += jump;
    prev = cur;
  }
  return total / kTwoPi;
}

struct CuReport {
  bool member = true;
  double worst_defect = 0.0;  // max_t |det P(t) - 1|
  std::size_t worst_index = 0;
};

/// det P(t) = 1 at every grid point (within tol): the CU criterion for
/// C([0,1], M_n).
inline CuReport cu_membership(const UnitaryPath& p, double tol = 1e-8) {
  CuReport rep;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::abs(determinant(p[i]) - 1.0);
    if (d > rep.worst_defect) {
      rep.worst_defect = d;
      rep.worst_index = i;
    }
  }
  rep.member = rep.worst_defect <= tol;
  return rep;
}

struct TrivCheck {
  double residual = 0.0;     // distance of the identity's left side to (1/n)Z
  double rotation = 0.0;     // R_{u,v}
  double log_term = 0.0;     // (1/2 pi i) tr log(u w* v* w)
};

/// Residual of R_{u,v} + (1/2 pi i) tr log(u w* v* w) modulo (1/n)Z.
///
/// The sign is the one consistent with Det(t -> e^{2 pi i t}) = 1: the
/// commutator-type loop u -> w* v w -> v contributes -(1/2 pi i) tr log(u w* v* w)
/// along its first leg and a lattice element along the conjugation leg.
inline TrivCheck check_triv_identity(const CMat& u, const CMat& v, const CMat& w,
                                     const UnitaryPath& connecting, double tol = 1e-9) {
  const Eigen::Index n = u.rows();
  const CMat x = u * w.adjoint() * v.adjoint() * w;
  if (op_norm(x - identity(n)) >= 2.0 - tol) {
    throw Error(ErrorKind::LogUndefined, "||u w* v* w - 1|| is not < 2");
  }
  const CMat h = principal_log_unitary(x, 1e-12);
  TrivCheck out;
  out.rotation = rotation_number(u, v, connecting).value;
  out.log_term = normalized_trace(h).real() / kTwoPi;
  out.residual = TraceLattice{n}.distance(out.rotation + out.log_term);
  return out;
}

}  // namespace celkit
