#pragma once

// Dense complex matrix kernel: Hermitian / unitary eigendecomposition,
// exp(iH), principal logarithm of a unitary, operator norm, normalized trace.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "celkit/error.hpp"

namespace celkit {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Default tolerance for Hermitian / unitary defects.
inline constexpr double kDefaultTol = 1e-8;

/// Maps an angle to (-pi, pi].
inline double wrap_phase(double x) {
  double y = std::remainder(x, kTwoPi);
  if (y <= -kPi) y += kTwoPi;
  return y;
}

/// Circular (arc) distance between two angles, in [0, pi].
inline double circ_dist(double a, double b) { return std::abs(wrap_phase(a - b)); }

/// Chord distance |e^{ia} - e^{ib}|.
inline double chord(double a, double b) { return 2.0 * std::abs(std::sin(0.5 * wrap_phase(a - b))); }

inline CMat identity(Eigen::Index n) { return CMat::Identity(n, n); }

/// Largest singular value.
inline double op_norm(const CMat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(a);
  return svd.singularValues()(0);
}

/// (1/n) * sum of the diagonal.
inline cplx normalized_trace(const CMat& a) {
  return a.trace() / static_cast<double>(a.rows());
}

struct HermCheckReport {
  double hermitian_defect = 0.0;  // ||A - A*||
  double unitary_defect = 0.0;    // ||A*A - I||
};

inline double hermitian_defect(const CMat& a) { return op_norm(a - a.adjoint()); }

inline double unitary_defect(const CMat& a) {
  return op_norm(a.adjoint() * a - identity(a.rows()));
}

inline HermCheckReport check_matrix(const CMat& a) {
  return {hermitian_defect(a), unitary_defect(a)};
}

inline bool all_finite(const CMat& a) { return a.allFinite(); }

inline CMat hermitize(const CMat& a) { return 0.5 * (a + a.adjoint()); }

struct HermEig {
  RVec values;   // ascending
  CMat vectors;  // orthonormal columns
};

inline HermEig herm_eig(const CMat& h, double tol = kDefaultTol) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw Error(ErrorKind::InvalidParams, "herm_eig expects a nonempty square matrix");
  }
  if (!all_finite(h)) throw Error(ErrorKind::InvalidParams, "matrix has non-finite entries");
  const double defect = hermitian_defect(h);
  if (defect > tol) {
    throw Error(ErrorKind::NotHermitian, "hermitian defect " + std::to_string(defect));
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(h));
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::ConvergenceFailure, "Hermitian eigensolver did not converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

struct UnitaryEig {
  RVec phases;   // ascending, each in (-pi, pi]
  CMat vectors;  // orthonormal columns
};

/// Eigenphases of a unitary via its complex Schur form (diagonal for normal
/// matrices, so the Schur vectors are eigenvectors).
inline UnitaryEig unitary_eigphases(const CMat& u, double tol = kDefaultTol) {
  if (u.rows() != u.cols() || u.rows() == 0) {
    throw Error(ErrorKind::InvalidParams, "unitary_eigphases expects a nonempty square matrix");
  }
  if (!all_finite(u)) throw Error(ErrorKind::InvalidParams, "matrix has non-finite entries");
  const double defect = unitary_defect(u);
  if (defect > tol) {
    throw Error(ErrorKind::NotUnitary, "unitary defect " + std::to_string(defect));
  }
  const Eigen::Index n = u.rows();
  Eigen::ComplexSchur<CMat> schur(u);
  if (schur.info() != Eigen::Success) {
    throw Error(ErrorKind::ConvergenceFailure, "Schur decomposition did not converge");
  }
  const CMat& t = schur.matrixT();
  const CMat& q = schur.matrixU();
  std::vector<double> raw(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) raw[j] = wrap_phase(std::arg(t(j, j)));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return raw[a] < raw[b]; });
  UnitaryEig out{RVec(n), CMat(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.phases(j) = raw[order[j]];
    out.vectors.col(j) = q.col(order[j]);
  }
  return out;
}

/// V diag(e^{i phases}) V*.
inline CMat compose_unitary(const CMat& vectors, const RVec& phases) {
  CVec d(phases.size());
  for (Eigen::Index j = 0; j < phases.size(); ++j) d(j) = std::polar(1.0, phases(j));
  return vectors * d.asDiagonal() * vectors.adjoint();
}

/// V diag(values) V*.
inline CMat compose_hermitian(const CMat& vectors, const RVec& values) {
  return hermitize(vectors * values.cast<cplx>().asDiagonal() * vectors.adjoint());
}

/// exp(iH) for Hermitian H.
inline CMat mat_exp_i(const CMat& h, double tol = kDefaultTol) {
  const HermEig e = herm_eig(h, tol);
  return compose_unitary(e.vectors, e.values);
}

/// Hermitian H with exp(iH) = U and spectrum in (-pi, pi).  Throws
/// BranchCutHit when an eigenphase is within `gap_tol` of +-pi.
inline CMat principal_log_unitary(const CMat& u, double gap_tol, double tol = kDefaultTol) {
  const UnitaryEig e = unitary_eigphases(u, tol);
  for (Eigen::Index j = 0; j < e.phases.size(); ++j) {
    if (kPi - std::abs(e.phases(j)) < gap_tol) {
      throw Error(ErrorKind::BranchCutHit,
                  "eigenphase " + std::to_string(e.phases(j)) + " within gap of -1");
    }
  }
  return compose_hermitian(e.vectors, e.phases);
}

inline cplx determinant(const CMat& a) { return a.determinant(); }

}  // namespace celkit
