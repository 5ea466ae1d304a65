#pragma once

// Geometry of the vacuum manifold N = { sqrt(3/2) (n n - I/3) : |n| = 1 },
// a copy of the real projective plane sitting on the unit sphere of S0.

#include <cmath>
#include <numbers>
#include <span>

#include "ldg/qtensor.hpp"

namespace ldg {

inline constexpr double sqrt_three_halves = 1.22474487139158904909;

/// The double cover S^2 -> N.
inline QTensor phi(const Vec3& n) {
  if (std::abs(norm(n) - 1.0) > 1e-10) throw Error(ErrorCode::NonUnitVector, "phi() needs |n| = 1");
  Mat3 m{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m[i][j] = sqrt_three_halves * (n[i] * n[j] - (i == j ? 1.0 / 3.0 : 0.0));
  return QTensor::from_matrix(m);
}

/// Nearest point of N, i.e. phi of the leading eigenvector. Undefined on the
/// set where the leading eigenvalue is not simple.
inline QTensor project_to_N(const QTensor& q) {
  const Eigensystem es = eigensystem(q);
  const double gap = es.values[0] - es.values[1];
  if (q.norm() < tol_zero || gap <= tol_degenerate_rel * q.norm())
    throw Error(ErrorCode::ProjectionUndefined, "leading eigenvalue is not simple");
  return phi(es.vectors[0]);
}

/// dist(Q, N)^2 = |Q|^2 + 1 - sqrt(6) lambda_1(Q). Near N the leading
/// eigenvalue is simple and |Q - phi(v_1)| is evaluated directly instead.
inline double dist_to_N(const QTensor& q) {
  if (q.norm() < tol_zero) return 1.0;
  const Eigensystem es = eigensystem(q);
  const double d2 = q.norm2() + 1.0 - std::sqrt(6.0) * es.values[0];
  if (d2 < 0.25 && es.values[0] - es.values[1] > 0.1) return (q - phi(es.vectors[0])).norm();
  return std::sqrt(std::max(0.0, d2));
}

inline Vec3 geodesic_director(double theta) {
  const double half = 0.5 * std::fmod(theta, 2.0 * std::numbers::pi);
  return {std::cos(half), std::sin(half), 0.0};
}

/// The minimal non-contractible loop c(theta) = phi(n0(theta)), n0 rotating at
/// half speed in the x-y plane.
inline QTensor geodesic_loop(double theta) { return phi(geodesic_director(theta)); }

/// Minimal Dirichlet cost (1/2) int |c'|^2 of a non-trivial loop in N.
inline constexpr double kappa_star() { return 0.75 * std::numbers::pi; }

/// Length of the minimal non-trivial loop, sqrt(4 pi kappa*) = pi sqrt(3).
inline double minimal_loop_length() { return std::sqrt(4.0 * std::numbers::pi * kappa_star()); }

enum class HomotopyClass { Trivial, Nontrivial };

struct LiftOptions {
  double max_distance = 0.5;  // samples must lie in this neighbourhood of N
  double min_overlap = 0.7;   // |n_i . n_{i+1}| threshold for unambiguous sign continuation
};

/// Free homotopy class of a closed loop sampled near N (the sequence is
/// treated as cyclic). The leading eigenvector is continued through the
/// double cover; the loop is non-trivial iff the lift comes back antipodal.
inline HomotopyClass homotopy_class(std::span<const QTensor> loop, const LiftOptions& opts = {}) {
  if (loop.empty()) return HomotopyClass::Trivial;
  auto leading = [&](const QTensor& q) {
    if (dist_to_N(q) >= opts.max_distance)
      throw Error(ErrorCode::TooFarFromManifold, "loop sample farther than the lifting radius from N");
    const Eigensystem es = eigensystem(q);
    if (es.values[0] - es.values[1] <= tol_degenerate_rel * q.norm())
      throw Error(ErrorCode::ProjectionUndefined, "loop sample has a degenerate leading eigenvalue");
    return es.vectors[0];
  };
  const Vec3 start = leading(loop[0]);
  Vec3 current = start;
  for (std::size_t i = 1; i <= loop.size(); ++i) {
    Vec3 next = leading(loop[i % loop.size()]);
    const double overlap = dot(current, next);
    if (std::abs(overlap) <= opts.min_overlap)
      throw Error(ErrorCode::SamplingTooCoarse, "consecutive loop samples are too far apart to lift");
    if (overlap < 0) next = scaled(next, -1.0);
    current = next;
  }
  return dot(current, start) < 0 ? HomotopyClass::Nontrivial : HomotopyClass::Trivial;
}

}  // namespace ldg
