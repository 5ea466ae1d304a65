#pragma once

// Algebra of the space S0 of 3x3 real symmetric traceless matrices.
//
// A QTensor is stored as five coefficients in the following orthonormal
// basis of S0 (orthonormal for the Frobenius product Q:P = sum_ij Q_ij P_ij):
//
//   E1 = (e1e1 - e2e2) / sqrt(2)
//   E2 = (2 e3e3 - e1e1 - e2e2) / sqrt(6)
//   E3 = (e1e2 + e2e1) / sqrt(2)
//   E4 = (e1e3 + e3e1) / sqrt(2)
//   E5 = (e2e3 + e3e2) / sqrt(2)
//
// Symmetry and tracelessness therefore hold by construction and the
// Euclidean norm of the coefficients is the Frobenius norm |Q|.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "ldg/errors.hpp"

namespace ldg {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

inline constexpr double tol_zero = 1e-12;
inline constexpr double tol_degenerate_rel = 1e-8;

namespace detail {
inline constexpr double inv_sqrt2 = 0.70710678118654752440;
inline constexpr double inv_sqrt6 = 0.40824829046386301637;
}  // namespace detail

// ---------------------------------------------------------------------------
// small dense helpers

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 scaled(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

inline Vec3 normalized(const Vec3& a) { return scaled(a, 1.0 / norm(a)); }

inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
  return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

inline Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
  return out;
}

inline Mat3 outer(const Vec3& a, const Vec3& b) {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = a[i] * b[j];
  return out;
}

// ---------------------------------------------------------------------------

struct QTensor {
  std::array<double, 5> c{};

  static QTensor zero() { return {}; }

  /// Orthogonal projection of an arbitrary 3x3 matrix onto S0.
  static QTensor from_matrix(const Mat3& m) {
    using namespace detail;
    QTensor q;
    q.c[0] = (m[0][0] - m[1][1]) * inv_sqrt2;
    q.c[1] = (2.0 * m[2][2] - m[0][0] - m[1][1]) * inv_sqrt6;
    q.c[2] = (m[0][1] + m[1][0]) * inv_sqrt2;
    q.c[3] = (m[0][2] + m[2][0]) * inv_sqrt2;
    q.c[4] = (m[1][2] + m[2][1]) * inv_sqrt2;
    return q;
  }

  Mat3 matrix() const {
    using namespace detail;
    const double xx = c[0] * inv_sqrt2 - c[1] * inv_sqrt6;
    const double yy = -c[0] * inv_sqrt2 - c[1] * inv_sqrt6;
    const double zz = 2.0 * c[1] * inv_sqrt6;
    const double xy = c[2] * inv_sqrt2;
    const double xz = c[3] * inv_sqrt2;
    const double yz = c[4] * inv_sqrt2;
    return {{{xx, xy, xz}, {xy, yy, yz}, {xz, yz, zz}}};
  }

  double norm2() const {
    return c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3] + c[4] * c[4];
  }
  double norm() const { return std::sqrt(norm2()); }

  bool finite() const {
    return std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); });
  }

  QTensor& operator+=(const QTensor& o) {
    for (int i = 0; i < 5; ++i) c[i] += o.c[i];
    return *this;
  }
  QTensor& operator-=(const QTensor& o) {
    for (int i = 0; i < 5; ++i) c[i] -= o.c[i];
    return *this;
  }
  QTensor& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
  friend QTensor operator+(QTensor a, const QTensor& b) { return a += b; }
  friend QTensor operator-(QTensor a, const QTensor& b) { return a -= b; }
  friend QTensor operator*(QTensor a, double s) { return a *= s; }
  friend QTensor operator*(double s, QTensor a) { return a *= s; }
  friend QTensor operator-(QTensor a) { return a *= -1.0; }
  friend bool operator==(const QTensor&, const QTensor&) = default;
};

/// Frobenius product Q:P.
inline double contract(const QTensor& a, const QTensor& b) {
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += a.c[i] * b.c[i];
  return s;
}

/// Traceless part of Q^2, computed on the coefficients.
inline QTensor square_traceless(const QTensor& q) {
  using namespace detail;
  const double xx = q.c[0] * inv_sqrt2 - q.c[1] * inv_sqrt6;
  const double yy = -q.c[0] * inv_sqrt2 - q.c[1] * inv_sqrt6;
  const double zz = 2.0 * q.c[1] * inv_sqrt6;
  const double xy = q.c[2] * inv_sqrt2, xz = q.c[3] * inv_sqrt2, yz = q.c[4] * inv_sqrt2;
  const double mxx = xx * xx + xy * xy + xz * xz;
  const double myy = xy * xy + yy * yy + yz * yz;
  const double mzz = xz * xz + yz * yz + zz * zz;
  QTensor out;
  out.c[0] = (mxx - myy) * inv_sqrt2;
  out.c[1] = (2.0 * mzz - mxx - myy) * inv_sqrt6;
  out.c[2] = (xx * xy + xy * yy + xz * yz) * (2.0 * inv_sqrt2);
  out.c[3] = (xx * xz + xy * yz + xz * zz) * (2.0 * inv_sqrt2);
  out.c[4] = (xy * xz + yy * yz + yz * zz) * (2.0 * inv_sqrt2);
  return out;
}

inline double trace2(const QTensor& q) { return q.norm2(); }

inline double trace3(const QTensor& q) {
  const Mat3 m = q.matrix();
  // tr Q^3 = 3 det Q for traceless Q
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  return 3.0 * det;
}

/// beta(Q) = 1 - 6 (tr Q^3)^2 / (tr Q^2)^3, with beta(0) := 0.
inline double biaxiality(const QTensor& q) {
  const double t2 = trace2(q);
  if (std::sqrt(t2) < tol_zero) return 0.0;
  const double t3 = trace3(q);
  return std::clamp(1.0 - 6.0 * t3 * t3 / (t2 * t2 * t2), 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Analytic eigensystem

struct Eigensystem {
  std::array<double, 3> values{};  // descending
  std::array<Vec3, 3> vectors{};   // vectors[i] pairs with values[i]
  bool degenerate = false;
};

namespace detail {

inline void fix_sign(Vec3& v) {
  for (double x : v) {
    if (std::abs(x) > 1e-12) {
      if (x < 0) v = scaled(v, -1.0);
      return;
    }
  }
}

// Unit eigenvector of a simple eigenvalue: the rows of Q - lambda I span the
// orthogonal complement, so the largest pairwise cross product is parallel
// to the eigenvector.
inline Vec3 isolated_eigenvector(const Mat3& q, double lambda) {
  const Vec3 r0{q[0][0] - lambda, q[0][1], q[0][2]};
  const Vec3 r1{q[1][0], q[1][1] - lambda, q[1][2]};
  const Vec3 r2{q[2][0], q[2][1], q[2][2] - lambda};
  const std::array<Vec3, 3> candidates{cross(r0, r1), cross(r0, r2), cross(r1, r2)};
  int best = 0;
  double best_n = dot(candidates[0], candidates[0]);
  for (int i = 1; i < 3; ++i) {
    const double n = dot(candidates[i], candidates[i]);
    if (n > best_n) {
      best_n = n;
      best = i;
    }
  }
  if (best_n <= 0.0) return {1.0, 0.0, 0.0};
  return scaled(candidates[best], 1.0 / std::sqrt(best_n));
}

inline void orthogonal_complement(const Vec3& w, Vec3& u, Vec3& v) {
  if (std::abs(w[0]) > std::abs(w[1])) {
    const double inv = 1.0 / std::sqrt(w[0] * w[0] + w[2] * w[2]);
    u = {-w[2] * inv, 0.0, w[0] * inv};
  } else {
    const double inv = 1.0 / std::sqrt(w[1] * w[1] + w[2] * w[2]);
    u = {0.0, w[2] * inv, -w[1] * inv};
  }
  v = cross(w, u);
}

}  // namespace detail

/// Closed-form eigen-decomposition of a traceless symmetric 3x3 matrix.
///
/// Eigenvalues come from the trigonometric form of Cardano's formula; the
/// eigenvector of the best-separated eigenvalue is taken from row cross
/// products and the remaining pair from a 2x2 rotation in its orthogonal
/// complement, which keeps the frame orthonormal even for repeated
/// eigenvalues. Final eigenvalues are Rayleigh quotients.
inline Eigensystem eigensystem(const QTensor& q) {
  Eigensystem es;
  const double qn = q.norm();
  if (qn < tol_zero) {
    es.vectors = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    es.values = {0.0, 0.0, 0.0};
    es.degenerate = true;
    return es;
  }
  const Mat3 m = q.matrix();
  const double p = qn / std::sqrt(6.0);
  const double half_det = trace3(q) / (3.0 * 2.0 * p * p * p);
  const double phi = std::acos(std::clamp(half_det, -1.0, 1.0)) / 3.0;
  const double l1 = 2.0 * p * std::cos(phi);
  const double l3 = 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  const double l2 = -l1 - l3;

  Vec3 v1, v2, v3;
  auto split_pair = [&](const Vec3& w, Vec3& hi, Vec3& lo) {
    Vec3 u, v;
    detail::orthogonal_complement(w, u, v);
    const Vec3 qu = mat_vec(m, u);
    const Vec3 qv = mat_vec(m, v);
    const double a = dot(u, qu), b = dot(u, qv), d = dot(v, qv);
    const double theta = 0.5 * std::atan2(2.0 * b, a - d);
    const double cs = std::cos(theta), sn = std::sin(theta);
    hi = {cs * u[0] + sn * v[0], cs * u[1] + sn * v[1], cs * u[2] + sn * v[2]};
    lo = {-sn * u[0] + cs * v[0], -sn * u[1] + cs * v[1], -sn * u[2] + cs * v[2]};
  };
  if (l1 - l2 >= l2 - l3) {
    v1 = detail::isolated_eigenvector(m, l1);
    split_pair(v1, v2, v3);
  } else {
    v3 = detail::isolated_eigenvector(m, l3);
    split_pair(v3, v1, v2);
  }

  std::array<Vec3, 3> vecs{v1, v2, v3};
  std::array<double, 3> vals{};
  for (int i = 0; i < 3; ++i) vals[i] = dot(vecs[i], mat_vec(m, vecs[i]));
  // rounding can swap nearly equal Rayleigh quotients
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2 - i; ++j)
      if (vals[j] < vals[j + 1]) {
        std::swap(vals[j], vals[j + 1]);
        std::swap(vecs[j], vecs[j + 1]);
      }
  for (auto& v : vecs) detail::fix_sign(v);

  es.values = vals;
  es.vectors = vecs;
  const double tol = tol_degenerate_rel * qn;
  es.degenerate = (vals[0] - vals[1] < tol) || (vals[1] - vals[2] < tol);
  return es;
}

// ---------------------------------------------------------------------------
// (s, r, n, m) representation: Q = s { (n n - I/3) + r (m m - I/3) }

struct Representation {
  double s = 0.0;
  double r = 0.0;
  Vec3 n{1, 0, 0};
  Vec3 m{0, 1, 0};
};

inline Representation represent(const QTensor& q) {
  if (q.norm() <= tol_zero) throw Error(ErrorCode::ZeroTensor, "represent() needs |Q| > tol_zero");
  const Eigensystem es = eigensystem(q);
  const double l1 = es.values[0], l2 = es.values[1];
  Representation rep;
  rep.s = 2.0 * l1 + l2;
  rep.r = std::clamp((l1 + 2.0 * l2) / rep.s, 0.0, 1.0);
  rep.n = es.vectors[0];
  rep.m = es.vectors[1];
  return rep;
}

inline QTensor compose(const Representation& rep) {
  if (std::abs(norm(rep.n) - 1.0) > 1e-8 || std::abs(norm(rep.m) - 1.0) > 1e-8 ||
      std::abs(dot(rep.n, rep.m)) > 1e-8)
    throw Error(ErrorCode::InvalidFrame, "n and m must form an orthonormal pair");
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double id = (i == j) ? 1.0 / 3.0 : 0.0;
      out[i][j] = rep.s * ((rep.n[i] * rep.n[j] - id) + rep.r * (rep.m[i] * rep.m[j] - id));
    }
  return QTensor::from_matrix(out);
}

/// beta as a function of the biaxiality ratio r alone.
inline double biaxiality_from_ratio(double r) {
  const double w = r * r - r + 1.0;
  return 27.0 * r * r * (1.0 - r) * (1.0 - r) / (4.0 * w * w * w);
}

}  // namespace ldg
