#pragma once

// Quartic bulk potential
//
//   f(Q)  = k  - a/2 tr Q^2 - b/3 tr Q^3 + c/4 (tr Q^2)^2
//
// and its rescaled form f* acting on Q* = Q / (sqrt(2/3) s*), whose vacuum
// manifold is the unit-sphere copy of RP^2 from manifold.hpp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ldg/manifold.hpp"
#include "ldg/qtensor.hpp"

namespace ldg {

struct MaterialParams {
  double a = 1.0, b = 1.0, c = 1.0;

  double t = 1.0;       // ac / b^2
  double s_star = 1.5;  // scalar order of the physical vacuum
  double a_star = 1.0, b_star = 0.0, c_star = 0.0;
  double k_phys = 0.0, k_star = 0.0;
  double mu1 = 0.0, mu2 = 0.0, sigma = 0.0;

  /// physical energy = rescaled energy * this factor
  double energy_scale() const { return 2.0 * s_star * s_star / 3.0; }
};

struct SandwichConstants {
  double mu1, mu2, sigma;
};

/// mu1 = min, mu2 = max of A + B X + C X^2 over X in [0, 1]; sigma = b s* / 18.
inline SandwichConstants sandwich_constants(const MaterialParams& p) {
  const double s2 = p.s_star * p.s_star;
  const double A = p.a / 2.0 + s2 * p.c / 3.0;
  const double B = p.b * p.s_star / 9.0 - 2.0 * s2 * p.c / 3.0;
  const double C = s2 * p.c / 6.0;
  auto quad = [&](double x) { return A + B * x + C * x * x; };
  double lo = std::min(quad(0.0), quad(1.0));
  const double hi = std::max(quad(0.0), quad(1.0));  // C > 0: max sits at an endpoint
  const double vertex = -B / (2.0 * C);
  if (vertex > 0.0 && vertex < 1.0) lo = std::min(lo, quad(vertex));
  return {lo, hi, p.b * p.s_star / 18.0};
}

inline MaterialParams derive_params(double a, double b, double c) {
  if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0)) {
    std::ostringstream msg;
    msg << "a, b, c must be positive (got " << a << ", " << b << ", " << c << ")";
    throw Error(ErrorCode::NonPositiveCoefficient, msg.str());
  }
  MaterialParams p;
  p.a = a;
  p.b = b;
  p.c = c;
  p.t = a * c / (b * b);
  p.s_star = (b + std::sqrt(b * b + 24.0 * a * c)) / (4.0 * c);
  p.a_star = a;
  p.b_star = std::sqrt(2.0 / 3.0) * p.s_star * b;
  p.c_star = 2.0 / 3.0 * p.s_star * p.s_star * c;

  // On the prolate uniaxial branch tr Q^2 = 2 s^2 / 3 and tr Q^3 = 2 s^3 / 9.
  auto branch = [](double s, double a_, double b_, double c_) {
    return -(a_ / 3.0) * s * s - (2.0 * b_ / 27.0) * s * s * s + (c_ / 9.0) * s * s * s * s;
  };
  p.k_phys = -branch(p.s_star, a, b, c);
  const double s_min =
      (2.0 * p.b_star + std::sqrt(4.0 * p.b_star * p.b_star + 96.0 * p.a_star * p.c_star)) / (8.0 * p.c_star);
  p.k_star = -branch(s_min, p.a_star, p.b_star, p.c_star);

  const SandwichConstants sc = sandwich_constants(p);
  p.mu1 = sc.mu1;
  p.mu2 = sc.mu2;
  p.sigma = sc.sigma;
  return p;
}

/// Rescaled potential f*, zero on N.
inline double bulk_fstar(const QTensor& q, const MaterialParams& p) {
  const double t2 = trace2(q);
  const double t3 = trace3(q);
  return p.k_star - 0.5 * p.a_star * t2 - p.b_star / 3.0 * t3 + 0.25 * p.c_star * t2 * t2;
}

/// Physical potential f (unscaled tensor), zero on its own vacuum manifold.
inline double bulk_f(const QTensor& q, const MaterialParams& p) {
  const double t2 = trace2(q);
  const double t3 = trace3(q);
  return p.k_phys - 0.5 * p.a * t2 - p.b / 3.0 * t3 + 0.25 * p.c * t2 * t2;
}

/// Intrinsic gradient of f* on S0: -a* Q - b* (Q^2 - tr Q^2 I / 3) + c* Q tr Q^2.
inline QTensor grad_fstar(const QTensor& q, const MaterialParams& p) {
  // the trace of Q^2 is dropped: it is the multiplier of the traceless constraint
  return q * (-p.a_star + p.c_star * trace2(q)) - square_traceless(q) * p.b_star;
}

// ---------------------------------------------------------------------------
// Numerical validation of the structural hypotheses on f*

struct ManifoldConstants {
  double m0 = 0.0;      // lower normal-growth constant
  double M0 = 0.0;      // upper normal-growth constant
  double delta0 = 0.0;  // projection-validity radius
};

struct HypothesisReport {
  ManifoldConstants constants;
  bool normal_growth = false;     // Df*(v + t nu) . nu >= m0 t
  bool radial_growth = false;     // f*(v) > f*(v / |v|) for |v| > 1
  bool quadratic_sandwich = false;  // m0 d^2 / 2 <= f* <= M0 d^2 / 2
  bool projection_stable = false;   // pi(v + t nu) = v
  std::size_t samples = 0;
};

namespace detail {

inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  double w = g(rng), x = g(rng), y = g(rng), z = g(rng);
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n, x /= n, y /= n, z /= n;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

inline Mat3 transpose(const Mat3& m) {
  Mat3 t{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) t[i][j] = m[j][i];
  return t;
}

// A point of N with a unit normal there. At phi(e3) the normal space is
// spanned by matrices [[p1, p2, 0], [p2, p3, 0], [0, 0, -p1 - p3]]; a random
// rotation carries the pair anywhere on N.
struct NormalSample {
  QTensor base;
  QTensor normal;
};

inline NormalSample random_normal_sample(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const double p1 = g(rng), p2 = g(rng), p3 = g(rng);
  const Mat3 block{{{p1, p2, 0.0}, {p2, p3, 0.0}, {0.0, 0.0, -p1 - p3}}};
  const Mat3 rot = random_rotation(rng);
  const Mat3 rt = transpose(rot);
  QTensor nu = QTensor::from_matrix(mat_mul(rot, mat_mul(block, rt)));
  nu *= 1.0 / nu.norm();
  const Vec3 n = normalized(mat_vec(rot, Vec3{0.0, 0.0, 1.0}));
  return {phi(n), nu};
}

}  // namespace detail

/// Samples points v of N, unit normals nu and offsets t to estimate m0, M0
/// and the largest radius delta0 <= 0.5 on which the normal-growth condition
/// and the projection hold; then checks the radial growth condition and the
/// quadratic bounds on an independent sample. Throws HypothesisViolated.
inline HypothesisReport validate_hypotheses(const MaterialParams& p, std::size_t samples,
                                            std::uint64_t seed = 20240601) {
  if (samples < 1000) throw Error(ErrorCode::InvalidSpec, "validate_hypotheses needs at least 1000 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  HypothesisReport rep;
  rep.samples = samples;

  struct Probe {
    detail::NormalSample ns;
    double t;
  };
  std::vector<Probe> probes;
  probes.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    // offsets spread over (0, 0.5], denser near the manifold
    const double t = 0.5 * std::max(1e-4, unit(rng) * unit(rng));
    probes.push_back({detail::random_normal_sample(rng), t});
  }

  double chosen = 0.0, m0 = 0.0, M0 = 0.0;
  for (double delta = 0.5; delta > 0.04; delta -= 0.05) {
    double lo = INFINITY, hi = 0.0;
    bool proj_ok = true;
    for (const Probe& pr : probes) {
      if (pr.t > delta) continue;
      const QTensor u = pr.ns.base + pr.ns.normal * pr.t;
      const double slope = contract(grad_fstar(u, p), pr.ns.normal) / pr.t;
      lo = std::min(lo, slope);
      hi = std::max(hi, slope);
      try {
        if ((project_to_N(u) - pr.ns.base).norm() > 1e-8) proj_ok = false;
      } catch (const Error&) {
        proj_ok = false;
      }
    }
    if (lo > 0.0 && proj_ok) {
      chosen = delta;
      m0 = lo;
      M0 = hi;
      break;
    }
  }
  rep.normal_growth = chosen > 0.0;
  rep.projection_stable = chosen > 0.0;
  rep.constants = {m0, M0, chosen};
  if (!rep.normal_growth) throw Error(ErrorCode::HypothesisViolated, "no delta0 in (0, 0.5] gives normal growth");

  // quadratic bounds against the closed-form distance, independent sample
  bool quad_ok = true;
  std::ostringstream failure;
  for (std::size_t i = 0; i < samples; ++i) {
    const detail::NormalSample ns = detail::random_normal_sample(rng);
    const QTensor u = ns.base + ns.normal * (chosen * unit(rng));
    const double d = dist_to_N(u);
    const double f = bulk_fstar(u, p);
    const double slack = 1e-12 + 1e-6 * f;
    if (f < 0.5 * m0 * d * d - slack || f > 0.5 * M0 * d * d + slack) {
      quad_ok = false;
      failure << "quadratic bound fails at dist " << d << " (f* = " << f << ")";
      break;
    }
  }
  rep.quadratic_sandwich = quad_ok;
  if (!quad_ok) throw Error(ErrorCode::HypothesisViolated, failure.str());

  // f*(v) > f*(v / |v|) for |v| in (1, 3]
  bool radial_ok = true;
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t i = 0; i < samples; ++i) {
    QTensor v;
    for (auto& x : v.c) x = g(rng);
    v *= 1.0 / v.norm();
    const double radius = 1.0 + 2.0 * std::max(1e-6, unit(rng));
    if (!(bulk_fstar(v * radius, p) > bulk_fstar(v, p))) {
      radial_ok = false;
      failure << "radial growth fails at |v| = " << radius;
      break;
    }
  }
  rep.radial_growth = radial_ok;
  if (!radial_ok) throw Error(ErrorCode::HypothesisViolated, failure.str());
  return rep;
}

/// f0(delta) = min { f*(v) : dist(v, N) >= delta, |v| <= 1 }, estimated by
/// sampling the unit ball of S0.
inline double clearing_out_f0(const MaterialParams& p, double delta, std::size_t samples = 20000,
                              std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double best = INFINITY;
  for (std::size_t i = 0; i < samples; ++i) {
    QTensor v;
    for (auto& x : v.c) x = g(rng);
    v *= std::pow(unit(rng), 0.2) / v.norm();  // uniform in the 5-ball
    if (dist_to_N(v) >= delta) best = std::min(best, bulk_fstar(v, p));
  }
  return best;
}

}  // namespace ldg
