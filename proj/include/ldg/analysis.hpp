#pragma once

// Diagnostics on frozen fields: defect localization, biaxiality statistics,
// circle profiles S(rho), R(rho), loop length and the Pohozaev balance.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "ldg/grid.hpp"
#include "ldg/manifold.hpp"
#include "ldg/potential.hpp"

namespace ldg {

struct Point {
  double x = 0.0, y = 0.0;
};

struct DefectComponent {
  Point centroid;
  double radius = 0.0;  // minimal enclosing circle of the cell centers + h / sqrt(2)
  Point ball_center;
  std::size_t cells = 0;
  std::vector<std::size_t> members;  // cell indices, ascending
};

struct DefectReport {
  double delta = 0.3;
  std::vector<DefectComponent> components;  // sorted by centroid (x, then y)
  std::size_t count() const { return components.size(); }
  double c_hat = 0.0;    // sup eps |grad Q| over Interior cells
  double lambda0 = 0.0;  // delta / (2 c_hat)
  double mu0 = 0.0;      // (pi / 2) lambda0^2 min(f0, m0 delta^2 / 8)
  double f0 = 0.0;
  double m0 = 0.0;
};

struct DefectOptions {
  bool clearing_out_constants = true;
  std::size_t hypothesis_samples = 2000;
  std::size_t f0_samples = 20000;
};

namespace detail {

struct Circle {
  Point c;
  double r = -1.0;
  bool contains(const Point& p) const { return std::hypot(p.x - c.x, p.y - c.y) <= r * (1.0 + 1e-12) + 1e-14; }
};

inline Circle circle_two(const Point& a, const Point& b) {
  return {{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}, 0.5 * std::hypot(a.x - b.x, a.y - b.y)};
}

inline Circle circle_three(const Point& a, const Point& b, const Point& c) {
  const double bx = b.x - a.x, by = b.y - a.y, cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  if (std::abs(d) < 1e-300) {
    // collinear: the widest pair
    Circle best = circle_two(a, b);
    for (const Circle& cand : {circle_two(a, c), circle_two(b, c)})
      if (cand.r > best.r) best = cand;
    return best;
  }
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  const Point center{a.x + (cy * b2 - by * c2) / d, a.y + (bx * c2 - cx * b2) / d};
  return {center, std::hypot(center.x - a.x, center.y - a.y)};
}

/// Welzl's algorithm in its iterative form over a fixed shuffle.
inline Circle minimal_enclosing_circle(std::vector<Point> pts) {
  if (pts.empty()) return {};
  std::mt19937_64 rng(12345);
  std::shuffle(pts.begin(), pts.end(), rng);
  Circle c{pts[0], 0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (c.contains(pts[i])) continue;
    c = {pts[i], 0.0};
    for (std::size_t j = 0; j < i; ++j) {
      if (c.contains(pts[j])) continue;
      c = circle_two(pts[i], pts[j]);
      for (std::size_t k = 0; k < j; ++k)
        if (!c.contains(pts[k])) c = circle_three(pts[i], pts[j], pts[k]);
    }
  }
  return c;
}

}  // namespace detail

/// sup over Interior cells of eps |grad Q|, central differences.
inline double scaled_gradient_sup(const Field& f) {
  const Grid& g = *f.grid;
  double m = 0.0;
  for (std::size_t k : g.interior()) {
    const int i = g.col(k), j = g.row(k);
    const QTensor dx = (f.at(i + 1, j) - f.at(i - 1, j)) * (0.5 / g.h());
    const QTensor dy = (f.at(i, j + 1) - f.at(i, j - 1)) * (0.5 / g.h());
    m = std::max(m, std::sqrt(dx.norm2() + dy.norm2()));
  }
  return f.epsilon * m;
}

inline DefectReport detect_defects(const Field& f, double delta, const DefectOptions& opts = {}) {
  if (!(delta > 0.0)) throw Error(ErrorCode::InvalidSpec, "defect threshold must be positive");
  const Grid& g = *f.grid;
  DefectReport rep;
  rep.delta = delta;

  std::vector<char> hot(g.size(), 0), seen(g.size(), 0);
  for (std::size_t k : g.interior()) hot[k] = dist_to_N(f[k]) > delta;

  for (std::size_t start : g.interior()) {
    if (!hot[start] || seen[start]) continue;
    DefectComponent comp;
    std::vector<std::size_t> stack{start};
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      comp.members.push_back(k);
      const int i = g.col(k), j = g.row(k);
      for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        if (!g.in_range(i + di, j + dj)) continue;
        const std::size_t n = g.index(i + di, j + dj);
        if (hot[n] && !seen[n]) {
          seen[n] = 1;
          stack.push_back(n);
        }
      }
    }
    std::sort(comp.members.begin(), comp.members.end());
    comp.cells = comp.members.size();
    std::vector<Point> pts;
    pts.reserve(comp.cells);
    for (std::size_t k : comp.members) {
      const Point p{g.x(g.col(k)), g.y(g.row(k))};
      pts.push_back(p);
      comp.centroid.x += p.x;
      comp.centroid.y += p.y;
    }
    comp.centroid.x /= double(comp.cells);
    comp.centroid.y /= double(comp.cells);
    const detail::Circle mec = detail::minimal_enclosing_circle(std::move(pts));
    comp.ball_center = mec.c;
    comp.radius = mec.r + g.h() / std::numbers::sqrt2;
    rep.components.push_back(std::move(comp));
  }
  std::sort(rep.components.begin(), rep.components.end(), [](const DefectComponent& a, const DefectComponent& b) {
    return a.centroid.x != b.centroid.x ? a.centroid.x < b.centroid.x : a.centroid.y < b.centroid.y;
  });

  rep.c_hat = scaled_gradient_sup(f);
  if (opts.clearing_out_constants && rep.c_hat > 0.0) {
    rep.lambda0 = delta / (2.0 * rep.c_hat);
    rep.f0 = clearing_out_f0(f.params, delta, opts.f0_samples);
    rep.m0 = validate_hypotheses(f.params, opts.hypothesis_samples).constants.m0;
    rep.mu0 = 0.5 * std::numbers::pi * rep.lambda0 * rep.lambda0 * std::min(rep.f0, rep.m0 * delta * delta / 8.0);
  }
  return rep;
}

struct BiaxialityStats {
  double max_beta = 0.0;
  Point argmax;
  double min_norm = std::numeric_limits<double>::infinity();
  Point argmin;
  bool maximal_biaxial = false;
};

/// Over Interior and Dirichlet cells; the first cell in row-major order wins ties.
inline BiaxialityStats biaxiality_stats(const Field& f, double tol_beta = 1e-3) {
  const Grid& g = *f.grid;
  BiaxialityStats s;
  s.max_beta = -1.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.kind(k) == CellKind::Exterior) continue;
    const Point p{g.x(g.col(k)), g.y(g.row(k))};
    const double b = biaxiality(f[k]);
    const double n = f[k].norm();
    if (b > s.max_beta) s.max_beta = b, s.argmax = p;
    if (n < s.min_norm) s.min_norm = n, s.argmin = p;
  }
  s.maximal_biaxial = s.max_beta >= 1.0 - tol_beta;
  return s;
}

// ---------------------------------------------------------------------------
// Circle diagnostics

struct ProfileSample {
  double rho = 0.0;
  double S = 0.0;
  double R = 0.0;
  double length = 0.0;
  double speed_variance = 0.0;
};

struct RadialProfile {
  Point center;
  std::vector<ProfileSample> samples;  // ascending rho
  double kappa_star = ldg::kappa_star();
};

struct LoopDiagnostics {
  double length = 0.0;
  double speed_variance = 0.0;
  HomotopyClass homotopy = HomotopyClass::Trivial;
};

struct CircleOptions {
  int min_nodes = 256;
  double delta = 0.3;  // circles must stay where dist_to_N <= delta
};

namespace detail {

inline int circle_nodes(const Grid& g, double rho, const CircleOptions& opts) {
  return std::max(opts.min_nodes, int(std::ceil(4.0 * std::numbers::pi * rho / g.h())));
}

inline void require_circle_inside(const Grid& g, Point center, double rho, double margin) {
  const Domain& d = g.domain();
  const double off = std::hypot(center.x - d.cx, center.y - d.cy);
  bool ok = rho > 0.0 && off + rho + margin < d.outer;
  if (d.kind == DomainKind::Annulus) ok = ok && std::abs(rho - off) > d.inner + margin;
  if (!ok) {
    std::ostringstream msg;
    msg << "circle of radius " << rho << " about (" << center.x << ", " << center.y << ") leaves the domain";
    throw Error(ErrorCode::CircleOutsideDomain, msg.str());
  }
}

inline QTensor sample_at(const Field& f, double x, double y) {
  try {
    return interpolate(f, x, y);
  } catch (const Error&) {
    throw Error(ErrorCode::CircleOutsideDomain, "circle sample outside the interpolation hull");
  }
}

/// Raw samples u(center + r e^{i theta_k}), checked against the defect threshold.
inline std::vector<QTensor> raw_circle(const Field& f, Point center, double r, int nodes, double delta) {
  std::vector<QTensor> out(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double th = 2.0 * std::numbers::pi * k / nodes;
    out[k] = sample_at(f, center.x + r * std::cos(th), center.y + r * std::sin(th));
    if (dist_to_N(out[k]) > delta) {
      std::ostringstream msg;
      msg << "circle of radius " << r << " meets a defect (dist to N " << dist_to_N(out[k]) << ")";
      throw Error(ErrorCode::CircleMeetsDefect, msg.str());
    }
  }
  return out;
}

inline std::vector<QTensor> projected(std::vector<QTensor> v) {
  for (auto& q : v) q = project_to_N(q);
  return v;
}

/// Chord speeds |c_{k+1} - c_k| / dtheta of a closed sampled loop.
inline std::vector<double> chord_speeds(const std::vector<QTensor>& c) {
  const std::size_t n = c.size();
  const double dth = 2.0 * std::numbers::pi / double(n);
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = (c[(k + 1) % n] - c[k]).norm() / dth;
  return v;
}

inline LoopDiagnostics loop_diagnostics(const std::vector<QTensor>& c) {
  const std::vector<double> speed = chord_speeds(c);
  const double dth = 2.0 * std::numbers::pi / double(c.size());
  LoopDiagnostics out;
  double mean = 0.0;
  for (double s : speed) mean += s;
  mean /= double(speed.size());
  out.length = mean * dth * double(speed.size());
  for (double s : speed) out.speed_variance += (s - mean) * (s - mean);
  out.speed_variance /= double(speed.size());
  out.homotopy = homotopy_class(c);
  return out;
}

}  // namespace detail

/// Length, speed variance and homotopy class of the projected loop pi(c_rho).
inline LoopDiagnostics circle_loop_diagnostics(const Field& f, Point center, double rho,
                                               const CircleOptions& opts = {}) {
  const Grid& g = *f.grid;
  detail::require_circle_inside(g, center, rho, 0.0);
  const int nodes = detail::circle_nodes(g, rho, opts);
  return detail::loop_diagnostics(detail::projected(detail::raw_circle(f, center, rho, nodes, opts.delta)));
}

/// S(rho) = (1/2) int_0^{2 pi} |d_theta c_rho|^2 d theta and
/// R(rho) = (1/2) int_{dB_rho} |d_nu u|^2 dH^1 on the projected field pi(u),
/// with u_nu by central differences across the circle (spacing h).
inline RadialProfile radial_profile(const Field& f, Point center, std::vector<double> rhos,
                                    const CircleOptions& opts = {}) {
  const Grid& g = *f.grid;
  std::sort(rhos.begin(), rhos.end());
  const double dr = g.h();
  RadialProfile out;
  out.center = center;
  for (double rho : rhos) {
    detail::require_circle_inside(g, center, rho + dr, 0.0);
    if (rho - dr <= 0.0) throw Error(ErrorCode::CircleOutsideDomain, "circle radius below the grid spacing");
    const int nodes = detail::circle_nodes(g, rho, opts);
    const double dth = 2.0 * std::numbers::pi / nodes;
    const auto mid = detail::projected(detail::raw_circle(f, center, rho, nodes, opts.delta));
    const auto in = detail::projected(detail::raw_circle(f, center, rho - dr, nodes, opts.delta));
    const auto outr = detail::projected(detail::raw_circle(f, center, rho + dr, nodes, opts.delta));
    ProfileSample s;
    s.rho = rho;
    for (int k = 0; k < nodes; ++k) {
      const QTensor dtheta = (mid[(k + 1) % nodes] - mid[k]) * (1.0 / dth);
      const QTensor dnu = (outr[k] - in[k]) * (0.5 / dr);
      s.S += 0.5 * dtheta.norm2() * dth;
      s.R += 0.5 * dnu.norm2() * rho * dth;
    }
    const LoopDiagnostics loop = detail::loop_diagnostics(mid);
    s.length = loop.length;
    s.speed_variance = loop.speed_variance;
    out.samples.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pohozaev balance on a ball

struct PohozaevTerms {
  double bulk_potential = 0.0;    // (2 / eps^2) int_B f*
  double normal_flux = 0.0;       // (rho / 2) int_dB |u_nu|^2
  double tangential_flux = 0.0;   // (rho / 2) int_dB |u_tau|^2
  double boundary_potential = 0.0;  // (rho / eps^2) int_dB f*
  double lhs() const { return bulk_potential + normal_flux; }
  double rhs() const { return tangential_flux + boundary_potential; }
  double residual() const { return std::abs(lhs() - rhs()) / (std::abs(lhs()) + std::abs(rhs()) + 1e-12); }
};

/// Terms of the Pohozaev identity for -Delta u + eps^-2 Df*(u) = 0 on
/// B(center, radius) with x0 = center, so (x - x0).tau = 0 on the circle.
/// The bulk integral uses cell area fractions inside the ball (8 x 8
/// subsamples on cut cells); the boundary integrals use bilinear
/// interpolation with derivatives by central differences of width h.
inline PohozaevTerms pohozaev_terms(const Field& f, Point center, double radius) {
  const Grid& g = *f.grid;
  const double h = g.h();
  try {
    detail::require_circle_inside(g, center, radius + 2.0 * h, 0.0);
  } catch (const Error&) {
    throw Error(ErrorCode::BallOutsideDomain, "ball leaves the domain");
  }
  const Domain& d = g.domain();
  if (d.kind == DomainKind::Annulus && !(std::hypot(center.x - d.cx, center.y - d.cy) > radius + d.inner + 2.0 * h))
    throw Error(ErrorCode::BallOutsideDomain, "ball covers part of the hole");
  if (!(radius > 2.0 * h)) throw Error(ErrorCode::BallOutsideDomain, "ball radius below two cells");
  const double eps2 = f.epsilon * f.epsilon;
  PohozaevTerms t;

  double bulk = 0.0;
  const double reach = radius + h;
  for (std::size_t k : g.interior()) {
    const double x = g.x(g.col(k)), y = g.y(g.row(k));
    const double d = std::hypot(x - center.x, y - center.y);
    if (d > reach) continue;
    double frac = 1.0;
    if (d > radius - h) {
      int inside = 0;
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
          const double px = x + h * ((a + 0.5) / 8.0 - 0.5), py = y + h * ((b + 0.5) / 8.0 - 0.5);
          inside += std::hypot(px - center.x, py - center.y) < radius;
        }
      frac = inside / 64.0;
    }
    bulk += frac * bulk_fstar(f[k], f.params);
  }
  t.bulk_potential = 2.0 / eps2 * bulk * h * h;

  const int nodes = std::max(512, int(std::ceil(8.0 * std::numbers::pi * radius / h)));
  const double dth = 2.0 * std::numbers::pi / nodes;
  const double dr = h;
  for (int k = 0; k < nodes; ++k) {
    const double th = k * dth;
    auto at = [&](double r, double ang) {
      return detail::sample_at(f, center.x + r * std::cos(ang), center.y + r * std::sin(ang));
    };
    const QTensor u = at(radius, th);
    const QTensor un = (at(radius + dr, th) - at(radius - dr, th)) * (0.5 / dr);
    const double ds = dr / radius;
    const QTensor ut = (at(radius, th + ds) - at(radius, th - ds)) * (0.5 / (radius * ds));
    const double arc = radius * dth;
    t.normal_flux += 0.5 * radius * un.norm2() * arc;
    t.tangential_flux += 0.5 * radius * ut.norm2() * arc;
    t.boundary_potential += radius / eps2 * bulk_fstar(u, f.params) * arc;
  }
  return t;
}

/// |LHS - RHS| / (|LHS| + |RHS| + 1e-12).
inline double pohozaev_residual(const Field& f, Point center, double radius) {
  return pohozaev_terms(f, center, radius).residual();
}

}  // namespace ldg
