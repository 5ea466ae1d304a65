#pragma once

// Explicit comparison configurations on a disk: the maximally biaxial core
// and the isotropic (melting) core, with the closed-form energy of the former.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "ldg/solver.hpp"

namespace ldg {

inline double biaxial_core_radius(double eps, const MaterialParams& p) { return eps / std::sqrt(p.sigma); }

inline void require_core_fits(double radius, double eps, const MaterialParams& p) {
  const double bound = radius * std::sqrt(p.sigma);
  if (!(eps > 0.0) || !(eps < bound)) {
    std::ostringstream msg;
    msg << "the biaxial core needs eps < R sqrt(sigma) = " << bound << " (eps = " << eps << ")";
    throw Error(ErrorCode::EpsilonTooLarge, msg.str());
  }
}

/// sqrt(3/2) { n n - I/3 + r (m m - I/3) } with n = n0(k theta), m its
/// in-plane rotation by 90 degrees and r = max(0, 1 - rho / core).
inline QTensor biaxial_core_value(double rho, double theta, double core_radius, int winding = 1) {
  const double half = 0.5 * winding * theta;
  const Vec3 n{std::cos(half), std::sin(half), 0.0};
  const Vec3 m{-std::sin(half), std::cos(half), 0.0};
  const double r = std::max(0.0, 1.0 - rho / core_radius);
  Mat3 q{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double id = i == j ? 1.0 / 3.0 : 0.0;
      q[i][j] = sqrt_three_halves * ((n[i] * n[j] - id) + r * (m[i] * m[j] - id));
    }
  return QTensor::from_matrix(q);
}

inline Field biaxial_core(std::shared_ptr<const Grid> grid, double eps, const MaterialParams& p, int winding = 1) {
  const Domain& d = grid->domain();
  if (d.kind != DomainKind::Disk) throw Error(ErrorCode::InvalidSpec, "comparison maps are built on disks");
  require_core_fits(d.outer, eps, p);
  Field f(grid, eps, p);
  const double core = biaxial_core_radius(eps, p);
  const Grid& g = *grid;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.kind(k) == CellKind::Exterior) continue;
    const double x = g.x(g.col(k)) - d.cx, y = g.y(g.row(k)) - d.cy;
    f[k] = biaxial_core_value(std::hypot(x, y), polar_angle(d, g.x(g.col(k)), g.y(g.row(k))), core, winding);
  }
  return f;
}

struct CoreEnergy {
  double dirichlet = 0.0;
  double potential_upper_bound = 0.0;
};

/// pi [7/8 + 3/4 log R + 3/4 |log eps| + 3/8 log sigma] and the bound 2 pi.
/// The 7/8 splits as 1/2 (radial part of the core) + 3/8 (angular part).
inline CoreEnergy biaxial_core_energy_closed_form(double radius, double eps, const MaterialParams& p) {
  require_core_fits(radius, eps, p);
  const double pi = std::numbers::pi;
  return {pi * (7.0 / 8.0 + 0.75 * std::log(radius) - 0.75 * std::log(eps) + 0.375 * std::log(p.sigma)), 2.0 * pi};
}

/// min(rho / core, 1) c*(k theta): uniaxial everywhere, isotropic at the center.
inline Field uniaxial_defect(std::shared_ptr<const Grid> grid, double eps_core, int winding, double eps,
                             const MaterialParams& p) {
  if (!(eps_core > 0.0)) throw Error(ErrorCode::InvalidSpec, "core radius must be positive");
  const Domain& d = grid->domain();
  Field f(grid, eps, p);
  const Grid& g = *grid;
  const BoundarySpec spec = GeodesicWinding{winding};
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (g.kind(k) == CellKind::Exterior) continue;
    const double x = g.x(g.col(k)), y = g.y(g.row(k));
    const double rho = std::hypot(x - d.cx, y - d.cy);
    f[k] = boundary_value(spec, polar_angle(d, x, y)) * std::min(rho / eps_core, 1.0);
  }
  return f;
}

struct CoreComparison {
  double eps = 0.0;
  double t = 0.0;
  EnergyBreakdown biaxial;
  EnergyBreakdown uniaxial;  // best candidate
  double best_core_radius = 0.0;
  std::vector<double> candidate_radii;
  std::vector<double> candidate_energies;
  double gap = 0.0;        // uniaxial - biaxial
  double predicted = 0.0;  // (kappa* / 2) log(mu1 / sigma)
  double relative_error = 0.0;
  bool asserted = false;   // large-t regime
  bool gap_ok = false;     // gap > 0 and within 35% of predicted
};

inline CoreComparison compare_cores(std::shared_ptr<const Grid> grid, double eps, const MaterialParams& p,
                                    int workers = 1) {
  CoreComparison out;
  out.eps = eps;
  out.t = p.t;
  out.biaxial = energy(biaxial_core(grid, eps, p), workers);
  double best = std::numeric_limits<double>::infinity();
  for (double factor : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
    const double core = eps * factor / std::sqrt(p.mu1);
    if (core >= grid->domain().outer) continue;
    const EnergyBreakdown e = energy(uniaxial_defect(grid, core, 1, eps, p), workers);
    out.candidate_radii.push_back(core);
    out.candidate_energies.push_back(e.total);
    if (e.total < best) {
      best = e.total;
      out.uniaxial = e;
      out.best_core_radius = core;
    }
  }
  out.gap = out.uniaxial.total - out.biaxial.total;
  out.predicted = 0.5 * kappa_star() * std::log(p.mu1 / p.sigma);
  out.relative_error = std::abs(out.gap - out.predicted) / out.predicted;
  out.asserted = p.t >= 50.0;
  out.gap_ok = out.gap > 0.0 && out.relative_error <= 0.35;
  return out;
}

/// Initial guess for the solver: the biaxial-core profile when the outer
/// datum is a geodesic loop on a disk that can host the core, the radial
/// extension of the datum otherwise (or when allow_profile is false).
/// Returns whether the profile was used.
inline bool warm_start(Field& f, const BoundaryConditions& bc, double noise, std::uint64_t seed,
                       bool allow_profile = true) {
  const Grid& g = *f.grid;
  const Domain& d = g.domain();
  const auto* geo = std::get_if<GeodesicWinding>(&bc.outer);
  const bool core_fits = f.epsilon > 0.0 && f.epsilon < d.outer * std::sqrt(f.params.sigma);
  const bool profile =
      allow_profile && d.kind == DomainKind::Disk && geo != nullptr && geo->winding % 2 != 0 && core_fits;
  if (profile) {
    const double core = biaxial_core_radius(f.epsilon, f.params);
    for (std::size_t k : g.interior()) {
      const double x = g.x(g.col(k)), y = g.y(g.row(k));
      f[k] = biaxial_core_value(std::hypot(x - d.cx, y - d.cy), polar_angle(d, x, y), core, geo->winding);
    }
  } else {
    radial_initialization(f, bc);
  }
  if (noise > 0.0) add_noise(f, noise, seed);
  return profile;
}

/// Copies a coarse solution onto the Interior cells of a finer field by
/// bilinear interpolation. Cells whose coarse stencil leaves the domain keep
/// their current value.
inline void prolongate(const Field& coarse, Field& fine) {
  const Grid& g = *fine.grid;
  for (std::size_t k : g.interior()) {
    try {
      fine[k] = interpolate(coarse, g.x(g.col(k)), g.y(g.row(k)));
    } catch (const Error&) {
    }
  }
}

struct LevelReport {
  int n = 0;
  int iterations = 0;
  bool converged = false;
  double grad_sup = 0.0;
};

struct MultilevelResult {
  SolveResult fine;
  std::vector<LevelReport> levels;  // coarsest first; the last entry is the target grid
  bool profile_start = false;       // false when the warm start fell back to radial extension
};

/// Solves on a hierarchy n / 2^L, ..., n / 2, n (coarsest level >= min_level
/// cells per axis), starting the coarsest from warm_start() and every finer
/// level from the interpolated coarse minimizer.
inline MultilevelResult solve_multilevel(const Domain& domain, int n, double eps, const MaterialParams& p,
                                         const BoundaryConditions& bc, const SolveOptions& opts,
                                         int min_level = 64, double noise = 0.01, bool allow_profile = true) {
  std::vector<int> sizes{n};
  while (sizes.back() % 2 == 0 && sizes.back() / 2 >= min_level) sizes.push_back(sizes.back() / 2);
  std::reverse(sizes.begin(), sizes.end());

  MultilevelResult out;
  std::optional<Field> previous;
  for (int level_n : sizes) {
    Field f = make_field(build_grid(domain, level_n), eps, p, bc);
    const bool profile = warm_start(f, bc, previous ? 0.0 : noise, opts.seed, allow_profile);
    if (!previous) out.profile_start = profile;
    if (previous) prolongate(*previous, f);
    SolveResult r = minimize(std::move(f), opts);
    out.levels.push_back({level_n, r.iterations, r.converged, r.grad_sup});
    if (level_n == n) {
      out.fine = std::move(r);
    } else {
      previous = std::move(r.field);
    }
  }
  return out;
}

}  // namespace ldg
