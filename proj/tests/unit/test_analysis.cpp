#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <numbers>
#include <numeric>
#include <random>

#include "ldg/analysis.hpp"
#include "ldg/construct.hpp"

using namespace ldg;

namespace {

constexpr double pi = std::numbers::pi;
const MaterialParams unit_params = derive_params(1, 1, 1);

DefectOptions quick() {
  DefectOptions o;
  o.clearing_out_constants = false;
  return o;
}

// u = c*(theta) everywhere except the center
Field geodesic_texture(int n) {
  const auto grid = build_grid(Domain::disk(1.0), n);
  Field f = make_field(grid, 0.1, unit_params, {});
  radial_initialization(f, {});
  return f;
}

const Field& converged(double eps) {
  static std::map<double, Field> cache;
  auto it = cache.find(eps);
  if (it == cache.end()) {
    SolveOptions opts;
    opts.workers = 4;
    it = cache.emplace(eps, solve_multilevel(Domain::disk(1.0), 256, eps, unit_params, {}, opts).fine.field).first;
  }
  return it->second;
}

// Smooth random field with a few random bumps of low order, for the
// threshold properties.
Field bumpy_field(std::uint64_t seed) {
  const auto grid = build_grid(Domain::disk(1.0), 64);
  Field f = make_field(grid, 0.1, unit_params, {});
  radial_initialization(f, {});
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.7, 0.7), w(0.05, 0.2), amp(0.3, 1.0);
  for (int b = 0; b < 6; ++b) {
    const double cx = u(rng), cy = u(rng), width = w(rng), a = amp(rng);
    for (std::size_t k : grid->interior()) {
      const double r = std::hypot(grid->x(grid->col(k)) - cx, grid->y(grid->row(k)) - cy);
      f[k] *= 1.0 - a * std::exp(-r * r / (width * width));
    }
  }
  return f;
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

}  // namespace

TEST(Defects, TrivialFieldHasNone) {
  const BoundaryConditions bc{ConstantDirector{{0, 0, 1}}};
  Field f = make_field(build_grid(Domain::disk(1.0), 64), 0.1, unit_params, bc);
  radial_initialization(f, bc);
  const DefectReport r = detect_defects(f, 0.3);
  EXPECT_EQ(r.count(), 0u);
  EXPECT_EQ(r.c_hat, 0.0);
}

TEST(Defects, BiaxialCoreSingleCentralComponent) {
  const auto grid = build_grid(Domain::disk(1.0), 256);
  const DefectReport r = detect_defects(biaxial_core(grid, 0.05, unit_params), 0.3);
  ASSERT_EQ(r.count(), 1u);
  EXPECT_NEAR(r.components[0].centroid.x, 0.0, 1e-12);
  EXPECT_NEAR(r.components[0].centroid.y, 0.0, 1e-12);
  EXPECT_LE(r.components[0].radius, biaxial_core_radius(0.05, unit_params) + grid->h());
}

TEST(Defects, ClearingOutConstants) {
  const Field f = biaxial_core(build_grid(Domain::disk(1.0), 128), 0.05, unit_params);
  const DefectReport r = detect_defects(f, 0.3);
  EXPECT_DOUBLE_EQ(r.c_hat, scaled_gradient_sup(f));
  EXPECT_DOUBLE_EQ(r.lambda0, 0.3 / (2 * r.c_hat));
  EXPECT_GT(r.f0, 0.0);
  EXPECT_GT(r.m0, 0.0);
  EXPECT_DOUBLE_EQ(r.mu0, pi / 2 * r.lambda0 * r.lambda0 * std::min(r.f0, r.m0 * 0.09 / 8));
  EXPECT_THROW(detect_defects(f, 0.0), Error);
}

TEST(Defects, ConvergedMinimizerSingleSmallCore) {
  const Field& f = converged(0.05);
  const DefectReport r = detect_defects(f, 0.3);
  ASSERT_EQ(r.count(), 1u);
  EXPECT_LE(2 * r.components[0].radius, 10 * 0.05);
}

TEST(Defects, ComponentsMatchUnionFindOracle) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Field f = bumpy_field(seed);
    const Grid& g = *f.grid;
    for (double delta : {0.2, 0.3, 0.45}) {
      const DefectReport r = detect_defects(f, delta, quick());
      std::vector<std::size_t> parent(g.size());
      std::iota(parent.begin(), parent.end(), 0);
      auto hot = [&](std::size_t k) { return g.kind(k) == CellKind::Interior && dist_to_N(f[k]) > delta; };
      for (std::size_t k : g.interior()) {
        if (!hot(k)) continue;
        for (std::size_t n : {k + 1, k + std::size_t(g.nx())})
          if (n < g.size() && hot(n)) parent[find_root(parent, n)] = find_root(parent, k);
      }
      std::set<std::size_t> roots;
      std::size_t hot_cells = 0;
      for (std::size_t k : g.interior())
        if (hot(k)) roots.insert(find_root(parent, k)), ++hot_cells;
      EXPECT_EQ(r.count(), roots.size());

      std::set<std::size_t> all;
      for (const DefectComponent& c : r.components) {
        EXPECT_EQ(c.cells, c.members.size());
        const std::size_t root = find_root(parent, c.members.front());
        for (std::size_t k : c.members) {
          EXPECT_TRUE(hot(k));
          EXPECT_EQ(find_root(parent, k), root);
          EXPECT_TRUE(all.insert(k).second);  // disjoint
          const double d = std::hypot(g.x(g.col(k)) - c.ball_center.x, g.y(g.row(k)) - c.ball_center.y);
          EXPECT_LE(d, c.radius);
        }
      }
      EXPECT_EQ(all.size(), hot_cells);
      for (std::size_t i = 1; i < r.components.size(); ++i)
        EXPECT_LE(r.components[i - 1].centroid.x, r.components[i].centroid.x);
    }
  }
}

TEST(Defects, MonotoneInThreshold) {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    const Field f = bumpy_field(seed);
    const DefectReport loose = detect_defects(f, 0.15, quick());
    const DefectReport tight = detect_defects(f, 0.4, quick());
    for (const DefectComponent& c : tight.components) {
      int owners = 0;
      for (const DefectComponent& big : loose.components)
        owners += std::includes(big.members.begin(), big.members.end(), c.members.begin(), c.members.end());
      EXPECT_EQ(owners, 1);
    }
  }
}

TEST(Defects, MinimalEnclosingCircleOracle) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point> pts(2 + trial % 15);
    for (auto& p : pts) p = {g(rng), g(rng)};
    // brute force: smallest candidate circle through 2 or 3 points covering all
    double best = INFINITY;
    auto covers = [&](const detail::Circle& c) {
      for (const Point& p : pts)
        if (std::hypot(p.x - c.c.x, p.y - c.c.y) > c.r + 1e-9) return false;
      return true;
    };
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        const detail::Circle c2 = detail::circle_two(pts[i], pts[j]);
        if (covers(c2)) best = std::min(best, c2.r);
        for (std::size_t k = j + 1; k < pts.size(); ++k) {
          const detail::Circle c3 = detail::circle_three(pts[i], pts[j], pts[k]);
          if (covers(c3)) best = std::min(best, c3.r);
        }
      }
    const detail::Circle mec = detail::minimal_enclosing_circle(pts);
    EXPECT_NEAR(mec.r, best, 1e-9);
    EXPECT_TRUE(covers(mec));
  }
}

TEST(Biaxiality, ComparisonFields) {
  const auto grid = build_grid(Domain::disk(1.0), 65);
  const BiaxialityStats uni = biaxiality_stats(uniaxial_defect(grid, 0.2, 1, 0.05, unit_params));
  EXPECT_FALSE(uni.maximal_biaxial);
  EXPECT_EQ(uni.min_norm, 0.0);
  EXPECT_NEAR(uni.argmin.x, 0.0, 1e-15);
  const BiaxialityStats bi = biaxiality_stats(biaxial_core(grid, 0.1, unit_params));
  EXPECT_TRUE(bi.maximal_biaxial);
  EXPECT_GT(bi.min_norm, 0.0);
  EXPECT_LE(std::hypot(bi.argmax.x, bi.argmax.y), biaxial_core_radius(0.1, unit_params));
  EXPECT_EQ(biaxiality_stats(biaxial_core(grid, 0.1, unit_params), 0.0).maximal_biaxial, bi.max_beta >= 1.0);
}

TEST(RadialProfile, GeodesicTexture) {
  const Field f = geodesic_texture(256);
  const RadialProfile p = radial_profile(f, {0, 0}, {0.6, 0.2, 0.4});
  ASSERT_EQ(p.samples.size(), 3u);
  EXPECT_EQ(p.samples[0].rho, 0.2);
  EXPECT_EQ(p.kappa_star, kappa_star());
  for (const ProfileSample& s : p.samples) {
    EXPECT_NEAR(s.S, kappa_star(), 1e-3);
    EXPECT_GE(s.S, 0.0);
    EXPECT_LE(s.R, 1e-4);
    EXPECT_NEAR(s.length, minimal_loop_length(), 1e-3);
    EXPECT_LE(s.speed_variance, 1e-4);
  }
}

TEST(RadialProfile, Errors) {
  const Field f = geodesic_texture(128);
  try {
    (void)radial_profile(f, {0, 0}, {0.995});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CircleOutsideDomain);
  }
  EXPECT_THROW(radial_profile(f, {0.5, 0}, {0.6}), Error);
  const Field core = biaxial_core(f.grid, 0.05, unit_params);
  try {
    (void)radial_profile(core, {0, 0}, {0.05});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CircleMeetsDefect);
  }
}

TEST(RadialProfile, ConvergedMinimizerBounds) {
  const Field& f = converged(0.05);
  const DefectReport d = detect_defects(f, 0.3, quick());
  ASSERT_EQ(d.count(), 1u);
  const RadialProfile p = radial_profile(f, d.components[0].ball_center, {0.5, 0.4, 0.3, 0.2});
  for (const ProfileSample& s : p.samples) {
    EXPECT_GE(s.S, kappa_star() - 0.05);
    const double excess = s.S - kappa_star();
    EXPECT_LE(std::abs(s.rho * s.R - excess), 0.1 * std::max(excess, 0.02));
  }
}

TEST(LoopDiagnostics, CanonicalFields) {
  const LoopDiagnostics geo = circle_loop_diagnostics(geodesic_texture(256), {0, 0}, 0.5);
  EXPECT_NEAR(geo.length, pi * std::sqrt(3.0), 1e-3);
  EXPECT_LE(geo.speed_variance, 1e-4);
  EXPECT_EQ(geo.homotopy, HomotopyClass::Nontrivial);

  const BoundaryConditions bc{ConstantDirector{{1, 0, 0}}};
  Field flat = make_field(build_grid(Domain::disk(1.0), 64), 0.1, unit_params, bc);
  radial_initialization(flat, bc);
  const LoopDiagnostics triv = circle_loop_diagnostics(flat, {0.1, 0.1}, 0.3);
  EXPECT_EQ(triv.homotopy, HomotopyClass::Trivial);
  EXPECT_NEAR(triv.length, 0.0, 1e-12);
}

TEST(LoopDiagnostics, ConvergedMinimizerApproachesGeodesic) {
  const Field& f = converged(0.05);
  double previous = INFINITY;
  for (double rho : {0.8, 0.6, 0.4}) {
    const LoopDiagnostics l = circle_loop_diagnostics(f, {0, 0}, rho);
    EXPECT_EQ(l.homotopy, HomotopyClass::Nontrivial);
    EXPECT_LE(l.length, previous + 1e-6);
    EXPECT_NEAR(l.length, minimal_loop_length(), 0.05 * minimal_loop_length());
    previous = l.length;
  }
}

TEST(Pohozaev, TermsOnLinearField) {
  // u = x1 A: both fluxes equal pi rho^2 |A|^2 / 2; potential terms by polar quadrature
  QTensor A;
  A.c = {0.2, 0.1, -0.3, 0.25, 0.15};
  const auto grid = build_grid(Domain::disk(1.0), 256);
  Field f(grid, 0.3, unit_params);
  for (std::size_t k = 0; k < grid->size(); ++k)
    if (grid->kind(k) != CellKind::Exterior) f[k] = A * grid->x(grid->col(k));
  const double rho = 0.5;
  const PohozaevTerms t = pohozaev_terms(f, {0, 0}, rho);
  // central differences along the circle carry an O(h^2) chord error
  EXPECT_NEAR(t.normal_flux / (pi * rho * rho * A.norm2() / 2), 1.0, 1e-6);
  EXPECT_NEAR(t.tangential_flux / (pi * rho * rho * A.norm2() / 2), 1.0, 2e-4);
  double bulk = 0.0, edge = 0.0;
  const int nr = 400, nt = 400;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nt; ++j) {
      const double r = (i + 0.5) * rho / nr, th = (j + 0.5) * 2 * pi / nt;
      bulk += bulk_fstar(A * (r * std::cos(th)), unit_params) * r * (rho / nr) * (2 * pi / nt);
    }
  for (int j = 0; j < nt; ++j) {
    const double th = (j + 0.5) * 2 * pi / nt;
    edge += bulk_fstar(A * (rho * std::cos(th)), unit_params) * rho * (2 * pi / nt);
  }
  const double eps2 = 0.09;
  EXPECT_NEAR(t.bulk_potential / (2 / eps2 * bulk), 1.0, 1e-3);
  EXPECT_NEAR(t.boundary_potential / (rho / eps2 * edge), 1.0, 1e-4);
}

TEST(Pohozaev, DetectsNonSolutions) {
  // melting cores of random size about random centers are not critical points
  const auto grid = build_grid(Domain::disk(1.0), 128);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> core(0.2, 0.6), shift(-0.2, 0.2);
  for (int trial = 0; trial < 10; ++trial) {
    const Field f = uniaxial_defect(grid, core(rng), 1, 0.1, unit_params);
    EXPECT_GT(pohozaev_residual(f, {shift(rng), shift(rng)}, 0.5), 0.1);
  }
}

TEST(Pohozaev, SmallOnConvergedSolutions) {
  const Field& f = converged(0.05);
  EXPECT_LE(pohozaev_residual(f, {0, 0}, 0.5), 0.05);       // on the defect
  EXPECT_LE(pohozaev_residual(f, {0.4, -0.3}, 0.3), 0.05);  // away from it
  try {
    (void)pohozaev_residual(f, {0.5, 0.0}, 0.6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BallOutsideDomain);
  }
}

TEST(Pohozaev, BallMustAvoidTheHole) {
  const auto grid = build_grid(Domain::annulus(0.3, 1.0), 128);
  const Field f(grid, 0.1, unit_params);
  EXPECT_THROW((void)pohozaev_residual(f, {0, 0}, 0.5), Error);
  EXPECT_NO_THROW((void)pohozaev_residual(f, {0.6, 0}, 0.2));
}
