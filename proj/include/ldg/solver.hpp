#pragma once

// Discrete energy
//
//   E_h = 1/2 sum_edges |Q_i - Q_j|^2 + h^2 / eps^2 sum_interior f*(Q_i)
//
// where the edge sum runs over 4-neighbour pairs with at least one Interior
// endpoint, its exact gradient, and a Barzilai-Borwein descent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ldg/grid.hpp"

namespace ldg {

struct EnergyBreakdown {
  double dirichlet = 0.0;
  double potential = 0.0;
  double total = 0.0;
  // physical units (scaled by 2 s*^2 / 3)
  double dirichlet_phys = 0.0;
  double potential_phys = 0.0;
  double total_phys = 0.0;
};

enum class StepRule { Fixed, BarzilaiBorwein };

struct SolveOptions {
  int max_iters = 200000;
  double grad_tol = 1e-6;
  StepRule step_rule = StepRule::BarzilaiBorwein;
  double fixed_step = 0.0;  // 0 picks a stable explicit step
  bool truncation = true;
  std::uint64_t seed = 0;
  int workers = 1;
  int log_every = 1;  // record every k-th iteration in the log
};

struct IterationRecord {
  int iter = 0;
  double energy_total = 0.0;
  double energy_dirichlet = 0.0;
  double energy_potential = 0.0;
  double grad_sup = 0.0;
  double step = 0.0;
};

struct SolveResult {
  Field field;
  std::vector<IterationRecord> log;
  int iterations = 0;
  bool converged = false;
  double grad_sup = 0.0;  // sup |gradient| / h^2 at exit
};

namespace detail {

inline constexpr int rows_per_block = 8;

// Runs body(row_begin, row_end, block) for every block of rows, spread over
// workers. Blocks are fixed, so per-block partial results do not depend on
// the worker count.
inline void for_row_blocks(int rows, int workers, const std::function<void(int, int, int)>& body) {
  const int blocks = (rows + rows_per_block - 1) / rows_per_block;
  auto run = [&](int first, int stride) {
    for (int b = first; b < blocks; b += stride) body(b * rows_per_block, std::min(rows, (b + 1) * rows_per_block), b);
  };
  if (workers <= 1 || blocks < 2) {
    run(0, 1);
    return;
  }
  std::vector<std::thread> pool;
  const int w = std::min(workers, blocks);
  for (int t = 1; t < w; ++t) pool.emplace_back(run, t, w);
  run(0, w);
  for (auto& th : pool) th.join();
}

/// Pairwise reduction in a fixed binary tree.
inline double tree_sum(std::vector<double> v) {
  if (v.empty()) return 0.0;
  while (v.size() > 1) {
    std::vector<double> next((v.size() + 1) / 2);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] = v[2 * i] + (2 * i + 1 < v.size() ? v[2 * i + 1] : 0.0);
    v.swap(next);
  }
  return v[0];
}

inline int block_count(const Grid& g) { return (g.ny() + rows_per_block - 1) / rows_per_block; }

}  // namespace detail

inline EnergyBreakdown energy(const Field& f, int workers = 1) {
  const Grid& g = *f.grid;
  const double w = g.h() * g.h() / (f.epsilon * f.epsilon);
  const int blocks = detail::block_count(g);
  std::vector<double> dir(blocks, 0.0), pot(blocks, 0.0);
  detail::for_row_blocks(g.ny(), workers, [&](int j0, int j1, int b) {
    double ed = 0.0, ep = 0.0;
    for (int j = j0; j < j1; ++j)
      for (int i = 0; i < g.nx(); ++i) {
        const std::size_t k = g.index(i, j);
        const CellKind ck = g.kind(k);
        if (ck == CellKind::Exterior) continue;
        const bool interior = ck == CellKind::Interior;
        if (interior) ep += bulk_fstar(f[k], f.params);
        if (i + 1 < g.nx()) {
          const std::size_t r = k + 1;
          if (interior || g.kind(r) == CellKind::Interior) ed += (f[r] - f[k]).norm2();
        }
        if (j + 1 < g.ny()) {
          const std::size_t u = k + g.nx();
          if (interior || g.kind(u) == CellKind::Interior) ed += (f[u] - f[k]).norm2();
        }
      }
    dir[b] = 0.5 * ed;
    pot[b] = w * ep;
  });
  EnergyBreakdown e;
  e.dirichlet = detail::tree_sum(std::move(dir));
  e.potential = detail::tree_sum(std::move(pot));
  e.total = e.dirichlet + e.potential;
  const double s = f.params.energy_scale();
  e.dirichlet_phys = e.dirichlet * s;
  e.potential_phys = e.potential * s;
  e.total_phys = e.total * s;
  return e;
}

/// Gradient of energy() with respect to every Interior unknown, stored on the
/// full grid (zero on non-Interior cells).
inline void el_gradient(const Field& f, std::vector<QTensor>& out, int workers = 1) {
  const Grid& g = *f.grid;
  const double w = g.h() * g.h() / (f.epsilon * f.epsilon);
  out.assign(g.size(), QTensor{});
  const int nx = g.nx();
  detail::for_row_blocks(g.ny(), workers, [&](int j0, int j1, int) {
    for (int j = j0; j < j1; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = g.index(i, j);
        if (g.kind(k) != CellKind::Interior) continue;
        const QTensor& q = f[k];
        QTensor r = grad_fstar(q, f.params) * w;
        r += q * 4.0;
        r -= f[k - 1];
        r -= f[k + 1];
        r -= f[k - nx];
        r -= f[k + nx];
        out[k] = r;
      }
  });
}

inline std::vector<QTensor> el_gradient(const Field& f, int workers = 1) {
  std::vector<QTensor> out;
  el_gradient(f, out, workers);
  return out;
}

inline double sup_norm(const Grid& g, const std::vector<QTensor>& v) {
  double m = 0.0;
  for (std::size_t k : g.interior()) m = std::max(m, v[k].norm());
  return m;
}

/// Radial retraction onto the closed unit ball of S0; never raises the energy.
inline Field truncate(Field f) {
  for (std::size_t k : f.grid->interior()) {
    const double n = f[k].norm();
    if (n > 1.0) f[k] *= 1.0 / n;
  }
  return f;
}

inline void add_noise(Field& f, double amplitude, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t k : f.grid->interior())
    for (auto& c : f[k].c) c += amplitude * u(rng);
}

/// f*(q + d) - f*(q) expanded in d, so small steps do not cancel against
/// the value of f*.
inline double potential_change(const QTensor& q, const QTensor& d, const MaterialParams& p) {
  const double t2 = q.norm2();
  const double dt2 = 2.0 * contract(q, d) + d.norm2();
  const QTensor d2 = square_traceless(d);
  const double dt3 = 3.0 * contract(square_traceless(q), d) + 3.0 * contract(d2, q) + contract(d2, d);
  return -0.5 * p.a_star * dt2 - p.b_star / 3.0 * dt3 + 0.25 * p.c_star * dt2 * (2.0 * t2 + dt2);
}

/// energy(prev + delta) - energy(prev), delta supported on Interior cells.
inline EnergyBreakdown energy_change(const Field& prev, const std::vector<QTensor>& delta, int workers = 1) {
  const Grid& g = *prev.grid;
  const double w = g.h() * g.h() / (prev.epsilon * prev.epsilon);
  const int blocks = detail::block_count(g);
  std::vector<double> dir(blocks, 0.0), pot(blocks, 0.0);
  const int nx = g.nx();
  detail::for_row_blocks(g.ny(), workers, [&](int j0, int j1, int b) {
    double ed = 0.0, ep = 0.0;
    auto edge = [&](std::size_t k, std::size_t r) {
      double s = 0.0;
      for (int c = 0; c < 5; ++c) {
        const double e = prev[r].c[c] - prev[k].c[c];
        const double dd = delta[r].c[c] - delta[k].c[c];
        s += dd * (2.0 * e + dd);
      }
      ed += s;
    };
    for (int j = j0; j < j1; ++j)
      for (int i = 0; i < nx; ++i) {
        const std::size_t k = g.index(i, j);
        const CellKind ck = g.kind(k);
        if (ck == CellKind::Exterior) continue;
        const bool interior = ck == CellKind::Interior;
        if (interior) ep += potential_change(prev[k], delta[k], prev.params);
        if (i + 1 < nx && (interior || g.kind(k + 1) == CellKind::Interior)) edge(k, k + 1);
        if (j + 1 < g.ny() && (interior || g.kind(k + nx) == CellKind::Interior)) edge(k, k + nx);
      }
    dir[b] = 0.5 * ed;
    pot[b] = w * ep;
  });
  EnergyBreakdown e;
  e.dirichlet = detail::tree_sum(std::move(dir));
  e.potential = detail::tree_sum(std::move(pot));
  e.total = e.dirichlet + e.potential;
  return e;
}

/// energy(next) - energy(prev) for fields that differ on Interior cells only.
inline EnergyBreakdown energy_change(const Field& prev, const Field& next, int workers = 1) {
  std::vector<QTensor> delta(prev.values.size());
  for (std::size_t k : prev.grid->interior()) delta[k] = next[k] - prev[k];
  return energy_change(prev, delta, workers);
}

/// Gradient descent with Barzilai-Borwein steps safeguarded by monotone
/// Armijo backtracking. Stops when sup |grad| / h^2 <= grad_tol.
inline SolveResult minimize(Field field, const SolveOptions& opts,
                            const std::function<void(const IterationRecord&)>& on_iter = {}) {
  if (opts.max_iters < 1 || !(opts.grad_tol > 0.0))
    throw Error(ErrorCode::InvalidSpec, "max_iters must be >= 1 and grad_tol > 0");
  const Grid& g = *field.grid;
  const double h2 = g.h() * g.h();
  const double w = h2 / (field.epsilon * field.epsilon);
  // the Dirichlet Hessian is bounded by 8, the potential one by about 3 w
  const double safe_step = 1.0 / (8.0 + 3.0 * w * std::max(1.0, field.params.a_star + field.params.c_star));

  SolveResult res;
  auto check_finite = [&](const Field& f, int iter) {
    if (!f.finite()) {
      std::ostringstream msg;
      msg << "non-finite value at iteration " << iter;
      throw Error(ErrorCode::NonFiniteEncountered, msg.str());
    }
  };
  check_finite(field, 0);
  if (opts.truncation) field = truncate(std::move(field));

  std::vector<QTensor> grad, grad_new;
  el_gradient(field, grad, opts.workers);
  EnergyBreakdown e = energy(field, opts.workers);
  double gsup = sup_norm(g, grad);
  double step = opts.step_rule == StepRule::Fixed && opts.fixed_step > 0.0 ? opts.fixed_step : safe_step;

  auto record = [&](int iter, double st) {
    IterationRecord r{iter, e.total, e.dirichlet, e.potential, gsup / h2, st};
    if (opts.log_every > 0 && iter % opts.log_every == 0) res.log.push_back(r);
    if (on_iter) on_iter(r);
  };
  record(0, 0.0);

  const int blocks = detail::block_count(g);
  auto interior_dot = [&](auto&& term) {
    std::vector<double> part(blocks, 0.0);
    for (std::size_t k : g.interior()) part[g.row(k) / detail::rows_per_block] += term(k);
    return detail::tree_sum(std::move(part));
  };

  std::vector<QTensor> delta(g.size());
  int iter = 0;
  for (; iter < opts.max_iters && gsup / h2 > opts.grad_tol; ++iter) {
    double alpha = step;
    EnergyBreakdown change;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving) {
      for (std::size_t k : g.interior()) {
        delta[k] = grad[k] * (-alpha);
        if (opts.truncation) {
          const QTensor q = field[k] + delta[k];
          const double n = q.norm();
          if (n > 1.0) delta[k] = q * (1.0 / n) - field[k];
        }
      }
      change = energy_change(field, delta, opts.workers);
      if (!std::isfinite(change.total)) {
        alpha *= 0.5;
        continue;
      }
      if (opts.step_rule == StepRule::Fixed) {
        accepted = true;
        break;
      }
      const double slope = interior_dot([&](std::size_t k) { return contract(grad[k], delta[k]); });
      if (change.total <= 1e-4 * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // no further descent is resolvable along -grad
    for (std::size_t k : g.interior()) field[k] += delta[k];
    check_finite(field, iter + 1);
    el_gradient(field, grad_new, opts.workers);

    if (opts.step_rule == StepRule::BarzilaiBorwein) {
      const double sy = interior_dot([&](std::size_t k) { return contract(delta[k], grad_new[k] - grad[k]); });
      const double ss = interior_dot([&](std::size_t k) { return delta[k].norm2(); });
      step = sy > 0.0 ? std::clamp(ss / sy, 1e-3 * safe_step, 1e3) : std::min(1e3, 2.0 * alpha);
    }

    std::swap(grad, grad_new);
    e.dirichlet += change.dirichlet;
    e.potential += change.potential;
    e.total = e.dirichlet + e.potential;
    gsup = sup_norm(g, grad);
    record(iter + 1, alpha);
  }
  res.iterations = iter;
  res.grad_sup = gsup / h2;
  res.converged = gsup / h2 <= opts.grad_tol;
  if (opts.log_every > 0 && (res.log.empty() || res.log.back().iter != iter))
    res.log.push_back({iter, e.total, e.dirichlet, e.potential, gsup / h2, 0.0});
  res.field = std::move(field);
  return res;
}

// ---------------------------------------------------------------------------
// Initial guesses

/// Radial extension of the boundary datum: every interior cell takes g at its
/// polar angle (annulus: linear blend of the two components, renormalized
/// onto N where possible).
inline void radial_initialization(Field& f, const BoundaryConditions& bc) {
  const Grid& g = *f.grid;
  const Domain& d = g.domain();
  for (std::size_t k : g.interior()) {
    const double x = g.x(g.col(k)), y = g.y(g.row(k));
    const double th = polar_angle(d, x, y);
    if (d.kind == DomainKind::Disk) {
      f[k] = boundary_value(bc.outer, th);
    } else {
      const double s = (std::hypot(x - d.cx, y - d.cy) - d.inner) / (d.outer - d.inner);
      f[k] = boundary_value(bc.inner, th) * (1.0 - s) + boundary_value(bc.outer, th) * s;
    }
  }
}

}  // namespace ldg
