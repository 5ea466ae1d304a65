#pragma once

// The four ldg2d commands. Each returns the JSON it wrote and throws
// ldg::Error on failure; exit_code() maps the error to the process status.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ldg/analysis.hpp"
#include "ldg/config.hpp"
#include "ldg/construct.hpp"
#include "ldg/io.hpp"

namespace ldg {

enum ExitCode { ExitOk = 0, ExitConfig = 2, ExitNumerical = 3, ExitIo = 4 };

inline int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::InvalidSpec:
    case ErrorCode::NonPositiveCoefficient:
    case ErrorCode::NonUnitVector:
    case ErrorCode::DomainTooThin:
    case ErrorCode::EpsilonTooLarge:
      return ExitConfig;
    case ErrorCode::IoFailure:
    case ErrorCode::DumpCorrupt:
    case ErrorCode::VersionMismatch:
      return ExitIo;
    default:
      return ExitNumerical;
  }
}

struct CliOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  double delta = 0.3;
  std::ostream* log = &std::cerr;
};

namespace detail {

inline std::filesystem::path out_dir(const RunConfig& cfg, const CliOptions& o) {
  return o.out ? *o.out : std::filesystem::path(cfg.out_dir);
}

inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}

template <class... Args>
void say(const CliOptions& o, const Args&... args) {
  if (!o.log) return;
  std::lock_guard lock(log_mutex());
  (*o.log << "ldg2d: " << ... << args) << "\n";
}

struct SolveRun {
  SolveResult result;
  std::vector<LevelReport> levels;
  bool profile_start = false;
  bool fallback = false;  // profile requested but not applicable
  double seconds = 0.0;
};

inline SolveRun solve_epsilon(const RunConfig& cfg, double eps, std::uint64_t seed, const CliOptions& o) {
  const MaterialParams p = cfg.params();
  SolveOptions opts = cfg.solver;
  opts.seed = seed;
  const bool want_profile = cfg.warm_start == WarmStart::Profile;
  const auto start = std::chrono::steady_clock::now();
  SolveRun run;
  if (cfg.multilevel) {
    MultilevelResult r = solve_multilevel(cfg.domain, cfg.n, eps, p, cfg.boundary, opts, cfg.min_level, cfg.noise,
                                          want_profile);
    run.result = std::move(r.fine);
    run.levels = std::move(r.levels);
    run.profile_start = r.profile_start;
  } else {
    Field f = make_field(build_grid(cfg.domain, cfg.n), eps, p, cfg.boundary);
    run.profile_start = warm_start(f, cfg.boundary, cfg.noise, seed, want_profile);
    run.result = minimize(std::move(f), opts);
    run.levels.push_back({cfg.n, run.result.iterations, run.result.converged, run.result.grad_sup});
  }
  if (cfg.solver.truncation) run.result.field = truncate(std::move(run.result.field));
  run.fallback = want_profile && !run.profile_start;
  if (run.fallback)
    say(o, "warning: eps = ", eps, " cannot host the biaxial-core warm start (needs a disk, an odd geodesic datum and ",
        "eps < R sqrt(sigma) = ", cfg.domain.outer * std::sqrt(p.sigma), "); using the radial extension of the datum");
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!run.result.converged)
    say(o, "warning: eps = ", eps, " stopped after ", run.result.iterations, " iterations with sup|grad| = ",
        run.result.grad_sup, " > ", cfg.solver.grad_tol);
  return run;
}

inline json solve_summary(const RunConfig& cfg, double eps, std::uint64_t seed, const SolveRun& run, double delta) {
  const Field& f = run.result.field;
  json levels = json::array();
  for (const LevelReport& l : run.levels)
    levels.push_back({{"n", l.n}, {"iterations", l.iterations}, {"converged", l.converged}, {"grad_sup", l.grad_sup}});
  json j;
  j["epsilon"] = eps;
  j["seed"] = seed;
  j["grid"] = {{"n", cfg.n}, {"h", f.grid->h()}, {"interior_cells", f.grid->interior().size()}};
  j["domain"] = domain_json(cfg.domain);
  j["material"] = to_json(f.params);
  j["energy"] = to_json(energy(f, cfg.solver.workers));
  j["biaxiality"] = to_json(biaxiality_stats(f));
  j["defects"] = to_json(detect_defects(f, delta));
  j["solver"] = {{"converged", run.result.converged},
                 {"iterations", run.result.iterations},
                 {"grad_sup", run.result.grad_sup},
                 {"grad_tol", cfg.solver.grad_tol},
                 {"levels", levels}};
  j["warm_start"] = run.profile_start ? "profile" : (run.fallback ? "radial (fallback)" : "radial");
  j["wall_time_s"] = run.seconds;
  return j;
}

}  // namespace detail

inline json cmd_solve(const RunConfig& cfg, const CliOptions& o) {
  if (!cfg.epsilon) throw Error(ErrorCode::ConfigInvalid, "epsilon: required for solve");
  const std::uint64_t seed = o.seed.value_or(cfg.solver.seed);
  const auto dir = detail::out_dir(cfg, o);
  detail::say(o, "solve eps = ", *cfg.epsilon, " n = ", cfg.n);
  const detail::SolveRun run = detail::solve_epsilon(cfg, *cfg.epsilon, seed, o);
  const json summary = detail::solve_summary(cfg, *cfg.epsilon, seed, run, o.delta);
  write_dump(dir / "field.ldg", run.result.field, cfg.encoding, seed);
  write_atomic(dir / "iterations.csv", iteration_csv(run.result.log));
  if (cfg.vtk) write_atomic(dir / "field.vtk", vtk_export(run.result.field));
  write_atomic(dir / "summary.json", summary.dump(2) + "\n");
  detail::say(o, "E = ", summary["energy"]["rescaled"]["total"].get<double>(),
              ", defects = ", summary["defects"]["count"].get<std::size_t>(), ", wrote ", dir.string());
  return summary;
}

struct LineFit {
  double slope = 0.0, intercept = 0.0;
};

/// Least squares y = slope x + intercept.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sx += x[i], sy += y[i], sxx += x[i] * x[i], sxy += x[i] * y[i];
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

/// File name of the field dump a sweep writes for one epsilon.
inline std::string sweep_dump_name(double eps) {
  std::ostringstream name;
  name << "field_eps" << eps << ".ldg";
  return name.str();
}

inline json cmd_sweep(const RunConfig& cfg, const CliOptions& o) {
  const auto& eps = cfg.epsilons;
  if (eps.size() < 3) throw Error(ErrorCode::ConfigInvalid, "epsilons: a sweep needs at least 3 values");
  for (std::size_t i = 1; i < eps.size(); ++i)
    if (!(eps[i] < eps[i - 1]))
      throw Error(ErrorCode::ConfigInvalid, "epsilons[" + std::to_string(i) + "]: values must be strictly decreasing");
  const std::uint64_t seed = o.seed.value_or(cfg.solver.seed);
  const auto dir = detail::out_dir(cfg, o);

  std::vector<std::optional<detail::SolveRun>> runs(eps.size());
  std::vector<std::exception_ptr> errors(eps.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < eps.size();) {
      try {
        detail::say(o, "sweep eps = ", eps[i], " n = ", cfg.n);
        runs[i] = detail::solve_epsilon(cfg, eps[i], seed, o);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, std::min<int>(o.jobs, int(eps.size()))); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::string csv = "epsilon,E_total,E_dirichlet,E_potential,max_beta,min_absQ,defect_count\n";
  json rows = json::array();
  std::vector<double> x, y;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const json s = detail::solve_summary(cfg, eps[i], seed, *runs[i], o.delta);
    const json& e = s["energy"]["rescaled"];
    const auto d = [](const json& v) { return detail::num(v.get<double>()); };
    csv += detail::num(eps[i]) + "," + d(e["total"]) + "," + d(e["dirichlet"]) + "," + d(e["potential"]) + "," +
           d(s["biaxiality"]["max_beta"]) + "," + d(s["biaxiality"]["min_absQ"]) + "," +
           std::to_string(s["defects"]["count"].get<std::size_t>()) + "\n";
    x.push_back(std::abs(std::log(eps[i])));
    y.push_back(e["total"].get<double>());
    rows.push_back(s);
    write_dump(dir / sweep_dump_name(eps[i]), runs[i]->result.field, cfg.encoding, seed);
  }
  const LineFit fit = fit_line(x, y);
  json out;
  out["fit"] = {{"slope", fit.slope},
                {"intercept", fit.intercept},
                {"kappa_star", kappa_star()},
                {"slope_over_kappa_star", fit.slope / kappa_star()}};
  out["seed"] = seed;
  out["runs"] = rows;
  write_atomic(dir / "sweep.csv", csv);
  write_atomic(dir / "sweep.json", out.dump(2) + "\n");
  detail::say(o, "slope = ", fit.slope, " (kappa* = ", kappa_star(), "), wrote ", dir.string());
  return out;
}

inline json cmd_analyze(const std::filesystem::path& dump, const std::filesystem::path& dir, const CliOptions& o) {
  const LoadedField loaded = read_dump(dump);
  const Field& f = loaded.field;
  const Domain& d = f.grid->domain();
  json out;
  out["source"] = dump.string();
  out["seed"] = loaded.header.seed;
  out["epsilon"] = f.epsilon;
  out["material"] = to_json(f.params);
  out["energy"] = to_json(energy(f));
  out["biaxiality"] = to_json(biaxiality_stats(f));
  const DefectReport defects = detect_defects(f, o.delta);
  out["defects"] = to_json(defects);

  // dominant defect: the largest component, ties to the first in order
  Point center{d.cx, d.cy};
  std::size_t best = 0;
  for (const DefectComponent& c : defects.components)
    if (c.cells > best) best = c.cells, center = c.ball_center;

  // log-spaced radii from 5 eps to R/2, a single circle when 5 eps >= R/2;
  // circles that leave the domain or meet a defect are skipped
  const double hi = 0.5 * d.outer, lo = std::min(5.0 * f.epsilon, hi);
  const int count = lo < hi ? 12 : 1;
  std::vector<double> rhos;
  for (int i = 0; i < count; ++i) rhos.push_back(count == 1 ? hi : lo * std::pow(hi / lo, double(i) / (count - 1)));
  RadialProfile profile;
  profile.center = center;
  json skipped = json::array();
  const CircleOptions circle{256, o.delta};
  for (double rho : rhos) {
    try {
      const RadialProfile one = radial_profile(f, center, {rho}, circle);
      profile.samples.push_back(one.samples.front());
    } catch (const Error& e) {
      skipped.push_back({{"rho", rho}, {"reason", std::string(to_string(e.code()))}});
    }
  }
  out["profile"] = to_json(profile);
  out["profile_skipped"] = skipped;
  if (!profile.samples.empty()) {
    try {
      out["loop"] = to_json(circle_loop_diagnostics(f, center, profile.samples.front().rho, circle));
      out["loop"]["rho"] = profile.samples.front().rho;
    } catch (const Error& e) {
      out["loop"] = {{"error", e.what()}};
    }
  }
  try {
    out["pohozaev"] = {{"center", to_json(center)},
                       {"radius", hi},
                       {"residual", pohozaev_residual(f, center, hi)}};
  } catch (const Error& e) {
    out["pohozaev"] = {{"center", to_json(center)}, {"radius", hi}, {"error", e.what()}};
  }
  write_atomic(dir / "analysis.json", out.dump(2) + "\n");
  write_atomic(dir / "profile.csv", profile_csv(profile));
  detail::say(o, "analyzed ", dump.string(), ": defects = ", defects.count(), ", wrote ", dir.string());
  return out;
}

inline json cmd_compare(const RunConfig& cfg, const CliOptions& o) {
  if (!cfg.epsilon) throw Error(ErrorCode::ConfigInvalid, "epsilon: required for compare");
  if (cfg.domain.kind != DomainKind::Disk) throw Error(ErrorCode::ConfigInvalid, "domain.kind: compare needs a disk");
  const MaterialParams p = cfg.params();
  const double eps = *cfg.epsilon;
  require_core_fits(cfg.domain.outer, eps, p);
  const auto grid = build_grid(cfg.domain, cfg.n);
  const CoreComparison cmp = compare_cores(grid, eps, p, cfg.solver.workers);
  const CoreEnergy closed = biaxial_core_energy_closed_form(cfg.domain.outer, eps, p);
  json out;
  out["material"] = to_json(p);
  out["grid"] = {{"n", cfg.n}, {"h", grid->h()}};
  out["comparison"] = to_json(cmp);
  out["closed_form"] = {{"dirichlet", closed.dirichlet},
                        {"potential_upper_bound", closed.potential_upper_bound},
                        {"discrete_dirichlet", cmp.biaxial.dirichlet},
                        {"discrete_potential", cmp.biaxial.potential},
                        {"relative_error", std::abs(cmp.biaxial.dirichlet - closed.dirichlet) / closed.dirichlet}};
  const auto dir = detail::out_dir(cfg, o);
  write_atomic(dir / "compare.json", out.dump(2) + "\n");
  detail::say(o, "gap = ", cmp.gap, " (predicted ", cmp.predicted, "), wrote ", dir.string());
  return out;
}

}  // namespace ldg
