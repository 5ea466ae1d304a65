#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "ldg/cli.hpp"

namespace {

int fail(int code, const std::string& what) {
  std::cerr << "ldg2d: error: " << what << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Landau-de Gennes Q-tensor minimizers on 2D disks and annuli"};
  app.require_subcommand(1);
  ldg::CliOptions opts;
  std::string config, out;
  long long seed = -1;

  auto add_common = [&](CLI::App* sub, const std::string& config_help) {
    sub->add_option("--config", config, config_help)->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--jobs", opts.jobs, "parallel sweep jobs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "random seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--delta", opts.delta, "defect threshold on dist(Q, N)")->check(CLI::PositiveNumber);
  };
  CLI::App* solve = app.add_subcommand("solve", "minimize the energy for one epsilon");
  CLI::App* sweep = app.add_subcommand("sweep", "solve a decreasing list of epsilons and fit E against |log eps|");
  CLI::App* analyze = app.add_subcommand("analyze", "defects, biaxiality, radial profile and Pohozaev residual");
  CLI::App* compare = app.add_subcommand("compare", "biaxial versus uniaxial core energies");
  add_common(solve, "JSON run configuration");
  add_common(sweep, "JSON run configuration");
  add_common(analyze, "field dump written by solve");
  add_common(compare, "JSON run configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ldg::ExitConfig;
  }

  if (!out.empty()) opts.out = out;
  if (seed >= 0) opts.seed = std::uint64_t(seed);
  opts.config = config;
  try {
    if (*analyze) {
      ldg::cmd_analyze(config, opts.out.value_or("out"), opts);
      return ldg::ExitOk;
    }
    const ldg::RunConfig cfg = ldg::load_config(config);
    if (*solve) ldg::cmd_solve(cfg, opts);
    if (*sweep) ldg::cmd_sweep(cfg, opts);
    if (*compare) ldg::cmd_compare(cfg, opts);
    return ldg::ExitOk;
  } catch (const ldg::Error& e) {
    return fail(ldg::exit_code(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail(ldg::ExitNumerical, e.what());
  }
}
