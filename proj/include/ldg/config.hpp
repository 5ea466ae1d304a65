#pragma once

// Strict JSON run configuration. Every key is checked against the schema
// below; unknown or mistyped keys raise ConfigInvalid naming the key path.
//
// {
//   "domain":   {"kind": "disk", "radius": 1.0, "center": [0, 0]}
//             | {"kind": "annulus", "inner": 0.5, "outer": 1.0, "center": [0, 0]},
//   "grid":     {"n": 256},
//   "material": {"a": 1.0, "b": 1.0, "c": 1.0},
//   "epsilon":  0.1,                     (solve, compare)
//   "epsilons": [0.2, 0.1, 0.05],        (sweep)
//   "boundary": {"outer": <datum>, "inner": <datum>},
//       <datum> = {"type": "geodesic", "winding": 1}
//               | {"type": "constant", "director": [0, 0, 1]}
//               | {"type": "samples", "values": [[c0, c1, c2, c3, c4], ...]}
//   "solver":   {"max_iters", "grad_tol", "step_rule": "bb" | "fixed", "fixed_step",
//                "truncation", "seed", "workers", "warm_start": "profile" | "radial",
//                "noise", "multilevel", "min_level", "log_every"},
//   "output":   {"dir", "encoding": "csv" | "f64le", "vtk"}
// }

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ldg/io.hpp"

namespace ldg {

enum class WarmStart { Profile, Radial };

struct RunConfig {
  Domain domain = Domain::disk(1.0);
  int n = 128;
  double a = 1.0, b = 1.0, c = 1.0;
  std::optional<double> epsilon;
  std::vector<double> epsilons;
  BoundaryConditions boundary;
  SolveOptions solver;
  WarmStart warm_start = WarmStart::Profile;
  double noise = 0.01;
  bool multilevel = true;
  int min_level = 64;
  std::string out_dir = "out";
  Encoding encoding = Encoding::Csv;
  bool vtk = false;

  MaterialParams params() const { return derive_params(a, b, c); }
};

namespace detail {

class ConfigReader {
 public:
  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorCode::ConfigInvalid, path + ": " + what);
  }

  static void allow(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) fail(path, "expected an object");
    std::set<std::string> known(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!known.count(it.key())) fail(join(path, it.key()), "unknown key");
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  static double number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "expected a finite number");
    return x;
  }

  static double positive(const json& v, const std::string& path) {
    const double x = number(v, path);
    if (!(x > 0.0)) fail(path, "must be positive");
    return x;
  }

  static long long integer(const json& v, const std::string& path, long long lo) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    const long long x = v.get<long long>();
    if (x < lo) fail(path, "must be at least " + std::to_string(lo));
    return x;
  }

  static bool boolean(const json& v, const std::string& path) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    return v.get<bool>();
  }

  static std::string string(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  static std::vector<double> numbers(const json& v, const std::string& path, std::size_t size) {
    if (!v.is_array() || (size && v.size() != size))
      fail(path, size ? "expected an array of " + std::to_string(size) + " numbers" : "expected an array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

  static BoundarySpec datum(const json& v, const std::string& path) {
    if (!v.is_object() || !v.contains("type")) fail(path, "expected an object with a 'type'");
    const std::string type = string(v["type"], join(path, "type"));
    BoundarySpec spec;
    if (type == "geodesic") {
      allow(v, path, {"type", "winding"});
      spec = GeodesicWinding{v.contains("winding") ? int(integer(v["winding"], join(path, "winding"), -1000000)) : 1};
    } else if (type == "constant") {
      allow(v, path, {"type", "director"});
      if (!v.contains("director")) fail(join(path, "director"), "required");
      const auto d = numbers(v["director"], join(path, "director"), 3);
      spec = ConstantDirector{{d[0], d[1], d[2]}};
    } else if (type == "samples") {
      allow(v, path, {"type", "values"});
      if (!v.contains("values") || !v["values"].is_array()) fail(join(path, "values"), "expected an array");
      LoopSamples s;
      for (std::size_t i = 0; i < v["values"].size(); ++i) {
        const auto c = numbers(v["values"][i], join(path, "values") + "[" + std::to_string(i) + "]", 5);
        QTensor q;
        std::copy(c.begin(), c.end(), q.c.begin());
        s.values.push_back(q);
      }
      spec = std::move(s);
    } else {
      fail(join(path, "type"), "expected geodesic, constant or samples");
    }
    try {
      validate(spec);
    } catch (const Error& e) {
      fail(path, e.what());
    }
    return spec;
  }
};

}  // namespace detail

inline RunConfig parse_config(const json& root) {
  using R = detail::ConfigReader;
  RunConfig cfg;
  R::allow(root, "", {"domain", "grid", "material", "epsilon", "epsilons", "boundary", "solver", "output"});
  for (const char* required : {"domain", "grid", "material"})
    if (!root.contains(required)) R::fail(required, "required section is missing");

  const json& d = root["domain"];
  if (!d.is_object() || !d.contains("kind")) R::fail("domain.kind", "required");
  const std::string kind = R::string(d["kind"], "domain.kind");
  std::vector<double> center{0.0, 0.0};
  if (d.contains("center")) center = R::numbers(d["center"], "domain.center", 2);
  if (kind == "disk") {
    R::allow(d, "domain", {"kind", "radius", "center"});
    const double radius = d.contains("radius") ? R::positive(d["radius"], "domain.radius") : 1.0;
    cfg.domain = Domain::disk(radius, center[0], center[1]);
  } else if (kind == "annulus") {
    R::allow(d, "domain", {"kind", "inner", "outer", "center"});
    if (!d.contains("inner") || !d.contains("outer")) R::fail("domain", "annulus needs 'inner' and 'outer'");
    cfg.domain = Domain::annulus(R::positive(d["inner"], "domain.inner"), R::positive(d["outer"], "domain.outer"),
                                 center[0], center[1]);
    if (!(cfg.domain.inner < cfg.domain.outer)) R::fail("domain.inner", "must be smaller than domain.outer");
  } else {
    R::fail("domain.kind", "expected disk or annulus");
  }

  R::allow(root["grid"], "grid", {"n"});
  if (!root["grid"].contains("n")) R::fail("grid.n", "required");
  cfg.n = int(R::integer(root["grid"]["n"], "grid.n", 16));

  const json& m = root["material"];
  R::allow(m, "material", {"a", "b", "c"});
  for (const char* key : {"a", "b", "c"})
    if (!m.contains(key)) R::fail(std::string("material.") + key, "required");
  cfg.a = R::positive(m["a"], "material.a");
  cfg.b = R::positive(m["b"], "material.b");
  cfg.c = R::positive(m["c"], "material.c");

  if (root.contains("epsilon")) cfg.epsilon = R::positive(root["epsilon"], "epsilon");
  if (root.contains("epsilons")) {
    cfg.epsilons = R::numbers(root["epsilons"], "epsilons", 0);
    for (std::size_t i = 0; i < cfg.epsilons.size(); ++i)
      if (!(cfg.epsilons[i] > 0.0)) R::fail("epsilons[" + std::to_string(i) + "]", "must be positive");
  }

  if (root.contains("boundary")) {
    const json& b = root["boundary"];
    R::allow(b, "boundary", {"outer", "inner"});
    if (b.contains("outer")) cfg.boundary.outer = R::datum(b["outer"], "boundary.outer");
    if (b.contains("inner")) {
      if (cfg.domain.kind != DomainKind::Annulus) R::fail("boundary.inner", "only meaningful on an annulus");
      cfg.boundary.inner = R::datum(b["inner"], "boundary.inner");
    }
  }

  if (root.contains("solver")) {
    const json& s = root["solver"];
    R::allow(s, "solver",
             {"max_iters", "grad_tol", "step_rule", "fixed_step", "truncation", "seed", "workers", "warm_start", "noise",
              "multilevel", "min_level", "log_every"});
    if (s.contains("max_iters")) cfg.solver.max_iters = int(R::integer(s["max_iters"], "solver.max_iters", 1));
    if (s.contains("grad_tol")) cfg.solver.grad_tol = R::positive(s["grad_tol"], "solver.grad_tol");
    if (s.contains("step_rule")) {
      const std::string rule = R::string(s["step_rule"], "solver.step_rule");
      if (rule == "bb")
        cfg.solver.step_rule = StepRule::BarzilaiBorwein;
      else if (rule == "fixed")
        cfg.solver.step_rule = StepRule::Fixed;
      else
        R::fail("solver.step_rule", "expected bb or fixed");
    }
    if (s.contains("fixed_step")) cfg.solver.fixed_step = R::positive(s["fixed_step"], "solver.fixed_step");
    if (s.contains("truncation")) cfg.solver.truncation = R::boolean(s["truncation"], "solver.truncation");
    if (s.contains("seed")) cfg.solver.seed = std::uint64_t(R::integer(s["seed"], "solver.seed", 0));
    if (s.contains("workers")) cfg.solver.workers = int(R::integer(s["workers"], "solver.workers", 1));
    if (s.contains("log_every")) cfg.solver.log_every = int(R::integer(s["log_every"], "solver.log_every", 1));
    if (s.contains("warm_start")) {
      const std::string w = R::string(s["warm_start"], "solver.warm_start");
      if (w == "profile")
        cfg.warm_start = WarmStart::Profile;
      else if (w == "radial")
        cfg.warm_start = WarmStart::Radial;
      else
        R::fail("solver.warm_start", "expected profile or radial");
    }
    if (s.contains("noise")) {
      cfg.noise = R::number(s["noise"], "solver.noise");
      if (cfg.noise < 0.0) R::fail("solver.noise", "must be non-negative");
    }
    if (s.contains("multilevel")) cfg.multilevel = R::boolean(s["multilevel"], "solver.multilevel");
    if (s.contains("min_level")) cfg.min_level = int(R::integer(s["min_level"], "solver.min_level", 16));
  }

  if (root.contains("output")) {
    const json& o = root["output"];
    R::allow(o, "output", {"dir", "encoding", "vtk"});
    if (o.contains("dir")) cfg.out_dir = R::string(o["dir"], "output.dir");
    if (o.contains("encoding")) {
      const std::string e = R::string(o["encoding"], "output.encoding");
      if (e != "csv" && e != "f64le") R::fail("output.encoding", "expected csv or f64le");
      cfg.encoding = parse_encoding(e);
    }
    if (o.contains("vtk")) cfg.vtk = R::boolean(o["vtk"], "output.vtk");
  }

  try {
    cfg.params();
    Grid(cfg.domain, cfg.n);
  } catch (const Error& e) {
    R::fail(e.code() == ErrorCode::DomainTooThin ? "grid.n" : "material", e.what());
  }
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(root);
}

inline RunConfig load_config(const std::filesystem::path& path) { return parse_config_text(read_file(path)); }

}  // namespace ldg
