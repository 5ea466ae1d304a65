#pragma once

// Field dumps, CSV tables, JSON reports and legacy VTK export.
//
// Dump layout: one line of JSON header, then the (nx * ny) cells in
// row-major order with five S0 coefficients each, either as text lines
// "c0,c1,c2,c3,c4" or as raw little-endian doubles. Exterior cells hold
// zeros.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "ldg/analysis.hpp"
#include "ldg/construct.hpp"
#include "ldg/solver.hpp"

namespace ldg {

using json = nlohmann::ordered_json;

inline constexpr int dump_version = 1;

enum class Encoding { Csv, F64le };

inline std::string to_string(Encoding e) { return e == Encoding::Csv ? "csv" : "f64le"; }

inline Encoding parse_encoding(const std::string& s) {
  if (s == "csv") return Encoding::Csv;
  if (s == "f64le") return Encoding::F64le;
  throw Error(ErrorCode::InvalidSpec, "unknown dump encoding '" + s + "' (expected csv or f64le)");
}

/// Writes to a sibling temporary file and renames it over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const std::filesystem::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot move " + tmp.string() + " to " + path.string());
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
  return ss.str();
}

// ---------------------------------------------------------------------------
// Field dump

inline json domain_json(const Domain& d) {
  json j;
  j["kind"] = d.kind == DomainKind::Disk ? "disk" : "annulus";
  j["center"] = {d.cx, d.cy};
  j["outer"] = d.outer;
  if (d.kind == DomainKind::Annulus) j["inner"] = d.inner;
  return j;
}

inline std::string encode_dump(const Field& f, Encoding enc, std::uint64_t seed = 0) {
  const Grid& g = *f.grid;
  json header;
  header["format"] = "ldg2d-field";
  header["version"] = dump_version;
  header["nx"] = g.nx();
  header["ny"] = g.ny();
  header["n"] = g.n();
  header["h"] = g.h();
  header["domain"] = domain_json(g.domain());
  header["epsilon"] = f.epsilon;
  header["a"] = f.params.a;
  header["b"] = f.params.b;
  header["c"] = f.params.c;
  header["encoding"] = to_string(enc);
  header["seed"] = seed;
  std::string out = header.dump() + "\n";
  if (enc == Encoding::Csv) {
    char buf[160];
    for (std::size_t k = 0; k < g.size(); ++k) {
      const QTensor q = g.kind(k) == CellKind::Exterior ? QTensor::zero() : f[k];
      const int len = std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", q.c[0], q.c[1], q.c[2],
                                    q.c[3], q.c[4]);
      out.append(buf, std::size_t(len));
    }
  } else {
    out.reserve(out.size() + g.size() * 40);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const QTensor q = g.kind(k) == CellKind::Exterior ? QTensor::zero() : f[k];
      for (double x : q.c) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        char raw[8];
        std::memcpy(raw, &bits, 8);
        out.append(raw, 8);
      }
    }
  }
  return out;
}

struct DumpHeader {
  int version = 0;
  int nx = 0, ny = 0, n = 0;
  double h = 0.0;
  Domain domain;
  double epsilon = 0.0, a = 0.0, b = 0.0, c = 0.0;
  Encoding encoding = Encoding::Csv;
  std::uint64_t seed = 0;
};

struct LoadedField {
  DumpHeader header;
  Field field;
};

inline LoadedField decode_dump(const std::string& bytes) {
  auto corrupt = [](const std::string& why) { return Error(ErrorCode::DumpCorrupt, "field dump: " + why); };
  const std::size_t eol = bytes.find('\n');
  if (eol == std::string::npos) throw corrupt("missing header line");
  json j;
  try {
    j = json::parse(bytes.substr(0, eol));
  } catch (const json::exception& e) {
    throw corrupt(std::string("header is not JSON (") + e.what() + ")");
  }
  DumpHeader hd;
  try {
    if (j.at("format").get<std::string>() != "ldg2d-field") throw corrupt("unknown format tag");
    hd.version = j.at("version").get<int>();
    if (hd.version != dump_version)
      throw Error(ErrorCode::VersionMismatch, "field dump version " + std::to_string(hd.version) + ", expected " +
                                                  std::to_string(dump_version));
    hd.nx = j.at("nx").get<int>();
    hd.ny = j.at("ny").get<int>();
    hd.n = j.at("n").get<int>();
    hd.h = j.at("h").get<double>();
    const json& d = j.at("domain");
    const std::string kind = d.at("kind").get<std::string>();
    const double cx = d.at("center").at(0).get<double>(), cy = d.at("center").at(1).get<double>();
    if (kind == "disk")
      hd.domain = Domain::disk(d.at("outer").get<double>(), cx, cy);
    else if (kind == "annulus")
      hd.domain = Domain::annulus(d.at("inner").get<double>(), d.at("outer").get<double>(), cx, cy);
    else
      throw corrupt("unknown domain kind '" + kind + "'");
    hd.epsilon = j.at("epsilon").get<double>();
    hd.a = j.at("a").get<double>();
    hd.b = j.at("b").get<double>();
    hd.c = j.at("c").get<double>();
    hd.encoding = parse_encoding(j.at("encoding").get<std::string>());
    hd.seed = j.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw corrupt(std::string("header field missing or mistyped (") + e.what() + ")");
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::DumpCorrupt) throw;
    throw corrupt(e.what());
  }

  std::shared_ptr<const Grid> grid;
  MaterialParams params;
  try {
    grid = build_grid(hd.domain, hd.n);
    params = derive_params(hd.a, hd.b, hd.c);
  } catch (const Error& e) {
    throw corrupt(e.what());
  }
  if (grid->nx() != hd.nx || grid->ny() != hd.ny || std::abs(grid->h() - hd.h) > 1e-12 * hd.h)
    throw corrupt("grid dimensions disagree with the domain");

  Field f(grid, hd.epsilon, params);
  const std::size_t cells = grid->size();
  if (hd.encoding == Encoding::Csv) {
    std::size_t pos = eol + 1;
    for (std::size_t k = 0; k < cells; ++k) {
      const std::size_t end = bytes.find('\n', pos);
      if (end == std::string::npos) throw corrupt("truncated at cell " + std::to_string(k));
      const char* p = bytes.data() + pos;
      const char* stop = bytes.data() + end;
      for (int c = 0; c < 5; ++c) {
        char* next = nullptr;
        const double v = std::strtod(p, &next);
        if (next == p || next > stop) throw corrupt("bad record at cell " + std::to_string(k));
        f[k].c[c] = v;
        p = next;
        if (c < 4) {
          if (p >= stop || *p != ',') throw corrupt("bad record at cell " + std::to_string(k));
          ++p;
        }
      }
      if (p != stop) throw corrupt("trailing data at cell " + std::to_string(k));
      pos = end + 1;
    }
    if (pos != bytes.size()) throw corrupt("trailing data after the last cell");
  } else {
    if (bytes.size() - (eol + 1) != cells * 40) throw corrupt("binary payload has the wrong length");
    const char* p = bytes.data() + eol + 1;
    for (std::size_t k = 0; k < cells; ++k)
      for (int c = 0; c < 5; ++c, p += 8) {
        std::uint64_t bits;
        std::memcpy(&bits, p, 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        f[k].c[c] = std::bit_cast<double>(bits);
      }
  }
  for (std::size_t k = 0; k < cells; ++k)
    for (double x : f[k].c)
      if (!std::isfinite(x)) throw corrupt("non-finite coefficient at cell " + std::to_string(k));
  return {hd, std::move(f)};
}

inline void write_dump(const std::filesystem::path& path, const Field& f, Encoding enc, std::uint64_t seed = 0) {
  write_atomic(path, encode_dump(f, enc, seed));
}

inline LoadedField read_dump(const std::filesystem::path& path) { return decode_dump(read_file(path)); }

// ---------------------------------------------------------------------------
// Tables

namespace detail {
inline std::string num(double x) {
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}
}  // namespace detail

inline std::string iteration_csv(const std::vector<IterationRecord>& log) {
  std::string out = "iter,energy_total,energy_dirichlet,energy_potential,grad_sup,step\n";
  for (const IterationRecord& r : log)
    out += std::to_string(r.iter) + "," + detail::num(r.energy_total) + "," + detail::num(r.energy_dirichlet) + "," +
           detail::num(r.energy_potential) + "," + detail::num(r.grad_sup) + "," + detail::num(r.step) + "\n";
  return out;
}

inline std::string profile_csv(const RadialProfile& p) {
  std::string out = "rho,S,R,length,variance\n";
  for (const ProfileSample& s : p.samples)
    out += detail::num(s.rho) + "," + detail::num(s.S) + "," + detail::num(s.R) + "," + detail::num(s.length) + "," +
           detail::num(s.speed_variance) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// JSON views

inline json to_json(const Point& p) { return json::array({p.x, p.y}); }

inline json to_json(const EnergyBreakdown& e) {
  return {{"rescaled", {{"dirichlet", e.dirichlet}, {"potential", e.potential}, {"total", e.total}}},
          {"physical", {{"dirichlet", e.dirichlet_phys}, {"potential", e.potential_phys}, {"total", e.total_phys}}}};
}

inline json to_json(const MaterialParams& p) {
  return {{"a", p.a},           {"b", p.b},           {"c", p.c},         {"t", p.t},
          {"s_star", p.s_star}, {"a_star", p.a_star}, {"b_star", p.b_star}, {"c_star", p.c_star},
          {"k_star", p.k_star}, {"mu1", p.mu1},       {"mu2", p.mu2},     {"sigma", p.sigma},
          {"energy_scale", p.energy_scale()}};
}

inline json to_json(const BiaxialityStats& s) {
  return {{"max_beta", s.max_beta},
          {"argmax", to_json(s.argmax)},
          {"min_absQ", s.min_norm},
          {"argmin", to_json(s.argmin)},
          {"maximal_biaxial", s.maximal_biaxial}};
}

inline json to_json(const DefectReport& r) {
  json comps = json::array();
  for (const DefectComponent& c : r.components)
    comps.push_back({{"centroid", to_json(c.centroid)},
                     {"ball_center", to_json(c.ball_center)},
                     {"radius", c.radius},
                     {"cells", c.cells}});
  return {{"delta", r.delta},   {"count", r.count()}, {"components", comps}, {"c_hat", r.c_hat},
          {"lambda0", r.lambda0}, {"mu0", r.mu0},     {"f0", r.f0},          {"m0", r.m0}};
}

inline std::string to_string(HomotopyClass h) { return h == HomotopyClass::Trivial ? "trivial" : "nontrivial"; }

inline json to_json(const RadialProfile& p) {
  json rows = json::array();
  for (const ProfileSample& s : p.samples)
    rows.push_back({{"rho", s.rho}, {"S", s.S}, {"R", s.R}, {"length", s.length}, {"variance", s.speed_variance}});
  return {{"center", to_json(p.center)}, {"kappa_star", p.kappa_star}, {"samples", rows}};
}

inline json to_json(const LoopDiagnostics& l) {
  return {{"length", l.length}, {"speed_variance", l.speed_variance}, {"homotopy", to_string(l.homotopy)}};
}

inline json to_json(const CoreComparison& c) {
  json cands = json::array();
  for (std::size_t i = 0; i < c.candidate_radii.size(); ++i)
    cands.push_back({{"core_radius", c.candidate_radii[i]}, {"energy", c.candidate_energies[i]}});
  return {{"epsilon", c.eps},
          {"t", c.t},
          {"biaxial", to_json(c.biaxial)},
          {"uniaxial", to_json(c.uniaxial)},
          {"best_core_radius", c.best_core_radius},
          {"candidates", cands},
          {"gap", c.gap},
          {"predicted_gap", c.predicted},
          {"relative_error", c.relative_error},
          {"asserted", c.asserted},
          {"gap_ok", c.gap_ok}};
}

// ---------------------------------------------------------------------------
// Legacy VTK structured points with beta, |Q| and dist_to_N; exterior cells are 0.

inline std::string vtk_export(const Field& f) {
  const Grid& g = *f.grid;
  std::ostringstream s;
  s << std::setprecision(9);
  s << "# vtk DataFile Version 3.0\nldg2d field eps=" << f.epsilon << "\nASCII\nDATASET STRUCTURED_POINTS\n";
  s << "DIMENSIONS " << g.nx() << " " << g.ny() << " 1\n";
  s << "ORIGIN " << g.x_origin() << " " << g.y_origin() << " 0\n";
  s << "SPACING " << g.h() << " " << g.h() << " 1\n";
  s << "POINT_DATA " << g.size() << "\n";
  auto scalar = [&](const char* name, auto&& value) {
    s << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (std::size_t k = 0; k < g.size(); ++k) s << (g.kind(k) == CellKind::Exterior ? 0.0 : value(f[k])) << "\n";
  };
  scalar("beta", [](const QTensor& q) { return biaxiality(q); });
  scalar("absQ", [](const QTensor& q) { return q.norm(); });
  scalar("dist_to_N", [](const QTensor& q) { return dist_to_N(q); });
  return s.str();
}

}  // namespace ldg
