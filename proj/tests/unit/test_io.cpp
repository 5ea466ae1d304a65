#include <gtest/gtest.h>

#include <cstring>
#include <functional>
#include <filesystem>
#include <limits>
#include <random>

#include "ldg/config.hpp"
#include "ldg/io.hpp"

using namespace ldg;

namespace {

const MaterialParams params = derive_params(1.0, 2.0, 1.5);

Field random_field(const Domain& d, int n, std::uint64_t seed) {
  Field f(build_grid(d, n), 0.07, params);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (std::size_t k = 0; k < f.grid->size(); ++k)
    if (f.grid->kind(k) != CellKind::Exterior)
      for (double& x : f[k].c) x = u(rng) * std::pow(10.0, int(rng() % 21) - 10);
  return f;
}

bool bit_equal(const Field& a, const Field& b) {
  if (a.grid->size() != b.grid->size()) return false;
  for (std::size_t k = 0; k < a.grid->size(); ++k) {
    if (a.grid->kind(k) == CellKind::Exterior) continue;
    if (std::memcmp(a[k].c.data(), b[k].c.data(), sizeof(double) * 5) != 0) return false;
  }
  return true;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("ldg2d_test_io_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir / name;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no ldg::Error thrown";
  return ErrorCode::InvalidSpec;
}

}  // namespace

TEST(Dump, RoundTripIsBitExact) {
  const Domain domains[] = {Domain::disk(1.0), Domain::disk(0.7, 0.2, -0.1), Domain::annulus(0.3, 1.0)};
  std::uint64_t seed = 1;
  for (const Domain& d : domains)
    for (int n : {16, 33, 64})
      for (Encoding enc : {Encoding::Csv, Encoding::F64le}) {
        Field f = random_field(d, n, seed++);
        const std::size_t k = f.grid->interior().front();
        f[k].c = {-0.0, 4.9e-324, std::numeric_limits<double>::max(), -1e-310, 0.1};
        const LoadedField back = decode_dump(encode_dump(f, enc, seed));
        EXPECT_TRUE(bit_equal(f, back.field)) << "n=" << n << " enc=" << to_string(enc);
        EXPECT_EQ(back.header.seed, seed);
        EXPECT_EQ(back.header.encoding, enc);
        EXPECT_EQ(back.field.epsilon, f.epsilon);
        EXPECT_EQ(back.field.params.b, params.b);
        EXPECT_EQ(back.field.grid->domain().kind, d.kind);
        EXPECT_EQ(back.field.grid->n(), n);
      }
}

TEST(Dump, FileRoundTripAndAtomicWrite) {
  const Field f = random_field(Domain::annulus(0.4, 1.0), 40, 9);
  const auto path = scratch("nested/dir/field.ldg");
  write_dump(path, f, Encoding::F64le, 5);
  for (const auto& entry : std::filesystem::directory_iterator(path.parent_path()))
    EXPECT_EQ(entry.path().filename(), "field.ldg");
  EXPECT_TRUE(bit_equal(f, read_dump(path).field));
  write_dump(path, f, Encoding::Csv, 5);  // overwrite in place
  EXPECT_TRUE(bit_equal(f, read_dump(path).field));
}

TEST(Dump, CorruptionIsDetected) {
  const Field f = random_field(Domain::disk(1.0), 24, 3);
  for (Encoding enc : {Encoding::Csv, Encoding::F64le}) {
    const std::string good = encode_dump(f, enc);
    const std::size_t eol = good.find('\n');
    EXPECT_EQ(code_of([&] { decode_dump(good.substr(0, good.size() - 3)); }), ErrorCode::DumpCorrupt);
    EXPECT_EQ(code_of([&] { decode_dump(good + "1"); }), ErrorCode::DumpCorrupt);
    EXPECT_EQ(code_of([&] { decode_dump(good.substr(0, eol)); }), ErrorCode::DumpCorrupt);
    EXPECT_EQ(code_of([&] { decode_dump("not json\n" + good.substr(eol + 1)); }), ErrorCode::DumpCorrupt);
    EXPECT_EQ(code_of([&] { decode_dump(""); }), ErrorCode::DumpCorrupt);
  }
  std::string csv = encode_dump(f, Encoding::Csv);
  const std::size_t row = csv.find('\n') + 1;
  csv.replace(row, 1, "x");
  EXPECT_EQ(code_of([&] { decode_dump(csv); }), ErrorCode::DumpCorrupt);

  std::string nan = encode_dump(f, Encoding::Csv);
  const std::size_t line = nan.find('\n') + 1;
  nan.insert(line, "nan");
  nan.erase(line + 3, nan.find(',', line + 3) - line - 3);
  EXPECT_EQ(code_of([&] { decode_dump(nan); }), ErrorCode::DumpCorrupt);
}

TEST(Dump, HeaderMismatches) {
  const Field f = random_field(Domain::disk(1.0), 24, 4);
  const std::string good = encode_dump(f, Encoding::Csv);
  const std::size_t eol = good.find('\n');
  const json header = json::parse(good.substr(0, eol));
  const std::string body = good.substr(eol);
  auto with = [&](const std::string& key, const json& value) {
    json h = header;
    h[key] = value;
    return h.dump() + body;
  };
  EXPECT_EQ(code_of([&] { decode_dump(with("version", 2)); }), ErrorCode::VersionMismatch);
  EXPECT_EQ(code_of([&] { decode_dump(with("format", "other")); }), ErrorCode::DumpCorrupt);
  EXPECT_EQ(code_of([&] { decode_dump(with("nx", 23)); }), ErrorCode::DumpCorrupt);
  EXPECT_EQ(code_of([&] { decode_dump(with("encoding", "f32")); }), ErrorCode::DumpCorrupt);
  EXPECT_EQ(code_of([&] { decode_dump(with("a", -1.0)); }), ErrorCode::DumpCorrupt);
  EXPECT_EQ(code_of([&] { decode_dump(with("epsilon", "0.1")); }), ErrorCode::DumpCorrupt);
  json h = header;
  h.erase("h");
  EXPECT_EQ(code_of([&] { decode_dump(h.dump() + body); }), ErrorCode::DumpCorrupt);
}

TEST(Io, MissingFileIsIoFailure) {
  EXPECT_EQ(code_of([] { read_dump("/nonexistent/ldg2d/field.ldg"); }), ErrorCode::IoFailure);
  EXPECT_EQ(code_of([] { write_atomic("/proc/ldg2d/forbidden.txt", "x"); }), ErrorCode::IoFailure);
}

TEST(Io, Tables) {
  std::vector<IterationRecord> log(2);
  log[1].iter = 7;
  log[1].energy_total = 1.5;
  const std::string csv = iteration_csv(log);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "iter,energy_total,energy_dirichlet,energy_potential,grad_sup,step");
  EXPECT_NE(csv.find("\n7,1.5,"), std::string::npos);
  RadialProfile p;
  p.samples.push_back({0.25, 2.0, 0.5, 5.4, 1e-3});
  EXPECT_EQ(profile_csv(p), "rho,S,R,length,variance\n0.25,2,0.5,5.4000000000000004,0.001\n");
}

TEST(Io, VtkExport) {
  const Field f = random_field(Domain::annulus(0.3, 1.0), 20, 2);
  const std::string vtk = vtk_export(f);
  EXPECT_EQ(vtk.rfind("# vtk DataFile Version", 0), 0u);
  const std::string dims = "DIMENSIONS " + std::to_string(f.grid->nx()) + " " + std::to_string(f.grid->ny()) + " 1";
  EXPECT_NE(vtk.find(dims), std::string::npos);
  EXPECT_NE(vtk.find("POINT_DATA " + std::to_string(f.grid->size())), std::string::npos);
  for (const char* name : {"SCALARS beta", "SCALARS absQ", "SCALARS dist_to_N"})
    EXPECT_NE(vtk.find(name), std::string::npos) << name;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

json base_config() {
  return json::parse(R"({
    "domain": {"kind": "disk", "radius": 1.0},
    "grid": {"n": 64},
    "material": {"a": 1.0, "b": 1.0, "c": 1.0},
    "epsilon": 0.1
  })");
}

std::string config_error(const json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigInvalid) << e.what();
    return e.what();
  }
  ADD_FAILURE() << "accepted: " << j.dump();
  return {};
}

}  // namespace

TEST(Config, Defaults) {
  const RunConfig cfg = parse_config(base_config());
  EXPECT_EQ(cfg.n, 64);
  EXPECT_EQ(*cfg.epsilon, 0.1);
  EXPECT_EQ(cfg.domain.kind, DomainKind::Disk);
  EXPECT_TRUE(cfg.multilevel);
  EXPECT_EQ(cfg.warm_start, WarmStart::Profile);
  EXPECT_EQ(cfg.encoding, Encoding::Csv);
  EXPECT_TRUE(std::holds_alternative<GeodesicWinding>(cfg.boundary.outer));
}

TEST(Config, FullSchema) {
  const RunConfig cfg = parse_config_text(R"({
    "domain": {"kind": "annulus", "inner": 0.3, "outer": 1.2, "center": [0.1, -0.2]},
    "grid": {"n": 96},
    "material": {"a": 2.0, "b": 1.0, "c": 3.0},
    "epsilons": [0.2, 0.1, 0.05],
    "boundary": {"outer": {"type": "constant", "director": [0, 0, 1]},
                 "inner": {"type": "geodesic", "winding": 2}},
    "solver": {"max_iters": 10, "grad_tol": 1e-4, "step_rule": "fixed", "fixed_step": 0.1, "truncation": false,
               "seed": 11, "workers": 3, "warm_start": "radial", "noise": 0.0, "multilevel": false,
               "min_level": 32, "log_every": 5},
    "output": {"dir": "o", "encoding": "f64le", "vtk": true}
  })");
  EXPECT_EQ(cfg.domain.inner, 0.3);
  EXPECT_EQ(cfg.domain.cy, -0.2);
  EXPECT_EQ(cfg.epsilons.size(), 3u);
  EXPECT_EQ(cfg.solver.step_rule, StepRule::Fixed);
  EXPECT_EQ(cfg.solver.seed, 11u);
  EXPECT_EQ(cfg.solver.workers, 3);
  EXPECT_FALSE(cfg.solver.truncation);
  EXPECT_EQ(cfg.warm_start, WarmStart::Radial);
  EXPECT_FALSE(cfg.multilevel);
  EXPECT_EQ(cfg.encoding, Encoding::F64le);
  EXPECT_TRUE(cfg.vtk);
  EXPECT_EQ(std::get<GeodesicWinding>(cfg.boundary.inner).winding, 2);
}

TEST(Config, UnknownKeysNameTheirPath) {
  json j = base_config();
  j["solver"] = {{"grad_tl", 1e-6}};
  EXPECT_NE(config_error(j).find("solver.grad_tl"), std::string::npos);
  j = base_config();
  j["extra"] = 1;
  EXPECT_NE(config_error(j).find("extra"), std::string::npos);
  j = base_config();
  j["boundary"] = {{"outer", {{"type", "geodesic"}, {"windng", 1}}}};
  EXPECT_NE(config_error(j).find("boundary.outer.windng"), std::string::npos);
}

TEST(Config, TypeAndRangeErrors) {
  const std::vector<std::pair<std::string, json>> cases = {
      {"/grid/n", "64"},           {"/grid/n", 8},
      {"/grid/n", 64.5},           {"/material/a", -1.0},
      {"/material/b", 0},          {"/epsilon", "0.1"},
      {"/epsilon", 0.0},           {"/domain/kind", "square"},
      {"/domain/radius", -1.0},    {"/domain/center", json::array({0})},
      {"/solver", json::array()},  {"/output/encoding", "f32"},
      {"/epsilons", json::array({0.1, -0.1})},
  };
  for (const auto& [ptr, value] : cases) {
    json j = base_config();
    j[json::json_pointer(ptr)] = value;
    EXPECT_FALSE(config_error(j).empty()) << ptr;
  }
  json j = base_config();
  j.erase("material");
  EXPECT_NE(config_error(j).find("material"), std::string::npos);
  j = base_config();
  j["boundary"] = {{"outer", {{"type", "constant"}, {"director", {0, 0, 2}}}}};
  EXPECT_NE(config_error(j).find("boundary.outer"), std::string::npos);
  j = base_config();
  j["boundary"] = {{"inner", {{"type", "geodesic"}}}};
  EXPECT_NE(config_error(j).find("boundary.inner"), std::string::npos);
  j = base_config();
  j["domain"] = {{"kind", "annulus"}, {"inner", 0.99}, {"outer", 1.0}};
  j["grid"]["n"] = 16;
  EXPECT_NE(config_error(j).find("grid.n"), std::string::npos);
  EXPECT_EQ(code_of([] { parse_config_text("{"); }), ErrorCode::ConfigInvalid);
}

TEST(Config, ShippedSamplesParse) {
  const std::filesystem::path dir = LDG_SOURCE_DIR "/configs";
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    ++count;
  }
  EXPECT_GE(count, 3);
}
