#pragma once

// Masked Cartesian discretization of a disk or annulus.
//
// The bounding square [cx - R, cx + R]^2 is split into n x n cells of width
// h = 2R / n and padded by one ghost cell on every side, so the stored array
// is (n + 2) x (n + 2) and every Interior cell owns a full 5-point stencil.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "ldg/manifold.hpp"
#include "ldg/potential.hpp"

namespace ldg {

enum class DomainKind { Disk, Annulus };

struct Domain {
  DomainKind kind = DomainKind::Disk;
  double cx = 0.0, cy = 0.0;
  double outer = 1.0;
  double inner = 0.0;  // annulus only

  static Domain disk(double radius, double cx = 0.0, double cy = 0.0) {
    return {DomainKind::Disk, cx, cy, radius, 0.0};
  }
  static Domain annulus(double inner, double outer, double cx = 0.0, double cy = 0.0) {
    return {DomainKind::Annulus, cx, cy, outer, inner};
  }

  void validate() const {
    if (!(outer > 0.0) || !std::isfinite(outer)) throw Error(ErrorCode::InvalidSpec, "domain radius must be positive");
    if (kind == DomainKind::Annulus && !(inner > 0.0 && inner < outer))
      throw Error(ErrorCode::InvalidSpec, "annulus needs 0 < inner < outer");
  }

  /// strictly inside the open domain
  bool contains(double x, double y) const {
    const double rho = std::hypot(x - cx, y - cy);
    if (rho >= outer) return false;
    return kind == DomainKind::Disk || rho > inner;
  }
};

enum class CellKind : std::uint8_t { Exterior, Interior, Dirichlet };

class Grid {
 public:
  Grid(const Domain& domain, int n) : domain_(domain), n_(n) {
    domain.validate();
    if (n < 16) throw Error(ErrorCode::InvalidSpec, "grid needs at least 16 cells per axis");
    nx_ = ny_ = n + 2;
    h_ = 2.0 * domain.outer / n;
    x0_ = domain.cx - domain.outer - 0.5 * h_;
    y0_ = domain.cy - domain.outer - 0.5 * h_;
    kinds_.assign(std::size_t(nx_) * ny_, CellKind::Exterior);
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i)
        if (domain.contains(x(i), y(j))) kinds_[index(i, j)] = CellKind::Interior;
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i) {
        if (kind(i, j) != CellKind::Exterior) continue;
        if (is_interior(i - 1, j) || is_interior(i + 1, j) || is_interior(i, j - 1) || is_interior(i, j + 1))
          kinds_[index(i, j)] = CellKind::Dirichlet;
      }
    for (std::size_t k = 0; k < kinds_.size(); ++k) {
      if (kinds_[k] == CellKind::Interior) interior_.push_back(k);
      if (kinds_[k] == CellKind::Dirichlet) dirichlet_.push_back(k);
    }
    if (interior_.empty()) throw Error(ErrorCode::DomainTooThin, "no cell center lies inside the domain");
    for (std::size_t k : interior_) {
      const int i = int(k % nx_), j = int(k / nx_);
      if (i == 0 || j == 0 || i == nx_ - 1 || j == ny_ - 1)
        throw Error(ErrorCode::DomainTooThin, "interior cell without a full stencil");
    }
    if (domain.kind == DomainKind::Annulus && domain.outer - domain.inner < 2.0 * h_)
      throw Error(ErrorCode::DomainTooThin, "annulus narrower than two cells");
  }

  const Domain& domain() const { return domain_; }
  int n() const { return n_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double h() const { return h_; }
  std::size_t size() const { return kinds_.size(); }

  double x(int i) const { return x0_ + i * h_; }
  double y(int j) const { return y0_ + j * h_; }
  double x_origin() const { return x0_; }
  double y_origin() const { return y0_; }

  std::size_t index(int i, int j) const { return std::size_t(j) * nx_ + i; }
  int col(std::size_t k) const { return int(k % nx_); }
  int row(std::size_t k) const { return int(k / nx_); }

  CellKind kind(int i, int j) const { return kinds_[index(i, j)]; }
  CellKind kind(std::size_t k) const { return kinds_[k]; }
  bool in_range(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }

  const std::vector<std::size_t>& interior() const { return interior_; }
  const std::vector<std::size_t>& dirichlet() const { return dirichlet_; }

 private:
  bool is_interior(int i, int j) const { return in_range(i, j) && kind(i, j) == CellKind::Interior; }

  Domain domain_;
  int n_ = 0, nx_ = 0, ny_ = 0;
  double h_ = 0.0, x0_ = 0.0, y0_ = 0.0;
  std::vector<CellKind> kinds_;
  std::vector<std::size_t> interior_, dirichlet_;
};

inline std::shared_ptr<const Grid> build_grid(const Domain& domain, int n) {
  return std::make_shared<const Grid>(domain, n);
}

/// Polar angle about the domain center, in [0, 2 pi).
inline double polar_angle(const Domain& d, double x, double y) {
  double th = std::atan2(y - d.cy, x - d.cx);
  if (th < 0.0) th += 2.0 * std::numbers::pi;
  if (th >= 2.0 * std::numbers::pi) th = 0.0;
  return th;
}

// ---------------------------------------------------------------------------
// Boundary data

struct GeodesicWinding {
  int winding = 1;
};
struct ConstantDirector {
  Vec3 director{0.0, 0.0, 1.0};
};
/// Values of a closed loop in N at equally spaced angles 2 pi k / size.
struct LoopSamples {
  std::vector<QTensor> values;
};

using BoundarySpec = std::variant<GeodesicWinding, ConstantDirector, LoopSamples>;

inline void validate(const BoundarySpec& spec) {
  if (const auto* c = std::get_if<ConstantDirector>(&spec)) {
    if (std::abs(norm(c->director) - 1.0) > 1e-10)
      throw Error(ErrorCode::InvalidSpec, "constant boundary director must be a unit vector");
  } else if (const auto* s = std::get_if<LoopSamples>(&spec)) {
    if (s->values.size() < 3) throw Error(ErrorCode::InvalidSpec, "boundary loop needs at least 3 samples");
    for (std::size_t k = 0; k < s->values.size(); ++k) {
      if (!s->values[k].finite() || dist_to_N(s->values[k]) > 1e-8) {
        std::ostringstream msg;
        msg << "boundary loop sample " << k << " is not on the vacuum manifold";
        throw Error(ErrorCode::InvalidSpec, msg.str());
      }
    }
  }
}

/// g(theta) for a boundary spec; values lie on N.
inline QTensor boundary_value(const BoundarySpec& spec, double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (const auto* g = std::get_if<GeodesicWinding>(&spec)) {
    double arg = std::fmod(g->winding * theta, two_pi);
    if (arg < 0.0) arg += two_pi;
    return geodesic_loop(arg);
  }
  if (const auto* c = std::get_if<ConstantDirector>(&spec)) return phi(c->director);
  const auto& v = std::get<LoopSamples>(spec).values;
  const double u = theta / two_pi * double(v.size());
  const std::size_t k = std::size_t(std::floor(u)) % v.size();
  const double w = u - std::floor(u);
  if (w == 0.0) return v[k];
  return project_to_N(v[k] * (1.0 - w) + v[(k + 1) % v.size()] * w);
}

struct BoundaryConditions {
  BoundarySpec outer = GeodesicWinding{1};
  BoundarySpec inner = ConstantDirector{};  // annulus only
};

// ---------------------------------------------------------------------------

struct Field {
  std::shared_ptr<const Grid> grid;
  std::vector<QTensor> values;
  double epsilon = 0.1;
  MaterialParams params;

  Field() = default;
  Field(std::shared_ptr<const Grid> g, double eps, const MaterialParams& p)
      : grid(std::move(g)), values(grid->size()), epsilon(eps), params(p) {}

  QTensor& operator[](std::size_t k) { return values[k]; }
  const QTensor& operator[](std::size_t k) const { return values[k]; }
  QTensor& at(int i, int j) { return values[grid->index(i, j)]; }
  const QTensor& at(int i, int j) const { return values[grid->index(i, j)]; }

  bool finite() const {
    for (std::size_t k = 0; k < values.size(); ++k)
      if (grid->kind(k) != CellKind::Exterior && !values[k].finite()) return false;
    return true;
  }
};

/// Which boundary component a Dirichlet cell belongs to.
inline bool on_inner_boundary(const Grid& g, std::size_t k) {
  const Domain& d = g.domain();
  if (d.kind != DomainKind::Annulus) return false;
  const double rho = std::hypot(g.x(g.col(k)) - d.cx, g.y(g.row(k)) - d.cy);
  return rho < 0.5 * (d.inner + d.outer);
}

/// Freezes every Dirichlet cell at g(theta), theta the polar angle of the
/// nearest boundary point (the same angle as the cell center).
inline void apply_boundary(Field& f, const BoundaryConditions& bc) {
  validate(bc.outer);
  if (f.grid->domain().kind == DomainKind::Annulus) validate(bc.inner);
  const Grid& g = *f.grid;
  for (std::size_t k : g.dirichlet()) {
    const double th = polar_angle(g.domain(), g.x(g.col(k)), g.y(g.row(k)));
    f[k] = boundary_value(on_inner_boundary(g, k) ? bc.inner : bc.outer, th);
  }
}

inline Field make_field(std::shared_ptr<const Grid> grid, double epsilon, const MaterialParams& p,
                        const BoundaryConditions& bc) {
  Field f(std::move(grid), epsilon, p);
  apply_boundary(f, bc);
  return f;
}

/// Bilinear interpolation of the coefficients between cell centers. Every
/// surrounding cell with nonzero weight must carry data (Interior or Dirichlet).
inline QTensor interpolate(const Field& f, double x, double y) {
  const Grid& g = *f.grid;
  auto snap = [](double t) { return std::abs(t - std::round(t)) < 1e-9 ? std::round(t) : t; };
  const double u = snap((x - g.x_origin()) / g.h());
  const double v = snap((y - g.y_origin()) / g.h());
  if (!std::isfinite(u) || !std::isfinite(v)) throw Error(ErrorCode::OutOfDomain, "interpolation point is not finite");
  const int i = int(std::floor(u)), j = int(std::floor(v));
  const double wx = u - i, wy = v - j;
  QTensor out;
  for (auto [di, dj] : {std::pair{0, 0}, {1, 0}, {0, 1}, {1, 1}}) {
    const double w = (di ? wx : 1 - wx) * (dj ? wy : 1 - wy);
    if (w == 0.0) continue;  // corners without weight may lie outside
    if (!g.in_range(i + di, j + dj)) throw Error(ErrorCode::OutOfDomain, "interpolation point outside the grid");
    if (g.kind(i + di, j + dj) == CellKind::Exterior)
      throw Error(ErrorCode::OutOfDomain, "interpolation stencil touches an exterior cell");
    out += f.at(i + di, j + dj) * w;
  }
  return out;
}

}  // namespace ldg
