#include "gpr/diffeo.hpp"

#include <algorithm>
#include <cmath>

namespace gpr {

Diffeo Diffeo::identity(const GridSpec& grid) { return Diffeo(VectorField(grid), VectorField(grid)); }

Diffeo Diffeo::translation(const GridSpec& grid, double dx, double dy) {
  VectorField fwd(Image(grid, dx), Image(grid, dy));
  VectorField inv(Image(grid, -dx), Image(grid, -dy));
  return Diffeo(std::move(fwd), std::move(inv));
}

Diffeo::Diffeo(VectorField forward, VectorField inverse, std::optional<Provenance> provenance)
    : forward_(std::move(forward)), inverse_(std::move(inverse)), provenance_(std::move(provenance)) {
  require_same_grid(forward_.grid(), inverse_.grid(), "diffeo tables");
  require(forward_.all_finite() && inverse_.all_finite(), ErrorKind::InvalidInput,
          "diffeo displacement tables must be finite");
}

Diffeo Diffeo::inverted() const { return Diffeo(inverse_, forward_); }

VectorField compose_displacements(const VectorField& outer, const VectorField& inner) {
  require_same_grid(outer.grid(), inner.grid(), "compose");
  const GridSpec& g = inner.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double sx = g.spacing_x();
  const double sy = g.spacing_y();
  VectorField out(g);
  const double* ox = outer.vx().data();
  const double* oy = outer.vy().data();
  const double* ix_ = inner.vx().data();
  const double* iy_ = inner.vy().data();
  double* rx = out.vx().data();
  double* ry = out.vy().data();

#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t p = static_cast<std::size_t>(iy) * nx + ix;
      const double u = ix + ix_[p] / sx;
      const double w = iy + iy_[p] / sy;
      rx[p] = ix_[p] + sample_index(ox, nx, ny, u, w, OutOfBounds::Clamp);
      ry[p] = iy_[p] + sample_index(oy, nx, ny, u, w, OutOfBounds::Clamp);
    }
  }
  return out;
}

VectorField exponential_displacement(const VectorField& v, int min_steps, int* squarings) {
  require(min_steps >= 1, ErrorKind::Config, "exponential: n_steps must be >= 1");
  require(v.all_finite(), ErrorKind::InvalidInput, "exponential: velocity field must be finite");
  const GridSpec& g = v.grid();
  double max_px = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    max_px = std::max(max_px, std::hypot(v.vx()[i] / g.spacing_x(), v.vy()[i] / g.spacing_y()));
  }
  int s = 0;
  while ((1LL << s) < min_steps) ++s;
  while (s <= 30 && max_px / std::ldexp(1.0, s) > 0.5) ++s;
  require(s <= 30, ErrorKind::Magnitude, "exponential: velocity too large for scaling and squaring");

  VectorField disp = std::ldexp(1.0, -s) * v;
  for (int k = 0; k < s; ++k) disp = compose_displacements(disp, disp);
  if (squarings) *squarings = s;
  return disp;
}

Diffeo exponential(const VectorField& v, int min_steps) {
  int s = 0;
  VectorField fwd = exponential_displacement(v, min_steps, &s);
  VectorField inv = exponential_displacement(-v, min_steps);
  return Diffeo(std::move(fwd), std::move(inv), Diffeo::Provenance{v, s});
}

Diffeo compose(const Diffeo& outer, const Diffeo& inner) {
  require_same_grid(outer.grid(), inner.grid(), "compose");
  return Diffeo(compose_displacements(outer.forward(), inner.forward()),
                compose_displacements(inner.inverse(), outer.inverse()));
}

RoundTripDefect round_trip_defect(const Diffeo& psi, int margin) {
  const VectorField rt = compose_displacements(psi.forward(), psi.inverse());
  const GridSpec& g = psi.grid();
  RoundTripDefect d;
  std::size_t count = 0;
  for (int iy = margin; iy < g.ny() - margin; ++iy) {
    for (int ix = margin; ix < g.nx() - margin; ++ix) {
      const double e = std::hypot(rt.vx()(ix, iy) / g.spacing_x(), rt.vy()(ix, iy) / g.spacing_y());
      d.mean += e;
      d.max = std::max(d.max, e);
      ++count;
    }
  }
  if (count > 0) d.mean /= static_cast<double>(count);
  return d;
}

Image pull_back(const VectorField& disp, const Image& f) {
  require_same_grid(disp.grid(), f.grid(), "warp");
  const GridSpec& g = f.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double sx = g.spacing_x();
  const double sy = g.spacing_y();
  Image out(g);
  const double* dx = disp.vx().data();
  const double* dy = disp.vy().data();
  const double* src = f.data();
  double* dst = out.data();

#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const std::size_t p = static_cast<std::size_t>(iy) * nx + ix;
      dst[p] = sample_index(src, nx, ny, ix + dx[p] / sx, iy + dy[p] / sy, OutOfBounds::Zero);
    }
  }
  return out;
}

Image warp_intensity(const Diffeo& psi, const Image& f) { return pull_back(psi.inverse(), f); }

Image jacobian_determinant(const VectorField& disp) {
  const VectorField gx = gradient(disp.vx());
  const VectorField gy = gradient(disp.vy());
  Image out(disp.grid());
  for (std::size_t p = 0; p < out.size(); ++p) {
    out[p] = (1.0 + gx.vx()[p]) * (1.0 + gy.vy()[p]) - gx.vy()[p] * gy.vx()[p];
  }
  return out;
}

Image jacobian_determinant(const Diffeo& psi, Direction which) {
  return jacobian_determinant(which == Direction::Forward ? psi.forward() : psi.inverse());
}

Image warp_mass(const Diffeo& psi, const Image& f) {
  return multiply(pull_back(psi.inverse(), f), jacobian_determinant(psi.inverse()));
}

Image warp_adjoint_intensity(const Diffeo& psi, const Image& f) {
  return multiply(pull_back(psi.forward(), f), jacobian_determinant(psi.forward()));
}

}  // namespace gpr
