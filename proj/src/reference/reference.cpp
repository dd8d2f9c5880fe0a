#include "gpr/reference.hpp"

#include <cmath>

namespace gpr::reference {

namespace {

// Weight that ray sample point (lateral fractional index u) gives to lateral
// pixel i, zero when i is not one of the two bracketing pixels.
double hat(double u, int i) {
  const double d = std::abs(u - i);
  return d < 1.0 ? 1.0 - d : 0.0;
}

}  // namespace

Sinogram forward_serial(const ProjGeometry& geom, const Image& f) {
  require_same_grid(geom.grid(), f.grid(), "forward_serial");
  const GridSpec& g = geom.grid();
  Sinogram out(geom);
  for (int k = 0; k < geom.n_angles(); ++k) {
    const double c = std::cos(geom.angle(k));
    const double s = std::sin(geom.angle(k));
    for (int j = 0; j < geom.n_tang(); ++j) {
      const double t = geom.tang_position(j);
      double acc = 0.0;
      if (std::abs(c) >= std::abs(s)) {
        for (int iy = 0; iy < g.ny(); ++iy) {
          const double u = (t - g.y_at(iy) * s) * (1.0 / (c * g.spacing_x())) + g.center_x();
          const int i0 = static_cast<int>(std::floor(u));
          for (int ix = std::max(0, i0); ix <= std::min(g.nx() - 1, i0 + 1); ++ix) acc += hat(u, ix) * f(ix, iy);
        }
        out(k, j) = acc * g.spacing_y() / std::abs(c);
      } else {
        for (int ix = 0; ix < g.nx(); ++ix) {
          const double w = (t - g.x_at(ix) * c) * (1.0 / (s * g.spacing_y())) + g.center_y();
          const int i0 = static_cast<int>(std::floor(w));
          for (int iy = std::max(0, i0); iy <= std::min(g.ny() - 1, i0 + 1); ++iy) acc += hat(w, iy) * f(ix, iy);
        }
        out(k, j) = acc * g.spacing_x() / std::abs(s);
      }
    }
  }
  return out;
}

Image adjoint_serial(const ProjGeometry& geom, const Sinogram& sino) {
  require(geom == sino.geometry(), ErrorKind::Shape, "adjoint_serial: geometry mismatch");
  const GridSpec& g = geom.grid();
  Image out(g);
  for (int k = 0; k < geom.n_angles(); ++k) {
    const double c = std::cos(geom.angle(k));
    const double s = std::sin(geom.angle(k));
    for (int j = 0; j < geom.n_tang(); ++j) {
      const double t = geom.tang_position(j);
      if (std::abs(c) >= std::abs(s)) {
        const double val = sino(k, j) * g.spacing_y() / std::abs(c);
        for (int iy = 0; iy < g.ny(); ++iy) {
          const double u = (t - g.y_at(iy) * s) * (1.0 / (c * g.spacing_x())) + g.center_x();
          const int i0 = static_cast<int>(std::floor(u));
          for (int ix = std::max(0, i0); ix <= std::min(g.nx() - 1, i0 + 1); ++ix) out(ix, iy) += hat(u, ix) * val;
        }
      } else {
        const double val = sino(k, j) * g.spacing_x() / std::abs(s);
        for (int ix = 0; ix < g.nx(); ++ix) {
          const double w = (t - g.x_at(ix) * c) * (1.0 / (s * g.spacing_y())) + g.center_y();
          const int i0 = static_cast<int>(std::floor(w));
          for (int iy = std::max(0, i0); iy <= std::min(g.ny() - 1, i0 + 1); ++iy) out(ix, iy) += hat(w, iy) * val;
        }
      }
    }
  }
  return out;
}

Image pull_back_serial(const VectorField& disp, const Image& f) {
  require_same_grid(disp.grid(), f.grid(), "pull_back_serial");
  const GridSpec& g = f.grid();
  Image out(g);
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double x = g.x_at(ix) + disp.vx()(ix, iy);
      const double y = g.y_at(iy) + disp.vy()(ix, iy);
      const double u = x / g.spacing_x() + g.center_x();
      const double w = y / g.spacing_y() + g.center_y();
      double acc = 0.0;
      for (int jy = static_cast<int>(std::floor(w)); jy <= static_cast<int>(std::floor(w)) + 1; ++jy) {
        for (int jx = static_cast<int>(std::floor(u)); jx <= static_cast<int>(std::floor(u)) + 1; ++jx) {
          if (jx < 0 || jy < 0 || jx >= g.nx() || jy >= g.ny()) continue;
          acc += hat(u, jx) * hat(w, jy) * f(jx, jy);
        }
      }
      out(ix, iy) = acc;
    }
  }
  return out;
}

}  // namespace gpr::reference
