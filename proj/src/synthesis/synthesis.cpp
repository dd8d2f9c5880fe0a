#include "gpr/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace gpr {

namespace {

// Pixel-denominated defaults are quoted for a 192 x 192 grid.
constexpr double kReferenceSize = 192.0;

double reference_scale(const GridSpec& grid) { return std::min(grid.nx(), grid.ny()) / kReferenceSize; }

// Physical length corresponding to `px` pixels of the 192-pixel reference grid.
double reference_length(const GridSpec& grid, double px) {
  return px * std::min(grid.extent_x(), grid.extent_y()) / kReferenceSize;
}

std::vector<double> gaussian_taps(double sigma_px) {
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma_px)));
  std::vector<double> taps(2 * radius + 1);
  double sq = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * k * k / (sigma_px * sigma_px));
    taps[k + radius] = w;
    sq += w * w;
  }
  const double norm = 1.0 / std::sqrt(sq);
  for (double& w : taps) w *= norm;
  return taps;
}

}  // namespace

std::vector<Disc> derenzo_layout(const GridSpec& grid) {
  require(grid.nx() >= 64 && grid.ny() >= 64, ErrorKind::Config, "derenzo: grid must be at least 64 x 64");
  constexpr double kRadiiPx[6] = {6.0, 5.0, 4.0, 3.0, 2.5, 2.0};
  const double min_spacing = std::max(grid.spacing_x(), grid.spacing_y());
  require(reference_length(grid, kRadiiPx[5]) >= 0.5 * min_spacing, ErrorKind::Config,
          "derenzo: grid too coarse to resolve the smallest sector");

  const double outer = 0.9 * 0.5 * std::min(grid.extent_x(), grid.extent_y());
  std::vector<Disc> discs;
  for (int sector = 0; sector < 6; ++sector) {
    const double r = reference_length(grid, kRadiiPx[sector]);
    const double pitch = 4.0 * r;
    const double bisector = std::numbers::pi / 3.0 * (sector + 0.5);
    const double ux = std::cos(bisector);
    const double uy = std::sin(bisector);
    // Apex offset keeps every disc half a radius clear of the sector edges.
    const double apex = 3.0 * r;
    for (int row = 0;; ++row) {
      const double along = apex + row * pitch * std::sqrt(3.0) / 2.0;
      if (along + r > outer) break;
      for (int i = 0; i <= row; ++i) {
        const double lateral = (i - 0.5 * row) * pitch;
        const double cx = along * ux - lateral * uy;
        const double cy = along * uy + lateral * ux;
        if (std::hypot(cx, cy) + r <= outer) discs.push_back(Disc{cx, cy, r});
      }
    }
  }
  return discs;
}

Image derenzo_phantom(const GridSpec& grid) {
  const std::vector<Disc> discs = derenzo_layout(grid);
  Image img(grid);
  for (const Disc& d : discs) {
    const int x0 = std::max(0, static_cast<int>(std::floor(grid.index_x(d.cx - d.radius))));
    const int x1 = std::min(grid.nx() - 1, static_cast<int>(std::ceil(grid.index_x(d.cx + d.radius))));
    const int y0 = std::max(0, static_cast<int>(std::floor(grid.index_y(d.cy - d.radius))));
    const int y1 = std::min(grid.ny() - 1, static_cast<int>(std::ceil(grid.index_y(d.cy + d.radius))));
    for (int iy = y0; iy <= y1; ++iy) {
      for (int ix = x0; ix <= x1; ++ix) {
        const double dx = grid.x_at(ix) - d.cx;
        const double dy = grid.y_at(iy) - d.cy;
        if (dx * dx + dy * dy <= d.radius * d.radius) img(ix, iy) = 1.0;
      }
    }
  }
  return img;
}

void EllipsoidSceneConfig::validate() const {
  require(mean_count > 0.0, ErrorKind::Config, "ellipsoid: mean_count must be > 0");
  require(center_region > 0.0 && center_region <= 1.0, ErrorKind::Config, "ellipsoid: center_region must be in (0, 1]");
  require(axis_mean > 0.0, ErrorKind::Config, "ellipsoid: axis_mean must be > 0");
  require(intensity_min <= intensity_max, ErrorKind::Config, "ellipsoid: empty intensity range");
  require(mask_margin >= 0.0, ErrorKind::Config, "ellipsoid: mask_margin must be >= 0");
}

EllipsoidSceneConfig EllipsoidSceneConfig::defaults_for(const GridSpec& grid) {
  EllipsoidSceneConfig cfg;
  cfg.axis_mean = reference_length(grid, 10.0);
  cfg.mask_margin = 16.0 * reference_scale(grid);
  return cfg;
}

std::vector<Ellipse> sample_ellipses(const GridSpec& grid, const EllipsoidSceneConfig& cfg, RngSeed rng) {
  cfg.validate();
  CounterRng gen(rng, 0);
  std::poisson_distribution<int> count_dist(cfg.mean_count);
  const int count = std::max(1, count_dist(gen));
  std::exponential_distribution<double> axis_dist(1.0 / cfg.axis_mean);
  const double hx = 0.5 * cfg.center_region * grid.extent_x();
  const double hy = 0.5 * cfg.center_region * grid.extent_y();
  std::vector<Ellipse> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Ellipse e{};
    e.cx = -hx + 2.0 * hx * gen.uniform();
    e.cy = -hy + 2.0 * hy * gen.uniform();
    e.a = axis_dist(gen);
    e.b = axis_dist(gen);
    e.angle = std::numbers::pi * gen.uniform();
    e.intensity = cfg.intensity_min + (cfg.intensity_max - cfg.intensity_min) * gen.uniform();
    out.push_back(e);
  }
  return out;
}

Image rasterize_ellipses(const GridSpec& grid, const std::vector<Ellipse>& ellipses) {
  Image img(grid);
  const int nx = grid.nx();
  const int ny = grid.ny();
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < ny; ++iy) {
    const double y = grid.y_at(iy);
    for (int ix = 0; ix < nx; ++ix) {
      const double x = grid.x_at(ix);
      double v = 0.0;
      for (const Ellipse& e : ellipses) {
        const double dx = x - e.cx;
        const double dy = y - e.cy;
        const double c = std::cos(e.angle);
        const double s = std::sin(e.angle);
        const double p = (dx * c + dy * s) / e.a;
        const double q = (-dx * s + dy * c) / e.b;
        if (p * p + q * q <= 1.0) v += e.intensity;
      }
      img(ix, iy) = v;
    }
  }
  return img;
}

Image random_ellipsoid_image(const GridSpec& grid, const EllipsoidSceneConfig& cfg, RngSeed rng) {
  return multiply(rasterize_ellipses(grid, sample_ellipses(grid, cfg, rng)), boundary_mask(grid, cfg.mask_margin));
}

Image boundary_mask(const GridSpec& grid, double margin) {
  require(margin >= 0.0 && margin < 0.5 * std::min(grid.nx(), grid.ny()), ErrorKind::Config,
          "boundary_mask: margin must be in [0, min(nx, ny) / 2)");
  auto ramp = [margin](int depth) {
    if (depth >= margin) return 1.0;
    return 0.5 - 0.5 * std::cos(std::numbers::pi * depth / margin);
  };
  Image mask(grid);
  for (int iy = 0; iy < grid.ny(); ++iy) {
    const double wy = ramp(std::min(iy, grid.ny() - 1 - iy));
    for (int ix = 0; ix < grid.nx(); ++ix) {
      mask(ix, iy) = wy * ramp(std::min(ix, grid.nx() - 1 - ix));
    }
  }
  return mask;
}

void GrfConfig::validate() const {
  require(kernel_scale > 0.0, ErrorKind::Config, "grf: kernel_scale must be > 0");
  require(amplitude >= 0.0, ErrorKind::Config, "grf: amplitude must be >= 0");
  require(mask_margin >= 0.0, ErrorKind::Config, "grf: mask_margin must be >= 0");
}

GrfConfig GrfConfig::defaults_for(const GridSpec& grid) {
  GrfConfig cfg;
  cfg.kernel_scale = reference_length(grid, 16.0);
  cfg.amplitude = reference_length(grid, 4.0);
  cfg.mask_margin = 16.0 * reference_scale(grid);
  return cfg;
}

VectorField sample_grf_velocity(const GridSpec& grid, const GrfConfig& cfg, RngSeed rng) {
  cfg.validate();
  const Image mask = boundary_mask(grid, cfg.mask_margin);
  VectorField out(grid);
  if (cfg.amplitude == 0.0) return out;

  const double sigma = cfg.kernel_scale / std::sqrt(2.0);
  const std::vector<double> tx = gaussian_taps(sigma / grid.spacing_x());
  const std::vector<double> ty = gaussian_taps(sigma / grid.spacing_y());
  const int rx = static_cast<int>(tx.size() / 2);
  const int ry = static_cast<int>(ty.size() / 2);
  const int nx = grid.nx();
  const int ny = grid.ny();
  const int px = nx + 2 * rx;
  const int py = ny + 2 * ry;

  for (int comp = 0; comp < 2; ++comp) {
    const RngSeed comp_seed = rng.substream(static_cast<std::uint64_t>(comp));
    // White noise on the padded lattice, one counter stream per padded row.
    std::vector<double> noise(static_cast<std::size_t>(px) * py);
#pragma omp parallel for schedule(static)
    for (int row = 0; row < py; ++row) {
      CounterRng gen(comp_seed, static_cast<std::uint64_t>(row));
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int col = 0; col < px; ++col) noise[static_cast<std::size_t>(row) * px + col] = normal(gen);
    }
    // Filter along x (keeping padded rows), then along y.
    std::vector<double> along_x(static_cast<std::size_t>(nx) * py);
#pragma omp parallel for schedule(static)
    for (int row = 0; row < py; ++row) {
      const double* src = noise.data() + static_cast<std::size_t>(row) * px;
      for (int ix = 0; ix < nx; ++ix) {
        double acc = 0.0;
        for (int k = 0; k <= 2 * rx; ++k) acc += tx[k] * src[ix + k];
        along_x[static_cast<std::size_t>(row) * nx + ix] = acc;
      }
    }
    Image& dst = comp == 0 ? out.vx() : out.vy();
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        double acc = 0.0;
        for (int k = 0; k <= 2 * ry; ++k) acc += ty[k] * along_x[static_cast<std::size_t>(iy + k) * nx + ix];
        dst(ix, iy) = cfg.amplitude * acc * mask(ix, iy);
      }
    }
  }
  return out;
}

Sinogram poisson_counts(const Sinogram& mean, RngSeed rng) {
  for (double m : mean.values()) {
    require(std::isfinite(m) && m >= 0.0, ErrorKind::InvalidInput, "poisson_counts: mean must be finite and >= 0");
  }
  Sinogram out(mean.geometry());
  const auto n = static_cast<std::int64_t>(mean.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const double m = mean[static_cast<std::size_t>(i)];
    if (m == 0.0) continue;
    CounterRng gen(rng, static_cast<std::uint64_t>(i));
    std::poisson_distribution<long long> dist(m);
    out[static_cast<std::size_t>(i)] = static_cast<double>(dist(gen));
  }
  return out;
}

}  // namespace gpr
