#pragma once

#include <utility>
#include <vector>

#include "gpr/grid.hpp"
#include "gpr/projector.hpp"
#include "gpr/rng.hpp"

namespace gpr {

struct Disc {
  double cx, cy, radius;
};

// Hot-rod layout: six 60-degree sectors, one disc radius per sector, discs on
// a triangular lattice with center spacing of two diameters, all inside a
// disc of radius 0.9 x half-extent. Radii scale with the grid from
// {6, 5, 4, 3, 2.5, 2} pixels at 192 x 192.
std::vector<Disc> derenzo_layout(const GridSpec& grid);
Image derenzo_phantom(const GridSpec& grid);

struct EllipsoidSceneConfig {
  double mean_count = 8.0;
  double center_region = 0.5;  // centers uniform in the central fraction of each axis
  double axis_mean = 10.0;     // length units
  double intensity_min = 0.2;
  double intensity_max = 1.0;
  double mask_margin = 16.0;   // pixels

  void validate() const;
  bool operator==(const EllipsoidSceneConfig&) const = default;
  // Defaults for a grid of n pixels per side and the given extent; pixel-sized
  // quantities are scaled from their 192 x 192 values.
  static EllipsoidSceneConfig defaults_for(const GridSpec& grid);
};

struct Ellipse {
  double cx, cy;    // center
  double a, b;      // semi-axes
  double angle;     // orientation of the a axis
  double intensity;
};

std::vector<Ellipse> sample_ellipses(const GridSpec& grid, const EllipsoidSceneConfig& cfg, RngSeed rng);
// Sum of constant-intensity ellipses evaluated at pixel centers.
Image rasterize_ellipses(const GridSpec& grid, const std::vector<Ellipse>& ellipses);
Image random_ellipsoid_image(const GridSpec& grid, const EllipsoidSceneConfig& cfg, RngSeed rng);

// Separable cosine taper: 0 on the outermost pixel ring, 0.5 at half-margin
// depth, 1 from depth `margin` inward.
Image boundary_mask(const GridSpec& grid, double margin);

struct GrfConfig {
  double kernel_scale = 16.0;  // correlation length, length units
  double amplitude = 4.0;      // marginal std of each component, length units
  double mask_margin = 16.0;   // pixels

  void validate() const;
  bool operator==(const GrfConfig&) const = default;
  static GrfConfig defaults_for(const GridSpec& grid);
};

// Each component: white noise filtered by a Gaussian of width
// kernel_scale / sqrt(2), normalized to marginal std `amplitude`, then
// multiplied by boundary_mask(mask_margin).
VectorField sample_grf_velocity(const GridSpec& grid, const GrfConfig& cfg, RngSeed rng);

// Independent Poisson draw per bin.
Sinogram poisson_counts(const Sinogram& mean, RngSeed rng);

}  // namespace gpr
