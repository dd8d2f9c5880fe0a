#pragma once

#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "gpr/grid.hpp"

namespace gpr {

// 2D parallel-beam geometry. View k looks along angle pi*k/n_angles; bin j
// collects the line {x : x cos(theta) + y sin(theta) = s_j} with s_j centered
// on the origin.
class ProjGeometry {
 public:
  // Detector length defaults to 1.02 x the image diagonal.
  ProjGeometry(const GridSpec& grid, int n_angles, int n_tang);
  ProjGeometry(const GridSpec& grid, int n_angles, int n_tang, double tang_extent);

  const GridSpec& grid() const { return grid_; }
  int n_angles() const { return n_angles_; }
  int n_tang() const { return n_tang_; }
  double tang_extent() const { return tang_extent_; }
  double tang_spacing() const { return tang_extent_ / n_tang_; }
  double tang_position(int j) const { return (j - 0.5 * (n_tang_ - 1)) * tang_spacing(); }
  double angle(int k) const { return std::numbers::pi * k / n_angles_; }
  std::size_t size() const { return static_cast<std::size_t>(n_angles_) * n_tang_; }

  bool operator==(const ProjGeometry&) const = default;

 private:
  GridSpec grid_;
  int n_angles_;
  int n_tang_;
  double tang_extent_;
};

// Values indexed (angle, tangential bin), row-major by angle.
class Sinogram {
 public:
  explicit Sinogram(const ProjGeometry& geom, double fill = 0.0);
  Sinogram(const ProjGeometry& geom, std::vector<double> values);

  const ProjGeometry& geometry() const { return geom_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int angle, int bin) { return values_[static_cast<std::size_t>(angle) * geom_.n_tang() + bin]; }
  double operator()(int angle, int bin) const { return values_[static_cast<std::size_t>(angle) * geom_.n_tang() + bin]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double sum() const;
  double max() const;
  Sinogram& operator*=(double s);
  Sinogram& operator+=(const Sinogram& other);

 private:
  ProjGeometry geom_;
  std::vector<double> values_;
};

Sinogram operator*(double s, const Sinogram& sino);

// Joseph-method line integrals; OpenMP-parallel over views.
Sinogram forward(const ProjGeometry& geom, const Image& f);

// Exact transpose of forward(). Views are split into those marched along
// rows and along columns; each half is scattered in parallel over the
// marching index so every pixel receives its contributions in a fixed order.
Image adjoint(const ProjGeometry& geom, const Sinogram& s);

// Projector bound to one geometry, carrying the cached sensitivity image
// A^T 1. Copies share the cache.
class Projector {
 public:
  explicit Projector(const ProjGeometry& geom);

  const ProjGeometry& geometry() const { return geom_; }
  Sinogram forward(const Image& f) const { return gpr::forward(geom_, f); }
  Image adjoint(const Sinogram& s) const { return gpr::adjoint(geom_, s); }
  const Image& sensitivity() const;
  // Number of times the sensitivity has actually been computed (0 or 1).
  int sensitivity_evaluations() const;

 private:
  struct Cache;
  ProjGeometry geom_;
  std::shared_ptr<Cache> cache_;
};

}  // namespace gpr
