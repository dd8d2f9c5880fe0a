#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gpr/error.hpp"

namespace gpr {

// Regular 2D lattice with pixel centers placed symmetrically about the
// origin: x(ix) = (ix - (nx-1)/2) * spacing_x. Storage is row-major, index
// iy * nx + ix.
class GridSpec {
 public:
  GridSpec(int nx, int ny, double extent_x, double extent_y);

  static GridSpec square(int n, double extent) { return GridSpec(n, n, extent, extent); }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double extent_x() const { return extent_x_; }
  double extent_y() const { return extent_y_; }
  double spacing_x() const { return extent_x_ / nx_; }
  double spacing_y() const { return extent_y_ / ny_; }
  double pixel_area() const { return spacing_x() * spacing_y(); }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

  double center_x() const { return 0.5 * (nx_ - 1); }
  double center_y() const { return 0.5 * (ny_ - 1); }
  double x_at(int ix) const { return (ix - center_x()) * spacing_x(); }
  double y_at(int iy) const { return (iy - center_y()) * spacing_y(); }
  // Continuous (fractional) pixel index of a physical coordinate.
  double index_x(double x) const { return x / spacing_x() + center_x(); }
  double index_y(double y) const { return y / spacing_y() + center_y(); }

  bool operator==(const GridSpec&) const = default;

 private:
  int nx_;
  int ny_;
  double extent_x_;
  double extent_y_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class OutOfBounds { Zero, Clamp };

// Bilinear interpolation in fractional index coordinates (u along x, w along
// y). With OutOfBounds::Zero every neighbour outside the lattice contributes
// 0; with Clamp the coordinates are clamped to the lattice first.
inline double sample_index(const double* values, int nx, int ny, double u, double w,
                           OutOfBounds oob) {
  if (oob == OutOfBounds::Clamp) {
    u = std::clamp(u, 0.0, static_cast<double>(nx - 1));
    w = std::clamp(w, 0.0, static_cast<double>(ny - 1));
  } else if (u <= -1.0 || w <= -1.0 || u >= nx || w >= ny) {
    return 0.0;
  }
  const double fu = std::floor(u);
  const double fw = std::floor(w);
  const int i0 = static_cast<int>(fu);
  const int j0 = static_cast<int>(fw);
  const double a = u - fu;
  const double b = w - fw;
  auto at = [&](int i, int j) -> double {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return 0.0;
    return values[static_cast<std::size_t>(j) * nx + i];
  };
  const double top = (1.0 - a) * at(i0, j0) + a * at(i0 + 1, j0);
  const double bottom = (1.0 - a) * at(i0, j0 + 1) + a * at(i0 + 1, j0 + 1);
  return (1.0 - b) * top + b * bottom;
}

class Image {
 public:
  explicit Image(const GridSpec& grid, double fill = 0.0);
  Image(const GridSpec& grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(int ix, int iy) { return values_[static_cast<std::size_t>(iy) * grid_.nx() + ix]; }
  double operator()(int ix, int iy) const { return values_[static_cast<std::size_t>(iy) * grid_.nx() + ix]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double sum() const;
  double max() const;
  double min() const;
  bool all_finite() const;

  Image& operator*=(double s);
  Image& operator+=(const Image& other);

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

Image operator*(double s, const Image& img);
Image operator+(const Image& a, const Image& b);
Image operator-(const Image& a, const Image& b);
Image multiply(const Image& a, const Image& b);

// Two-component field on a grid (velocities or displacements, in physical
// length units).
class VectorField {
 public:
  explicit VectorField(const GridSpec& grid);
  VectorField(Image vx, Image vy);

  const GridSpec& grid() const { return vx_.grid(); }
  std::size_t size() const { return vx_.size(); }
  Image& vx() { return vx_; }
  Image& vy() { return vy_; }
  const Image& vx() const { return vx_; }
  const Image& vy() const { return vy_; }

  bool all_finite() const { return vx_.all_finite() && vy_.all_finite(); }
  // Largest pointwise vector length.
  double max_norm() const;
  VectorField operator-() const;
  VectorField& operator*=(double s);
  VectorField& operator+=(const VectorField& other);

 private:
  Image vx_;
  Image vy_;
};

VectorField operator*(double s, const VectorField& v);
VectorField operator+(const VectorField& a, const VectorField& b);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

double bilinear_sample(const Image& img, Point2 p, OutOfBounds oob);

// Peak signal-to-noise ratio in dB with the reference maximum as peak.
// Returns +infinity when the images are identical.
double psnr(const Image& reference, const Image& estimate);

// Discrete L2 norm of (a - b) weighted by pixel area.
double l2_distance(const Image& a, const Image& b);

// Separable Gaussian filter with zero padding; sigma in pixels (0 copies).
Image gaussian_blur(const Image& img, double sigma_x_px, double sigma_y_px);
inline Image gaussian_blur(const Image& img, double sigma_px) { return gaussian_blur(img, sigma_px, sigma_px); }

// Central-difference spatial gradient (one-sided at the edges), physical units.
VectorField gradient(const Image& img);

// Plain inner product of pixel values (no area weighting).
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace gpr
