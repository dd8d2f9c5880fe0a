#include "gpr/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace gpr {

GridSpec::GridSpec(int nx, int ny, double extent_x, double extent_y)
    : nx_(nx), ny_(ny), extent_x_(extent_x), extent_y_(extent_y) {
  require(nx >= 1 && ny >= 1, ErrorKind::Config, "grid pixel counts must be >= 1");
  require(std::isfinite(extent_x) && std::isfinite(extent_y) && extent_x > 0.0 && extent_y > 0.0,
          ErrorKind::Config, "grid extent must be finite and positive");
}

Image::Image(const GridSpec& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

Image::Image(const GridSpec& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  require(values_.size() == grid_.size(), ErrorKind::Shape, "image value count does not match grid");
}

double Image::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

double Image::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Image::min() const { return *std::min_element(values_.begin(), values_.end()); }

bool Image::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Image& Image::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Image& Image::operator+=(const Image& other) {
  require_same_grid(grid_, other.grid_, "image addition");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Image operator*(double s, const Image& img) {
  Image out = img;
  out *= s;
  return out;
}

Image operator+(const Image& a, const Image& b) {
  Image out = a;
  out += b;
  return out;
}

Image operator-(const Image& a, const Image& b) {
  require_same_grid(a.grid(), b.grid(), "image subtraction");
  Image out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Image multiply(const Image& a, const Image& b) {
  require_same_grid(a.grid(), b.grid(), "image product");
  Image out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

VectorField::VectorField(const GridSpec& grid) : vx_(grid), vy_(grid) {}

VectorField::VectorField(Image vx, Image vy) : vx_(std::move(vx)), vy_(std::move(vy)) {
  require_same_grid(vx_.grid(), vy_.grid(), "vector field components");
}

double VectorField::max_norm() const {
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::hypot(vx_[i], vy_[i]));
  return m;
}

VectorField VectorField::operator-() const { return -1.0 * *this; }

VectorField& VectorField::operator*=(double s) {
  vx_ *= s;
  vy_ *= s;
  return *this;
}

VectorField& VectorField::operator+=(const VectorField& other) {
  vx_ += other.vx_;
  vy_ += other.vy_;
  return *this;
}

VectorField operator*(double s, const VectorField& v) {
  VectorField out = v;
  out *= s;
  return out;
}

VectorField operator+(const VectorField& a, const VectorField& b) {
  VectorField out = a;
  out += b;
  return out;
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) fail(ErrorKind::Shape, std::string("grid mismatch in ") + what);
}

double bilinear_sample(const Image& img, Point2 p, OutOfBounds oob) {
  require(std::isfinite(p.x) && std::isfinite(p.y), ErrorKind::InvalidInput,
          "bilinear_sample: non-finite coordinates");
  const GridSpec& g = img.grid();
  return sample_index(img.data(), g.nx(), g.ny(), g.index_x(p.x), g.index_y(p.y), oob);
}

double psnr(const Image& reference, const Image& estimate) {
  require_same_grid(reference.grid(), estimate.grid(), "psnr");
  const double peak = reference.max();
  const bool all_zero = std::all_of(reference.values().begin(), reference.values().end(),
                                    [](double v) { return v == 0.0; });
  require(!all_zero, ErrorKind::UndefinedMetric, "psnr: reference image is identically zero");
  double sse = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(reference.size());
  return 10.0 * std::log10(peak * peak / mse);
}

double l2_distance(const Image& a, const Image& b) {
  require_same_grid(a.grid(), b.grid(), "l2_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s * a.grid().pixel_area());
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Shape, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

namespace {

std::vector<double> blur_taps(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-0.5 * k * k / (sigma * sigma));
    sum += taps[k + radius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

}  // namespace

Image gaussian_blur(const Image& img, double sigma_x_px, double sigma_y_px) {
  const GridSpec& g = img.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  Image tmp = img;
  if (sigma_x_px > 0.0) {
    const std::vector<double> t = blur_taps(sigma_x_px);
    const int r = static_cast<int>(t.size() / 2);
#pragma omp parallel for schedule(static)
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        double acc = 0.0;
        for (int k = std::max(-r, -ix); k <= std::min(r, nx - 1 - ix); ++k) acc += t[k + r] * img(ix + k, iy);
        tmp(ix, iy) = acc;
      }
    }
  }
  if (sigma_y_px <= 0.0) return tmp;
  Image out(g);
  const std::vector<double> t = blur_taps(sigma_y_px);
  const int r = static_cast<int>(t.size() / 2);
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double acc = 0.0;
      for (int k = std::max(-r, -iy); k <= std::min(r, ny - 1 - iy); ++k) acc += t[k + r] * tmp(ix, iy + k);
      out(ix, iy) = acc;
    }
  }
  return out;
}

VectorField gradient(const Image& img) {
  const GridSpec& g = img.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const double sx = g.spacing_x();
  const double sy = g.spacing_y();
  VectorField out(g);
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      double gx = 0.0;
      double gy = 0.0;
      if (nx > 1) {
        if (ix == 0) gx = (img(1, iy) - img(0, iy)) / sx;
        else if (ix == nx - 1) gx = (img(nx - 1, iy) - img(nx - 2, iy)) / sx;
        else gx = (img(ix + 1, iy) - img(ix - 1, iy)) / (2.0 * sx);
      }
      if (ny > 1) {
        if (iy == 0) gy = (img(ix, 1) - img(ix, 0)) / sy;
        else if (iy == ny - 1) gy = (img(ix, ny - 1) - img(ix, ny - 2)) / sy;
        else gy = (img(ix, iy + 1) - img(ix, iy - 1)) / (2.0 * sy);
      }
      out.vx()(ix, iy) = gx;
      out.vy()(ix, iy) = gy;
    }
  }
  return out;
}

}  // namespace gpr
