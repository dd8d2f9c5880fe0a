#include "gpr/projector.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace gpr {

ProjGeometry::ProjGeometry(const GridSpec& grid, int n_angles, int n_tang)
    : ProjGeometry(grid, n_angles, n_tang,
                   1.02 * std::hypot(grid.extent_x(), grid.extent_y())) {}

ProjGeometry::ProjGeometry(const GridSpec& grid, int n_angles, int n_tang, double tang_extent)
    : grid_(grid), n_angles_(n_angles), n_tang_(n_tang), tang_extent_(tang_extent) {
  require(n_angles >= 1, ErrorKind::Config, "projector: n_angles must be >= 1");
  require(n_tang >= 2, ErrorKind::Config, "projector: n_tang must be >= 2");
  require(std::isfinite(tang_extent) &&
              tang_extent >= std::hypot(grid.extent_x(), grid.extent_y()),
          ErrorKind::Config, "projector: detector must cover the image diagonal");
}

Sinogram::Sinogram(const ProjGeometry& geom, double fill) : geom_(geom), values_(geom.size(), fill) {}

Sinogram::Sinogram(const ProjGeometry& geom, std::vector<double> values)
    : geom_(geom), values_(std::move(values)) {
  require(values_.size() == geom_.size(), ErrorKind::Shape, "sinogram value count does not match geometry");
}

double Sinogram::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

double Sinogram::max() const { return *std::max_element(values_.begin(), values_.end()); }

Sinogram& Sinogram::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

Sinogram& Sinogram::operator+=(const Sinogram& other) {
  require(geom_ == other.geom_, ErrorKind::Shape, "sinogram addition: geometry mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Sinogram operator*(double s, const Sinogram& sino) {
  Sinogram out = sino;
  out *= s;
  return out;
}

namespace {

// One view, described in "marching" form. Row-marched views step over image
// rows and interpolate along x; column-marched views step over columns and
// interpolate along y. The lateral fractional index of ray j at marching
// index m is (t_j - pos_m * other) * inv + center.
struct View {
  bool by_rows;
  double other;
  double inv;
  double center;
  double step;
  int n_march;
  int n_lat;
};

View make_view(const ProjGeometry& geom, int k) {
  const GridSpec& g = geom.grid();
  const double theta = geom.angle(k);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  if (std::abs(c) >= std::abs(s)) {
    return View{true, s, 1.0 / (c * g.spacing_x()), g.center_x(), g.spacing_y() / std::abs(c), g.ny(), g.nx()};
  }
  return View{false, c, 1.0 / (s * g.spacing_y()), g.center_y(), g.spacing_x() / std::abs(s), g.nx(), g.ny()};
}

double march_position(const GridSpec& g, const View& v, int m) {
  return v.by_rows ? g.y_at(m) : g.x_at(m);
}

inline double lateral_index(const View& v, double t, double pos) {
  return (t - pos * v.other) * v.inv + v.center;
}

}  // namespace

Sinogram forward(const ProjGeometry& geom, const Image& f) {
  require_same_grid(geom.grid(), f.grid(), "forward projection");
  const GridSpec& g = geom.grid();
  const int nx = g.nx();
  const int n_angles = geom.n_angles();
  const int n_tang = geom.n_tang();
  Sinogram out(geom);
  const double* img = f.data();
  double* sino = out.data();

#pragma omp parallel for schedule(static)
  for (int k = 0; k < n_angles; ++k) {
    const View v = make_view(geom, k);
    // Stride between lateral neighbours and between marching steps.
    const std::size_t lat_stride = v.by_rows ? 1 : static_cast<std::size_t>(nx);
    const std::size_t march_stride = v.by_rows ? static_cast<std::size_t>(nx) : 1;
    for (int j = 0; j < n_tang; ++j) {
      const double t = geom.tang_position(j);
      double acc = 0.0;
      for (int m = 0; m < v.n_march; ++m) {
        const double u = lateral_index(v, t, march_position(g, v, m));
        if (u <= -1.0 || u >= v.n_lat) continue;
        const double fu = std::floor(u);
        const int i0 = static_cast<int>(fu);
        const double a = u - fu;
        const double* line = img + m * march_stride;
        if (i0 >= 0) acc += (1.0 - a) * line[i0 * lat_stride];
        if (i0 + 1 < v.n_lat) acc += a * line[(i0 + 1) * lat_stride];
      }
      sino[static_cast<std::size_t>(k) * n_tang + j] = acc * v.step;
    }
  }
  return out;
}

Image adjoint(const ProjGeometry& geom, const Sinogram& s) {
  require(geom == s.geometry(), ErrorKind::Shape, "adjoint: sinogram geometry mismatch");
  const GridSpec& g = geom.grid();
  const int nx = g.nx();
  const int ny = g.ny();
  const int n_angles = geom.n_angles();
  const int n_tang = geom.n_tang();
  const double* sino = s.data();

  std::vector<View> views;
  views.reserve(n_angles);
  std::vector<int> row_views;
  std::vector<int> col_views;
  for (int k = 0; k < n_angles; ++k) {
    views.push_back(make_view(geom, k));
    (views.back().by_rows ? row_views : col_views).push_back(k);
  }
  std::vector<double> tang(n_tang);
  for (int j = 0; j < n_tang; ++j) tang[j] = geom.tang_position(j);

  // Row-marched views write only into image row m; column-marched views into
  // a transposed buffer whose row m is image column m.
  Image out(g);
  std::vector<double> by_cols(g.size(), 0.0);
  const int n_row_views = static_cast<int>(row_views.size());
  const int n_col_views = static_cast<int>(col_views.size());

#pragma omp parallel for schedule(static)
  for (int m = 0; m < ny; ++m) {
    double* line = out.data() + static_cast<std::size_t>(m) * nx;
    const double pos = g.y_at(m);
    for (int r = 0; r < n_row_views; ++r) {
      const int k = row_views[r];
      const View& v = views[k];
      const double* srow = sino + static_cast<std::size_t>(k) * n_tang;
      for (int j = 0; j < n_tang; ++j) {
        const double u = lateral_index(v, tang[j], pos);
        if (u <= -1.0 || u >= nx) continue;
        const double fu = std::floor(u);
        const int i0 = static_cast<int>(fu);
        const double a = u - fu;
        const double val = srow[j] * v.step;
        if (i0 >= 0) line[i0] += (1.0 - a) * val;
        if (i0 + 1 < nx) line[i0 + 1] += a * val;
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (int m = 0; m < nx; ++m) {
    double* line = by_cols.data() + static_cast<std::size_t>(m) * ny;
    const double pos = g.x_at(m);
    for (int r = 0; r < n_col_views; ++r) {
      const int k = col_views[r];
      const View& v = views[k];
      const double* srow = sino + static_cast<std::size_t>(k) * n_tang;
      for (int j = 0; j < n_tang; ++j) {
        const double w = lateral_index(v, tang[j], pos);
        if (w <= -1.0 || w >= ny) continue;
        const double fw = std::floor(w);
        const int i0 = static_cast<int>(fw);
        const double a = w - fw;
        const double val = srow[j] * v.step;
        if (i0 >= 0) line[i0] += (1.0 - a) * val;
        if (i0 + 1 < ny) line[i0 + 1] += a * val;
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      out(ix, iy) += by_cols[static_cast<std::size_t>(ix) * ny + iy];
    }
  }
  return out;
}

struct Projector::Cache {
  std::once_flag once;
  std::unique_ptr<Image> sensitivity;
  int evaluations = 0;
};

Projector::Projector(const ProjGeometry& geom) : geom_(geom), cache_(std::make_shared<Cache>()) {}

const Image& Projector::sensitivity() const {
  std::call_once(cache_->once, [this] {
    cache_->sensitivity = std::make_unique<Image>(gpr::adjoint(geom_, Sinogram(geom_, 1.0)));
    ++cache_->evaluations;
  });
  return *cache_->sensitivity;
}

int Projector::sensitivity_evaluations() const { return cache_->evaluations; }

}  // namespace gpr
