#include "gpr/registration.hpp"

#include <algorithm>
#include <cmath>

namespace gpr {

void RegConfig::validate() const {
  require(!lambda || (std::isfinite(*lambda) && *lambda >= 0.0), ErrorKind::Config, "registration: lambda must be >= 0");
  require(levels >= 1, ErrorKind::Config, "registration: levels must be >= 1");
  require(iters_per_level >= 1, ErrorKind::Config, "registration: iters_per_level must be >= 1");
  require(initial_step_px > 0.0, ErrorKind::Config, "registration: initial_step_px must be > 0");
  require(max_backtracks >= 0, ErrorKind::Config, "registration: max_backtracks must be >= 0");
  require(gradient_smoothing_px >= 0.0, ErrorKind::Config, "registration: gradient_smoothing_px must be >= 0");
  require(convergence_tol >= 0.0, ErrorKind::Config, "registration: convergence_tol must be >= 0");
  require(exp_steps >= 1, ErrorKind::Config, "registration: exp_steps must be >= 1");
}

namespace {

// Transpose of the x part of gradient(): scatters each difference back onto
// the two nodes it was formed from.
Image diff_x_transpose(const Image& r) {
  const GridSpec& g = r.grid();
  const int nx = g.nx();
  const double sx = g.spacing_x();
  Image out(g);
  if (nx == 1) return out;
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double v = r(ix, iy);
      if (ix == 0) {
        out(1, iy) += v / sx;
        out(0, iy) -= v / sx;
      } else if (ix == nx - 1) {
        out(nx - 1, iy) += v / sx;
        out(nx - 2, iy) -= v / sx;
      } else {
        out(ix + 1, iy) += v / (2.0 * sx);
        out(ix - 1, iy) -= v / (2.0 * sx);
      }
    }
  }
  return out;
}

Image diff_y_transpose(const Image& r) {
  const GridSpec& g = r.grid();
  const int ny = g.ny();
  const double sy = g.spacing_y();
  Image out(g);
  if (ny == 1) return out;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double v = r(ix, iy);
      if (iy == 0) {
        out(ix, 1) += v / sy;
        out(ix, 0) -= v / sy;
      } else if (iy == ny - 1) {
        out(ix, ny - 1) += v / sy;
        out(ix, ny - 2) -= v / sy;
      } else {
        out(ix, iy + 1) += v / (2.0 * sy);
        out(ix, iy - 1) -= v / (2.0 * sy);
      }
    }
  }
  return out;
}

// W_exp(v) f1 = f1 o exp(-v).
Image warp_template(const VectorField& v, const Image& f1, int exp_steps) {
  return pull_back(exponential_displacement(-v, exp_steps), f1);
}

RegObjective objective_from_warped(const VectorField& v, const Image& warped, const Image& f2, double lambda) {
  RegObjective o;
  const double d = l2_distance(f2, warped);
  o.data = d * d;
  o.reg = velocity_regularizer(v);
  o.total = o.data + lambda * o.reg;
  return o;
}

VectorField gradient_from_warped(const VectorField& v, const Image& warped, const Image& f2, double lambda) {
  const GridSpec& g = v.grid();
  const VectorField grad_w = gradient(warped);
  VectorField out(g);
  const double area = g.pixel_area();
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double r = 2.0 * area * (f2[p] - warped[p]);
    out.vx()[p] = r * grad_w.vx()[p];
    out.vy()[p] = r * grad_w.vy()[p];
  }
  if (lambda != 0.0) out += lambda * velocity_regularizer_gradient(v);
  return out;
}

GridSpec coarser(const GridSpec& g) {
  return GridSpec(std::max(1, (g.nx() + 1) / 2), std::max(1, (g.ny() + 1) / 2), g.extent_x(), g.extent_y());
}

// Bilinear resampling at the pixel centers of `to` (same physical domain).
Image resample(const Image& img, const GridSpec& to, OutOfBounds oob) {
  const GridSpec& from = img.grid();
  if (from == to) return img;
  Image out(to);
  for (int iy = 0; iy < to.ny(); ++iy) {
    const double w = from.index_y(to.y_at(iy));
    for (int ix = 0; ix < to.nx(); ++ix) {
      out(ix, iy) = sample_index(img.data(), from.nx(), from.ny(), from.index_x(to.x_at(ix)), w, oob);
    }
  }
  return out;
}

VectorField resample(const VectorField& v, const GridSpec& to) {
  return VectorField(resample(v.vx(), to, OutOfBounds::Clamp), resample(v.vy(), to, OutOfBounds::Clamp));
}

double max_norm_px(const VectorField& d) {
  const GridSpec& g = d.grid();
  double m = 0.0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    m = std::max(m, std::hypot(d.vx()[p] / g.spacing_x(), d.vy()[p] / g.spacing_y()));
  }
  return m;
}

// Jacobi-Lie bracket [v, u]_i = sum_j (d_j v_i) u_j - (d_j u_i) v_j.
VectorField lie_bracket(const VectorField& v, const VectorField& u) {
  const VectorField gvx = gradient(v.vx());
  const VectorField gvy = gradient(v.vy());
  const VectorField gux = gradient(u.vx());
  const VectorField guy = gradient(u.vy());
  VectorField out(v.grid());
  for (std::size_t p = 0; p < v.size(); ++p) {
    out.vx()[p] = gvx.vx()[p] * u.vx()[p] + gvx.vy()[p] * u.vy()[p] - gux.vx()[p] * v.vx()[p] - gux.vy()[p] * v.vy()[p];
    out.vy()[p] = gvy.vx()[p] * u.vx()[p] + gvy.vy()[p] * u.vy()[p] - guy.vx()[p] * v.vx()[p] - guy.vy()[p] * v.vy()[p];
  }
  return out;
}

bool all_zero(const VectorField& v) {
  auto zero = [](double x) { return x == 0.0; };
  return std::all_of(v.vx().values().begin(), v.vx().values().end(), zero) &&
         std::all_of(v.vy().values().begin(), v.vy().values().end(), zero);
}

}  // namespace

double velocity_regularizer(const VectorField& v) {
  double s = 0.0;
  for (const Image* c : {&v.vx(), &v.vy()}) {
    const VectorField g = gradient(*c);
    for (std::size_t p = 0; p < c->size(); ++p) s += g.vx()[p] * g.vx()[p] + g.vy()[p] * g.vy()[p];
  }
  return s / static_cast<double>(v.size());
}

VectorField velocity_regularizer_gradient(const VectorField& v) {
  const double scale = 2.0 / static_cast<double>(v.size());
  auto component = [&](const Image& c) {
    const VectorField g = gradient(c);
    Image out = diff_x_transpose(g.vx());
    out += diff_y_transpose(g.vy());
    out *= scale;
    return out;
  };
  return VectorField(component(v.vx()), component(v.vy()));
}

RegObjective reg_objective(const VectorField& v, const Image& f1, const Image& f2, double lambda, int exp_steps) {
  require_same_grid(v.grid(), f1.grid(), "reg_objective");
  require_same_grid(f1.grid(), f2.grid(), "reg_objective");
  return objective_from_warped(v, warp_template(v, f1, exp_steps), f2, lambda);
}

VectorField reg_gradient(const VectorField& v, const Image& f1, const Image& f2, double lambda, int exp_steps) {
  require_same_grid(v.grid(), f1.grid(), "reg_gradient");
  require_same_grid(f1.grid(), f2.grid(), "reg_gradient");
  return gradient_from_warped(v, warp_template(v, f1, exp_steps), f2, lambda);
}

double default_lambda(const Image& f1, const Image& f2) {
  const double peak = std::max({f1.max(), f2.max(), 0.0});
  const GridSpec& g = f1.grid();
  return 0.002 * peak * peak * g.extent_x() * g.extent_y();
}

RegResult register_images(const Image& f1, const Image& f2, const RegConfig& cfg) {
  cfg.validate();
  require_same_grid(f1.grid(), f2.grid(), "register");
  require(f1.all_finite() && f2.all_finite(), ErrorKind::InvalidInput, "register: images must be finite");
  const GridSpec& fine = f1.grid();
  const double lambda = cfg.lambda.value_or(default_lambda(f1, f2));

  RegResult result{VectorField(fine), Diffeo::identity(fine), {}, {}, false, lambda};

  // Flat or identical inputs: nothing to register.
  if (all_zero(reg_gradient(result.velocity, f1, f2, 0.0, cfg.exp_steps))) {
    result.final_objective = reg_objective(result.velocity, f1, f2, lambda, cfg.exp_steps);
    return result;
  }

  std::vector<GridSpec> pyramid{fine};
  while (static_cast<int>(pyramid.size()) < cfg.levels && pyramid.back().nx() >= 16 && pyramid.back().ny() >= 16) {
    pyramid.push_back(coarser(pyramid.back()));
  }
  const int n_levels = static_cast<int>(pyramid.size());

  VectorField v(pyramid.back());
  for (int level = n_levels - 1; level >= 0; --level) {
    const GridSpec& g = pyramid[level];
    // smoothing[] is listed coarsest first for the configured depth.
    const int idx = cfg.levels - 1 - level;
    const double sigma =
        (idx >= 0 && idx < static_cast<int>(cfg.smoothing.size()) ? cfg.smoothing[idx] : 0.0) * (1 << level);
    const Image t = resample(gaussian_blur(f1, sigma), g, OutOfBounds::Zero);
    const Image r = resample(gaussian_blur(f2, sigma), g, OutOfBounds::Zero);
    v = resample(v, g);

    Image warped = warp_template(v, t, cfg.exp_steps);
    RegObjective current = objective_from_warped(v, warped, r, lambda);
    double step_px = cfg.initial_step_px;
    for (int it = 0; it < cfg.iters_per_level; ++it) {
      VectorField dir = gradient_from_warped(v, warped, r, lambda);
      dir = VectorField(gaussian_blur(dir.vx(), cfg.gradient_smoothing_px),
                        gaussian_blur(dir.vy(), cfg.gradient_smoothing_px));
      dir *= -1.0;
      const double m = max_norm_px(dir);
      if (m == 0.0) break;

      // The data gradient is the derivative along left composition
      // exp(u) o exp(v); log(exp(u) o exp(v)) ~ v + u - [v, u] / 2 keeps
      // the stationary parametrization on that path.
      const VectorField drift = -0.5 * lie_bracket(v, dir);
      bool accepted = false;
      for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
        VectorField trial = v + (step_px / m) * (dir + drift);
        Image trial_warped = warp_template(trial, t, cfg.exp_steps);
        const RegObjective o = objective_from_warped(trial, trial_warped, r, lambda);
        if (o.total < current.total) {
          const double decrease = (current.total - o.total) / std::max(current.total, 1e-300);
          v = std::move(trial);
          warped = std::move(trial_warped);
          current = o;
          accepted = true;
          step_px = std::min(1.5 * step_px, 4.0);
          result.trace.push_back(RegTraceRow{level, it, o.data, o.reg, o.total});
          if (decrease < cfg.convergence_tol) it = cfg.iters_per_level;
          break;
        }
        step_px *= 0.5;
      }
      if (!accepted) {
        if (level == n_levels - 1 && it == 0) result.stalled = true;
        break;
      }
    }
  }

  result.final_objective = reg_objective(v, f1, f2, lambda, cfg.exp_steps);
  result.diffeo = exponential(v, cfg.exp_steps);
  result.velocity = std::move(v);
  return result;
}

}  // namespace gpr
