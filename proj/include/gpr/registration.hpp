#pragma once

#include <optional>
#include <vector>

#include "gpr/diffeo.hpp"

namespace gpr {

struct RegConfig {
  // Regularization weight. When unset: 0.002 * max(f1, f2)^2 * |domain area|,
  // i.e. 0.002 in units of the area-normalized data term. Larger values
  // leave several pixels of residual motion on noisy gate images.
  std::optional<double> lambda;
  int levels = 3;
  int iters_per_level = 100;
  // Largest displacement update of the first trial step, in level pixels.
  // Accepted steps grow it by 1.5x, rejected ones halve it.
  double initial_step_px = 0.5;
  int max_backtracks = 8;
  // Gaussian pre-smoothing of both images, in pixels of each level, listed
  // from the coarsest level to the finest. Missing entries mean no smoothing.
  std::vector<double> smoothing{1.0, 0.5, 0.25};
  // Width (level pixels) of the Gaussian applied to the gradient before each
  // step; a positive-definite preconditioner, so the step stays a descent
  // direction.
  // Mostly this, not lambda, sets how far the field reaches into flat regions.
  double gradient_smoothing_px = 4.0;
  // Stop a level when an accepted step lowers the objective by less than this
  // relative amount.
  double convergence_tol = 1e-6;
  int exp_steps = 64;

  void validate() const;
};

struct RegObjective {
  double total = 0.0;
  double data = 0.0;
  double reg = 0.0;
};

struct RegTraceRow {
  int level = 0;  // 0 is the finest grid
  int iteration = 0;
  double data = 0.0;
  double reg = 0.0;
  double total = 0.0;
};

struct RegResult {
  VectorField velocity;
  Diffeo diffeo;
  std::vector<RegTraceRow> trace;
  RegObjective final_objective;
  bool stalled = false;
  double lambda = 0.0;
};

// Mean over pixels of |grad vx|^2 + |grad vy|^2 (central differences, one-sided
// at the edges).
double velocity_regularizer(const VectorField& v);
// Exact gradient of velocity_regularizer with respect to the nodal values.
VectorField velocity_regularizer_gradient(const VectorField& v);

// data = l2_distance(f2, W_exp(v) f1)^2, total = data + lambda * reg.
RegObjective reg_objective(const VectorField& v, const Image& f1, const Image& f2, double lambda, int exp_steps = 64);

// Gradient under the small-deformation surrogate d(W f1)/dv ~ -grad(W f1):
// 2 (f2 - W f1) grad(W f1) * pixel_area + lambda * d reg / dv.
VectorField reg_gradient(const VectorField& v, const Image& f1, const Image& f2, double lambda, int exp_steps = 64);

double default_lambda(const Image& f1, const Image& f2);

// Coarse-to-fine descent on reg_objective, deforming f1 (template) onto f2
// (target).
RegResult register_images(const Image& f1, const Image& f2, const RegConfig& cfg);

}  // namespace gpr
