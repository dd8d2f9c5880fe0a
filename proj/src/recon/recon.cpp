#include "gpr/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gpr {

double kl_divergence(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), ErrorKind::Shape, "kl_divergence: length mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    require(u[j] >= 0.0 && v[j] >= 0.0, ErrorKind::InvalidInput, "kl_divergence: entries must be >= 0");
    if (u[j] == 0.0) {
      total += v[j];
    } else if (v[j] == 0.0) {
      return std::numeric_limits<double>::infinity();
    } else {
      total += v[j] - u[j] + u[j] * std::log(u[j] / v[j]);
    }
  }
  return total;
}

double kl_divergence(const Sinogram& u, const Sinogram& v) {
  require(u.geometry() == v.geometry(), ErrorKind::Shape, "kl_divergence: geometry mismatch");
  return kl_divergence(u.values(), v.values());
}

CompoundOperator::CompoundOperator(Projector projector) : projector_(std::move(projector)) {}

CompoundOperator::CompoundOperator(Projector projector, Diffeo warp) : projector_(std::move(projector)) {
  require_same_grid(warp.grid(), projector_.geometry().grid(), "compound operator");
  Image jac = jacobian_determinant(warp.forward());
  warp_ = std::make_shared<const Warp>(Warp{std::move(warp), std::move(jac)});
}

Sinogram CompoundOperator::forward(const Image& f) const {
  if (!warp_) return projector_.forward(f);
  return projector_.forward(warp_intensity(warp_->diffeo, f));
}

Image CompoundOperator::adjoint(const Sinogram& s) const {
  if (!warp_) return projector_.adjoint(s);
  return multiply(pull_back(warp_->diffeo.forward(), projector_.adjoint(s)), warp_->forward_jacobian);
}

Image CompoundOperator::sensitivity() const {
  if (!warp_) return projector_.sensitivity();
  return multiply(pull_back(warp_->diffeo.forward(), projector_.sensitivity()), warp_->forward_jacobian);
}

Sinogram compound_forward(const CompoundOperator& op, const Image& f) { return op.forward(f); }
Image compound_adjoint(const CompoundOperator& op, const Sinogram& s) { return op.adjoint(s); }

namespace {

constexpr double kSensitivityFloor = 1e-8;
constexpr double kClampFraction = 1e-12;

// g / model with 0/0 = 0; bins with g > 0 and model = 0 use model = eps.
Sinogram data_ratio(const Sinogram& g, const Sinogram& model, long long& clamped) {
  Sinogram ratio(model.geometry());
  const double eps = kClampFraction * model.max();
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (model[j] > 0.0) {
      ratio[j] = g[j] / model[j];
    } else if (g[j] > 0.0) {
      ratio[j] = eps > 0.0 ? g[j] / eps : 0.0;
      ++clamped;
    }
  }
  return ratio;
}

void validate_data(const Sinogram& g) {
  for (double v : g.values()) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidInput, "EM: data must be finite and >= 0");
  }
}

ReconState run_em(std::span<const CompoundOperator> ops, std::span<const Sinogram> data, const EmOptions& opts) {
  require(!ops.empty() && ops.size() == data.size(), ErrorKind::Config,
          "EM: operator and data lists must be non-empty and of equal length");
  require(opts.n_iter >= 0, ErrorKind::Config, "EM: n_iter must be >= 0");
  const GridSpec& grid = ops.front().geometry().grid();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    require(ops[i].geometry() == data[i].geometry(), ErrorKind::Shape, "EM: data geometry does not match operator");
    require_same_grid(ops[i].geometry().grid(), grid, "EM operators");
    validate_data(data[i]);
  }
  if (opts.truth) require_same_grid(opts.truth->grid(), grid, "EM ground truth");

  ReconState state{Image(grid, 1.0), 0, {}, {}};

  // Compound sensitivity, computed once for the whole run.
  Image sens = ops[0].sensitivity();
  for (std::size_t i = 1; i < ops.size(); ++i) sens += ops[i].sensitivity();
  state.diagnostics.sensitivity_evaluations = static_cast<int>(ops.size());
  const double floor = kSensitivityFloor * sens.max();
  std::vector<char> frozen(grid.size(), 0);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (!(sens[p] > floor)) {
      frozen[p] = 1;
      ++state.diagnostics.frozen_pixels;
    }
  }

  if (opts.f0) {
    require_same_grid(opts.f0->grid(), grid, "EM initial guess");
    for (double v : opts.f0->values()) {
      require(std::isfinite(v) && v >= 0.0, ErrorKind::InvalidInput, "EM: initial guess must be finite and >= 0");
    }
    state.iterate = *opts.f0;
  }
  Image& f = state.iterate;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    if (frozen[p]) f[p] = 0.0;
  }

  const auto n_ops = static_cast<int>(ops.size());
  std::vector<double> gate_kl(ops.size(), 0.0);
  std::vector<long long> gate_clamped(ops.size(), 0);
  std::vector<std::optional<Image>> gate_bp(ops.size());
  double previous_kl = std::numeric_limits<double>::quiet_NaN();

  auto record_kl = [&](double kl) {
    if (std::isfinite(previous_kl) && kl - previous_kl > opts.kl_slack * std::max(1.0, std::abs(previous_kl))) {
      ++state.diagnostics.kl_increases;
    }
    previous_kl = kl;
  };

  for (int n = 1; n <= opts.n_iter; ++n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n_ops; ++i) {
      const Sinogram model = ops[i].forward(f);
      if (opts.track_kl) gate_kl[i] = kl_divergence(data[i], model);
      gate_bp[i] = ops[i].adjoint(data_ratio(data[i], model, gate_clamped[i]));
    }
    if (opts.track_kl) {
      double kl = 0.0;
      for (double v : gate_kl) kl += v;
      // Data fit of the previous iterate, completing the previous trace row.
      if (n > 1) state.trace.back().kl = kl;
      record_kl(kl);
    }
    Image& backproj = *gate_bp[0];
    for (int i = 1; i < n_ops; ++i) backproj += *gate_bp[i];
    for (std::size_t p = 0; p < grid.size(); ++p) {
      f[p] = frozen[p] ? 0.0 : f[p] / sens[p] * backproj[p];
    }
    state.iterations = n;
    TraceRow row;
    row.iteration = n;
    row.kl = std::numeric_limits<double>::quiet_NaN();
    row.psnr = opts.truth ? psnr(*opts.truth, f) : std::numeric_limits<double>::quiet_NaN();
    state.trace.push_back(row);
    if (opts.on_iterate) opts.on_iterate(n, f);
  }

  if (opts.track_kl && opts.n_iter > 0) {
    double kl = 0.0;
    for (int i = 0; i < n_ops; ++i) kl += kl_divergence(data[i], ops[i].forward(f));
    state.trace.back().kl = kl;
    record_kl(kl);
  }
  for (long long c : gate_clamped) state.diagnostics.clamped_bins += c;
  return state;
}

}  // namespace

ReconState mlem(const Projector& projector, const Sinogram& g, const EmOptions& opts) {
  const CompoundOperator op(projector);
  return run_em(std::span<const CompoundOperator>(&op, 1), std::span<const Sinogram>(&g, 1), opts);
}

ReconState mlem(const ProjGeometry& geom, const Sinogram& g, const EmOptions& opts) {
  return mlem(Projector(geom), g, opts);
}

ReconState mmlem(std::span<const CompoundOperator> ops, std::span<const Sinogram> data, const EmOptions& opts) {
  return run_em(ops, data, opts);
}

}  // namespace gpr
