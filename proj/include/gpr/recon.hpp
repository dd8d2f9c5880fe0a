#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "gpr/diffeo.hpp"
#include "gpr/projector.hpp"

namespace gpr {

// Kullback-Leibler data fit sum_j (v_j - u_j + u_j log(u_j / v_j)) with
// 0 log 0 = 0. Returns +infinity if some u_j > 0 meets v_j = 0.
double kl_divergence(std::span<const double> u, std::span<const double> v);
double kl_divergence(const Sinogram& u, const Sinogram& v);

// A_i = A W_phi. Without a warp this is the plain projector. The adjoint uses
// W_phi^T = warp_mass(phi^-1), with the Jacobian determinant of phi
// precomputed once.
class CompoundOperator {
 public:
  explicit CompoundOperator(Projector projector);
  CompoundOperator(Projector projector, Diffeo warp);

  const ProjGeometry& geometry() const { return projector_.geometry(); }
  const Projector& projector() const { return projector_; }
  bool has_warp() const { return warp_ != nullptr; }
  const Diffeo* warp() const { return warp_ ? &warp_->diffeo : nullptr; }

  Sinogram forward(const Image& f) const;
  Image adjoint(const Sinogram& s) const;
  // A_i^T 1 = W_phi^T (A^T 1), from the projector's cached sensitivity.
  Image sensitivity() const;

 private:
  struct Warp {
    Diffeo diffeo;
    Image forward_jacobian;
  };
  Projector projector_;
  std::shared_ptr<const Warp> warp_;
};

Sinogram compound_forward(const CompoundOperator& op, const Image& f);
Image compound_adjoint(const CompoundOperator& op, const Sinogram& s);

struct TraceRow {
  int iteration = 0;
  double kl = 0.0;
  double psnr = 0.0;  // NaN without a ground truth
};

struct ReconDiagnostics {
  // Bins with positive data but zero model mean, clamped to epsilon.
  long long clamped_bins = 0;
  // Iterations where the data fit increased by more than the slack.
  int kl_increases = 0;
  // Sensitivity (sum_i A_i^T 1) computations performed by the run.
  int sensitivity_evaluations = 0;
  int frozen_pixels = 0;
};

struct ReconState {
  Image iterate;
  int iterations = 0;
  std::vector<TraceRow> trace;  // one row per completed iteration
  ReconDiagnostics diagnostics;
};

struct EmOptions {
  int n_iter = 1;
  std::optional<Image> f0;     // default: ones on the sensitivity support
  std::optional<Image> truth;  // enables the PSNR column
  bool track_kl = true;        // computes the data fit of each iterate
  // Relative per-iteration slack before a data-fit increase is recorded.
  double kl_slack = 1e-10;
  // Called with (iteration, iterate) after every iteration.
  std::function<void(int, const Image&)> on_iterate;
};

// f <- f / (A^T 1) * A^T (g / A f).
ReconState mlem(const Projector& projector, const Sinogram& g, const EmOptions& opts);
ReconState mlem(const ProjGeometry& geom, const Sinogram& g, const EmOptions& opts);

// f <- f / (sum_i A_i^T 1) * sum_i A_i^T (g_i / A_i f).
ReconState mmlem(std::span<const CompoundOperator> ops, std::span<const Sinogram> data, const EmOptions& opts);

}  // namespace gpr
