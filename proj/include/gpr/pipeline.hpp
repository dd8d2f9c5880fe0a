#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpr/recon.hpp"
#include "gpr/registration.hpp"
#include "gpr/rng.hpp"

namespace gpr {

struct GateSet {
  ProjGeometry geometry;
  std::vector<Sinogram> sinograms;  // g_0 ... g_N
  double time_factor = 1.0;

  int n_motion() const { return static_cast<int>(sinograms.size()) - 1; }
  void validate() const;
};

struct PipelineConfig {
  int n_init = 6;
  int n_inner = 42;  // 0 skips the MMLEM stage
  int n_outer = 1;
  RegConfig reg;
  // Gaussian pre-filter (pixels) of the registration inputs; 0 disables it.
  double registration_prefilter_px = 0.0;
  RngSeed seed;

  void validate() const;
};

struct OuterIteration {
  std::vector<RegResult> registrations;  // psi_1 ... psi_N
  std::vector<bool> downgraded;          // stalled registration replaced by identity
  ReconState mmlem;
};

struct PipelineResult {
  Image f0;
  std::vector<Image> gate_images;  // f_0 ... f_N after the last outer iteration
  std::vector<Diffeo> psi;         // psi_1 ... psi_N of the last outer iteration
  std::vector<Diffeo> phi;         // phi_1 ... phi_N, phi_i = psi_i o phi_{i-1}
  std::vector<ReconState> init;    // per-gate ML-EM initialization
  std::vector<OuterIteration> outer;
  // Reconstructions are in count units: gate data Poisson(A(t f)) yields
  // estimates of t f, and PSNR is measured against t x truth.
  // PSNR curve of gate 0 over all iterations: n_init ML-EM rows followed by
  // the MMLEM rows of every outer iteration (NaN without a ground truth).
  std::vector<TraceRow> trace;
};

PipelineResult run_pipeline(const GateSet& gates, const PipelineConfig& cfg,
                            const std::optional<Image>& truth = std::nullopt);

// phi_i = psi_i o ... o psi_1 for each i; phi has the same length as psi.
std::vector<Diffeo> compose_gate_warps(const std::vector<Diffeo>& psi);

// ML-EM with the plain operator on the sum of the first k sinograms; the
// estimate is of k t f, and PSNR is measured at that scale.
ReconState baseline_aggregate(const GateSet& gates, int k, int n_iter, const std::optional<Image>& truth = std::nullopt);

// ML-EM on Poisson(A((N+1) t f*)): gate 0 acquired N+1 times longer without
// motion.
ReconState oracle_no_motion(const Image& truth, const ProjGeometry& geom, double t, int n_motion, int n_iter,
                            RngSeed rng);

}  // namespace gpr
