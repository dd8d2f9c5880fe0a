#include "gpr/pipeline.hpp"

#include "gpr/synthesis.hpp"

namespace gpr {

namespace {

// EM on counts drawn from Poisson(A(tau f)) estimates tau f, so PSNR curves
// compare against the truth at the same scale.
std::optional<Image> scaled(const std::optional<Image>& truth, double tau) {
  if (!truth) return std::nullopt;
  return tau * *truth;
}

}  // namespace

void GateSet::validate() const {
  require(!sinograms.empty(), ErrorKind::Config, "gate set must contain at least one gate");
  require(time_factor > 0.0, ErrorKind::Config, "gate set time factor must be > 0");
  for (const Sinogram& s : sinograms) {
    require(s.geometry() == geometry, ErrorKind::Shape, "gate sinograms must share the gate set geometry");
  }
}

void PipelineConfig::validate() const {
  require(n_init >= 1, ErrorKind::Config, "pipeline: n_init must be >= 1");
  require(n_inner >= 0, ErrorKind::Config, "pipeline: n_inner must be >= 0");
  require(n_outer >= 1, ErrorKind::Config, "pipeline: n_outer must be >= 1");
  require(registration_prefilter_px >= 0.0, ErrorKind::Config, "pipeline: prefilter width must be >= 0");
  reg.validate();
}

std::vector<Diffeo> compose_gate_warps(const std::vector<Diffeo>& psi) {
  std::vector<Diffeo> phi;
  phi.reserve(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) {
    phi.push_back(i == 0 ? psi[0] : compose(psi[i], phi.back()));
  }
  return phi;
}

PipelineResult run_pipeline(const GateSet& gates, const PipelineConfig& cfg, const std::optional<Image>& truth) {
  gates.validate();
  cfg.validate();
  const Projector projector(gates.geometry);
  const GridSpec& grid = gates.geometry.grid();
  const int n_gates = static_cast<int>(gates.sinograms.size());
  const int n_motion = n_gates - 1;
  const std::optional<Image> reference = scaled(truth, gates.time_factor);

  PipelineResult result{Image(grid), {}, {}, {}, {}, {}, {}};
  result.init.resize(n_gates, ReconState{Image(grid), 0, {}, {}});

#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_gates; ++i) {
    EmOptions opts;
    opts.n_iter = cfg.n_init;
    if (i == 0) opts.truth = reference;
    result.init[i] = mlem(projector, gates.sinograms[i], opts);
  }
  std::vector<Image> f;
  for (const ReconState& s : result.init) f.push_back(s.iterate);
  result.trace = result.init[0].trace;

  for (int k = 0; k < cfg.n_outer; ++k) {
    OuterIteration outer{std::vector<RegResult>(n_motion, RegResult{VectorField(grid), Diffeo::identity(grid), {}, {}, false, 0.0}),
                         std::vector<bool>(n_motion, false),
                         ReconState{Image(grid), 0, {}, {}}};

#pragma omp parallel for schedule(static)
    for (int i = 1; i <= n_motion; ++i) {
      const Image& tmpl = f[i - 1];
      const Image& target = f[i];
      if (cfg.registration_prefilter_px > 0.0) {
        outer.registrations[i - 1] = register_images(gaussian_blur(tmpl, cfg.registration_prefilter_px),
                                                     gaussian_blur(target, cfg.registration_prefilter_px), cfg.reg);
      } else {
        outer.registrations[i - 1] = register_images(tmpl, target, cfg.reg);
      }
    }

    std::vector<Diffeo> psi;
    for (int i = 0; i < n_motion; ++i) {
      const bool stalled = outer.registrations[i].stalled;
      outer.downgraded[i] = stalled;
      psi.push_back(stalled ? Diffeo::identity(grid) : outer.registrations[i].diffeo);
    }
    std::vector<Diffeo> phi = compose_gate_warps(psi);

    std::vector<CompoundOperator> ops{CompoundOperator(projector)};
    for (const Diffeo& w : phi) ops.emplace_back(projector, w);

    if (cfg.n_inner > 0) {
      EmOptions opts;
      opts.n_iter = cfg.n_inner;
      opts.f0 = f[0];
      opts.truth = reference;
      opts.kl_slack = 1e-3;
      outer.mmlem = mmlem(ops, gates.sinograms, opts);
      f[0] = outer.mmlem.iterate;
      const int offset = result.trace.empty() ? 0 : result.trace.back().iteration;
      for (TraceRow row : outer.mmlem.trace) {
        row.iteration += offset;
        result.trace.push_back(row);
      }
    } else {
      outer.mmlem.iterate = f[0];
    }
    for (int i = 1; i <= n_motion; ++i) f[i] = warp_intensity(phi[i - 1], f[0]);

    result.psi = std::move(psi);
    result.phi = std::move(phi);
    result.outer.push_back(std::move(outer));
  }

  result.f0 = f[0];
  result.gate_images = std::move(f);
  return result;
}

ReconState baseline_aggregate(const GateSet& gates, int k, int n_iter, const std::optional<Image>& truth) {
  gates.validate();
  require(k >= 1 && k <= static_cast<int>(gates.sinograms.size()), ErrorKind::Config,
          "baseline_aggregate: k must be in [1, N+1]");
  Sinogram sum = gates.sinograms[0];
  for (int i = 1; i < k; ++i) sum += gates.sinograms[i];
  EmOptions opts;
  opts.n_iter = n_iter;
  opts.truth = scaled(truth, k * gates.time_factor);
  return mlem(gates.geometry, sum, opts);
}

ReconState oracle_no_motion(const Image& truth, const ProjGeometry& geom, double t, int n_motion, int n_iter,
                            RngSeed rng) {
  require(t > 0.0 && n_motion >= 0, ErrorKind::Config, "oracle_no_motion: t must be > 0 and N >= 0");
  const Projector projector(geom);
  const double tau = static_cast<double>(n_motion + 1) * t;
  const Sinogram mean = tau * projector.forward(truth);
  EmOptions opts;
  opts.n_iter = n_iter;
  opts.truth = tau * truth;
  return mlem(projector, poisson_counts(mean, rng), opts);
}

}  // namespace gpr
