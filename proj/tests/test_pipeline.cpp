#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gpr/pipeline.hpp"
#include "gpr/synthesis.hpp"

using namespace gpr;

namespace {

const GridSpec kGrid = GridSpec::square(64, 2.0);
const ProjGeometry kGeom(kGrid, 40, 91);

bool bit_equal(const Image& a, const Image& b) { return std::equal(a.values().begin(), a.values().end(), b.values().begin()); }

double peak(const std::vector<TraceRow>& trace) {
  double best = -1e300;
  for (const TraceRow& r : trace) best = std::max(best, r.psnr);
  return best;
}

GateSet static_gates(const Image& truth, double t, int n_gates, std::uint64_t seed) {
  const Sinogram mean = t * forward(kGeom, truth);
  GateSet gs{kGeom, {}, t};
  for (int i = 0; i < n_gates; ++i) gs.sinograms.push_back(poisson_counts(mean, RngSeed{seed, 0}.substream(i)));
  return gs;
}

GateSet moving_gates(const Image& truth, double t, std::uint64_t seed, std::vector<Image>* frames = nullptr) {
  GateSet gs{kGeom, {}, t};
  Image f = truth;
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      VectorField v = sample_grf_velocity(kGrid, GrfConfig::defaults_for(kGrid), RngSeed{seed, 50}.substream(i));
      f = warp_intensity(exponential(2.0 * v), f);
    }
    if (frames) frames->push_back(f);
    gs.sinograms.push_back(poisson_counts(t * forward(kGeom, f), RngSeed{seed, 0}.substream(i)));
  }
  return gs;
}

PipelineConfig small_config() {
  PipelineConfig cfg;
  cfg.n_init = 6;
  cfg.n_inner = 20;
  cfg.reg.iters_per_level = 30;
  return cfg;
}

}  // namespace

TEST_CASE("single gate reduces to ml-em") {
  const Image truth = derenzo_phantom(kGrid);
  const GateSet gs = static_gates(truth, 200.0, 1, 1);
  PipelineConfig cfg = small_config();
  cfg.n_outer = 2;
  const PipelineResult r = run_pipeline(gs, cfg, truth);
  EmOptions opts;
  opts.n_iter = cfg.n_init + cfg.n_inner * cfg.n_outer;
  opts.truth = 200.0 * truth;
  const ReconState direct = mlem(kGeom, gs.sinograms[0], opts);
  CHECK(bit_equal(r.f0, direct.iterate));
  CHECK(r.psi.empty());
  REQUIRE(r.trace.size() == direct.trace.size());
  for (std::size_t n = 0; n < r.trace.size(); ++n) {
    CHECK(r.trace[n].iteration == direct.trace[n].iteration);
    CHECK(r.trace[n].psnr == direct.trace[n].psnr);
  }
}

TEST_CASE("structure and determinism") {
  const Image truth = derenzo_phantom(kGrid);
  const GateSet gs = moving_gates(truth, 200.0, 2);
  const PipelineConfig cfg = small_config();
  const PipelineResult a = run_pipeline(gs, cfg, truth);
  REQUIRE(a.psi.size() == 3);
  REQUIRE(a.phi.size() == 3);
  REQUIRE(a.gate_images.size() == 4);
  CHECK(bit_equal(a.gate_images[0], a.f0));
  for (int i = 1; i <= 3; ++i) CHECK(bit_equal(a.gate_images[i], warp_intensity(a.phi[i - 1], a.f0)));
  // phi_i = psi_i o phi_{i-1}
  const Diffeo phi2 = compose(a.psi[1], a.psi[0]);
  CHECK(std::equal(phi2.forward().vx().values().begin(), phi2.forward().vx().values().end(),
                   a.phi[1].forward().vx().values().begin()));
  for (const Image& f : a.gate_images)
    for (double v : f.values()) CHECK(v >= 0.0);
  CHECK(a.trace.size() == static_cast<std::size_t>(cfg.n_init + cfg.n_inner));
  CHECK(a.init.size() == 4);
  CHECK(a.outer.size() == 1);

  const PipelineResult b = run_pipeline(gs, cfg, truth);
  CHECK(bit_equal(a.f0, b.f0));
  for (std::size_t n = 0; n < a.trace.size(); ++n) CHECK(a.trace[n].psnr == b.trace[n].psnr);
}

TEST_CASE("static phantom gains from all gates") {
  const Image truth = derenzo_phantom(kGrid);
  const GateSet gs = static_gates(truth, 30.0, 4, 3);
  PipelineConfig cfg = small_config();
  cfg.n_inner = 60;
  const PipelineResult r = run_pipeline(gs, cfg, truth);
  const ReconState single = baseline_aggregate(gs, 1, 80, truth);
  CHECK(peak(r.trace) >= peak(single.trace));
}

TEST_CASE("baselines") {
  const Image truth = derenzo_phantom(kGrid);
  const GateSet gs = moving_gates(truth, 100.0, 4);
  EmOptions opts;
  opts.n_iter = 15;
  opts.truth = 100.0 * truth;
  const ReconState direct = mlem(kGeom, gs.sinograms[0], opts);
  const ReconState k1 = baseline_aggregate(gs, 1, 15, truth);
  CHECK(bit_equal(direct.iterate, k1.iterate));
  for (int k : {0, 5}) {
    try {
      (void)baseline_aggregate(gs, k, 3);
      FAIL("expected a configuration error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }
  // aggregating moving gates blurs
  CHECK(peak(baseline_aggregate(gs, 4, 60, truth).trace) < peak(baseline_aggregate(gs, 1, 60, truth).trace));
}

TEST_CASE("no-motion oracle") {
  const Image truth = derenzo_phantom(kGrid);
  const double t = 20.0;
  const ReconState oracle = oracle_no_motion(truth, kGeom, t, 3, 40, RngSeed{5, 0});
  const ReconState single = baseline_aggregate(static_gates(truth, t, 1, 6), 1, 40, truth);
  CHECK(peak(oracle.trace) > peak(single.trace));

  // counts follow (N+1) t A f
  const double expected = 4.0 * t * forward(kGeom, truth).sum();
  const ReconState first = oracle_no_motion(truth, kGeom, t, 3, 1, RngSeed{5, 0});
  const double counts = forward(kGeom, first.iterate).sum();  // ML-EM preserves total counts
  CHECK(std::abs(counts - expected) <= 5.0 * std::sqrt(expected));

  double previous = -1e300;
  for (double tt : {1.0, 10.0, 100.0, 1000.0, 10000.0}) {
    const double p = oracle_no_motion(truth, kGeom, tt, 3, 20, RngSeed{7, 0}).trace.back().psnr;
    CHECK(p > previous);
    previous = p;
  }
}

TEST_CASE("configuration checks") {
  PipelineConfig cfg;
  cfg.n_init = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  GateSet empty{kGeom, {}, 1.0};
  CHECK_THROWS_AS(run_pipeline(empty, PipelineConfig{}), Error);
  GateSet bad_t{kGeom, {Sinogram(kGeom)}, 0.0};
  CHECK_THROWS_AS(run_pipeline(bad_t, PipelineConfig{}), Error);
}
