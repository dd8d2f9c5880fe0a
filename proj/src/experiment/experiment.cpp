#include "gpr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "gpr/io.hpp"

namespace gpr {

using nlohmann::json;

namespace {

// Side length of the field of view, [-1, 1]^2. Counts scale linearly with it
// (line integrals are in length units), and at 2 the paper preset's gate-0
// ML-EM curve peaks near 30 iterations.
constexpr double kFieldOfView = 2.0;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), ErrorKind::Config, where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    require(allowed.count(key) > 0, ErrorKind::Config, where + ": unknown key '" + key + "'");
  }
}

template <class T>
void take(const json& j, const char* key, T& dst) {
  if (!j.contains(key)) return;
  try {
    dst = j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("config key '") + key + "': " + e.what());
  }
}

json reg_to_json(const RegConfig& r) {
  return {{"lambda", r.lambda ? json(*r.lambda) : json(nullptr)},
          {"levels", r.levels},
          {"iters_per_level", r.iters_per_level},
          {"initial_step_px", r.initial_step_px},
          {"max_backtracks", r.max_backtracks},
          {"smoothing", r.smoothing},
          {"gradient_smoothing_px", r.gradient_smoothing_px},
          {"convergence_tol", r.convergence_tol},
          {"exp_steps", r.exp_steps}};
}

void reg_from_json(const json& j, RegConfig& r) {
  check_keys(j, {"lambda", "levels", "iters_per_level", "initial_step_px", "max_backtracks", "smoothing",
                 "gradient_smoothing_px", "convergence_tol", "exp_steps"},
             "pipeline.registration");
  if (j.contains("lambda")) {
    if (j["lambda"].is_null()) {
      r.lambda.reset();
    } else {
      double l = 0.0;
      take(j, "lambda", l);
      r.lambda = l;
    }
  }
  take(j, "levels", r.levels);
  take(j, "iters_per_level", r.iters_per_level);
  take(j, "initial_step_px", r.initial_step_px);
  take(j, "max_backtracks", r.max_backtracks);
  take(j, "smoothing", r.smoothing);
  take(j, "gradient_smoothing_px", r.gradient_smoothing_px);
  take(j, "convergence_tol", r.convergence_tol);
  take(j, "exp_steps", r.exp_steps);
}

}  // namespace

ExperimentSpec ExperimentSpec::from_preset(const std::string& name) {
  ExperimentSpec s;
  s.preset = name;
  s.extent = kFieldOfView;
  if (name == "paper") {
    s.grid_size = 192;
    s.n_angles = 108;
    s.n_tang = 250;
    s.pipeline.reg.gradient_smoothing_px = 12.0;
  } else if (name == "desk") {
    s.grid_size = 96;
    s.n_angles = 60;
    s.n_tang = 130;
    // Rods are 1-3 px here; registration needs a less noisy start.
    s.pipeline.n_init = 30;
    s.pipeline.reg.gradient_smoothing_px = 6.0;
  } else {
    fail(ErrorKind::Config, "unknown preset '" + name + "' (expected paper or desk)");
  }
  s.motion = GrfConfig::defaults_for(s.grid());
  s.ellipsoid = EllipsoidSceneConfig::defaults_for(s.grid());
  s.sweep_em = {2, 4, 6, 8, 10, 12, 16, 20, 29};
  s.sweep_diff = {0, 5, 10, 15, 20, 25, 30, 36, 42, 50, 60, 80};
  s.out_dir = "out-" + name;
  return s;
}

void ExperimentSpec::validate() const {
  require(phantom == "derenzo" || phantom == "ellipsoid-random", ErrorKind::Config,
          "phantom must be derenzo or ellipsoid-random");
  require(grid_size >= 8, ErrorKind::Config, "grid_size must be >= 8");
  require(extent > 0.0 && std::isfinite(extent), ErrorKind::Config, "extent must be positive");
  require(n_angles >= 1 && n_tang >= 1, ErrorKind::Config, "n_angles and n_tang must be >= 1");
  require(t > 0.0 && std::isfinite(t), ErrorKind::Config, "t must be > 0");
  require(n_motion >= 0, ErrorKind::Config, "N must be >= 0");
  require(baseline_iters >= 1 && oracle_iters >= 1, ErrorKind::Config, "iteration counts must be >= 1");
  require(workers >= 0, ErrorKind::Config, "workers must be >= 0");
  for (int e : sweep_em) require(e >= 1, ErrorKind::Config, "sweep em_iter values must be >= 1");
  for (int d : sweep_diff) require(d >= 0, ErrorKind::Config, "sweep diff_iter values must be >= 0");
  motion.validate();
  ellipsoid.validate();
  pipeline.validate();
  (void)geometry();
}

json ExperimentSpec::to_json() const {
  return {{"preset", preset},
          {"phantom", phantom},
          {"grid_size", grid_size},
          {"extent", extent},
          {"n_angles", n_angles},
          {"n_tang", n_tang},
          {"t", t},
          {"N", n_motion},
          {"motion", {{"kernel_scale", motion.kernel_scale}, {"amplitude", motion.amplitude}, {"mask_margin", motion.mask_margin}}},
          {"ellipsoid",
           {{"mean_count", ellipsoid.mean_count},
            {"center_region", ellipsoid.center_region},
            {"axis_mean", ellipsoid.axis_mean},
            {"intensity_min", ellipsoid.intensity_min},
            {"intensity_max", ellipsoid.intensity_max},
            {"mask_margin", ellipsoid.mask_margin}}},
          {"pipeline",
           {{"n_init", pipeline.n_init},
            {"n_inner", pipeline.n_inner},
            {"n_outer", pipeline.n_outer},
            {"registration_prefilter_px", pipeline.registration_prefilter_px},
            {"registration", reg_to_json(pipeline.reg)}}},
          {"baseline_iters", baseline_iters},
          {"oracle_iters", oracle_iters},
          {"sweep", {{"em_iter", sweep_em}, {"diff_iter", sweep_diff}}},
          {"seed", seed},
          {"workers", workers},
          {"out", out_dir.string()}};
}

ExperimentSpec ExperimentSpec::from_json(const json& j, const ExperimentSpec& base) {
  check_keys(j, {"preset", "phantom", "grid_size", "extent", "n_angles", "n_tang", "t", "N", "motion", "ellipsoid",
                 "pipeline", "baseline_iters", "oracle_iters", "sweep", "seed", "workers", "out"},
             "spec");
  ExperimentSpec s = base;
  if (j.contains("preset")) {
    std::string name;
    take(j, "preset", name);
    s = from_preset(name);
  }
  take(j, "phantom", s.phantom);
  // A new grid re-derives motion and scene parameters that were still at the
  // old grid's defaults; values set explicitly earlier survive.
  const bool regrid = j.contains("grid_size") || j.contains("extent");
  const bool old_valid = s.grid_size >= 1 && s.extent > 0.0;
  const bool motion_default = old_valid && s.motion == GrfConfig::defaults_for(s.grid());
  const bool scene_default = old_valid && s.ellipsoid == EllipsoidSceneConfig::defaults_for(s.grid());
  take(j, "grid_size", s.grid_size);
  take(j, "extent", s.extent);
  if (regrid && s.grid_size >= 1 && s.extent > 0.0) {
    if (motion_default) s.motion = GrfConfig::defaults_for(s.grid());
    if (scene_default) s.ellipsoid = EllipsoidSceneConfig::defaults_for(s.grid());
  }
  take(j, "n_angles", s.n_angles);
  take(j, "n_tang", s.n_tang);
  take(j, "t", s.t);
  take(j, "N", s.n_motion);
  if (j.contains("motion")) {
    const json& m = j["motion"];
    check_keys(m, {"kernel_scale", "amplitude", "mask_margin"}, "motion");
    take(m, "kernel_scale", s.motion.kernel_scale);
    take(m, "amplitude", s.motion.amplitude);
    take(m, "mask_margin", s.motion.mask_margin);
  }
  if (j.contains("ellipsoid")) {
    const json& e = j["ellipsoid"];
    check_keys(e, {"mean_count", "center_region", "axis_mean", "intensity_min", "intensity_max", "mask_margin"},
               "ellipsoid");
    take(e, "mean_count", s.ellipsoid.mean_count);
    take(e, "center_region", s.ellipsoid.center_region);
    take(e, "axis_mean", s.ellipsoid.axis_mean);
    take(e, "intensity_min", s.ellipsoid.intensity_min);
    take(e, "intensity_max", s.ellipsoid.intensity_max);
    take(e, "mask_margin", s.ellipsoid.mask_margin);
  }
  if (j.contains("pipeline")) {
    const json& p = j["pipeline"];
    check_keys(p, {"n_init", "n_inner", "n_outer", "registration_prefilter_px", "registration"}, "pipeline");
    take(p, "n_init", s.pipeline.n_init);
    take(p, "n_inner", s.pipeline.n_inner);
    take(p, "n_outer", s.pipeline.n_outer);
    take(p, "registration_prefilter_px", s.pipeline.registration_prefilter_px);
    if (p.contains("registration")) reg_from_json(p["registration"], s.pipeline.reg);
  }
  take(j, "baseline_iters", s.baseline_iters);
  take(j, "oracle_iters", s.oracle_iters);
  if (j.contains("sweep")) {
    const json& w = j["sweep"];
    check_keys(w, {"em_iter", "diff_iter"}, "sweep");
    take(w, "em_iter", s.sweep_em);
    take(w, "diff_iter", s.sweep_diff);
  }
  take(j, "seed", s.seed);
  take(j, "workers", s.workers);
  if (j.contains("out")) {
    std::string out;
    take(j, "out", out);
    s.out_dir = out;
  }
  s.pipeline.seed = RngSeed{s.seed, 0};
  return s;
}

Dataset simulate(const ExperimentSpec& spec) {
  spec.validate();
  const GridSpec grid = spec.grid();
  Dataset d{spec, {}, {}, {}, {}, GateSet{spec.geometry(), {}, spec.t}};
  if (spec.phantom == "derenzo") {
    d.truth.push_back(derenzo_phantom(grid));
  } else {
    d.truth.push_back(random_ellipsoid_image(grid, spec.ellipsoid, ExperimentStreams::phantom(spec)));
  }
  for (int i = 1; i <= spec.n_motion; ++i) {
    d.velocity.push_back(sample_grf_velocity(grid, spec.motion, ExperimentStreams::motion(spec, i)));
    d.psi.push_back(exponential(d.velocity.back(), spec.pipeline.reg.exp_steps));
    d.truth.push_back(warp_intensity(d.psi.back(), d.truth.back()));
  }
  const Projector projector(d.gates.geometry);
  for (int i = 0; i <= spec.n_motion; ++i) {
    d.mean.push_back(spec.t * projector.forward(d.truth[i]));
    d.gates.sinograms.push_back(poisson_counts(d.mean.back(), ExperimentStreams::noise(spec, i)));
  }
  return d;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << "iteration,kl,psnr\n";
  for (const TraceRow& r : trace) {
    os << r.iteration << ',' << io::format_double(r.kl) << ',' << io::format_double(r.psnr) << '\n';
  }
  return os.str();
}

SweepResult run_sweep(const Dataset& data, const std::vector<int>& em_iters, const std::vector<int>& diff_iters,
                      const PipelineConfig& base) {
  require(!em_iters.empty() && !diff_iters.empty(), ErrorKind::Config, "sweep grids must be non-empty");
  base.validate();
  const GateSet& gates = data.gates;
  gates.validate();
  // Count-unit truth, the scale EM estimates on gate data.
  const Image truth = gates.time_factor * data.truth.at(0);
  const GridSpec& grid = gates.geometry.grid();
  const int n_gates = static_cast<int>(gates.sinograms.size());
  const int max_em = *std::max_element(em_iters.begin(), em_iters.end());
  const int max_diff = *std::max_element(diff_iters.begin(), diff_iters.end());
  const Projector projector(gates.geometry);
  (void)projector.sensitivity();

  // snapshots[e][i]: gate i after em_iters[e] ML-EM iterations.
  std::vector<std::vector<Image>> snapshots(em_iters.size(), std::vector<Image>(n_gates, Image(grid)));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n_gates; ++i) {
    EmOptions opts;
    opts.n_iter = max_em;
    opts.track_kl = false;
    opts.on_iterate = [&](int it, const Image& f) {
      for (std::size_t e = 0; e < em_iters.size(); ++e) {
        if (em_iters[e] == it) snapshots[e][i] = f;
      }
    };
    mlem(projector, gates.sinograms[i], opts);
  }

  std::vector<std::vector<double>> table(em_iters.size(), std::vector<double>(diff_iters.size(), 0.0));
  const int n_em = static_cast<int>(em_iters.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (int e = 0; e < n_em; ++e) {
    const std::vector<Image>& f = snapshots[e];
    std::vector<double> curve{psnr(truth, f[0])};
    if (max_diff > 0) {
      std::vector<Diffeo> psi;
      for (int i = 1; i < n_gates; ++i) {
        const RegResult r =
            base.registration_prefilter_px > 0.0
                ? register_images(gaussian_blur(f[i - 1], base.registration_prefilter_px),
                                  gaussian_blur(f[i], base.registration_prefilter_px), base.reg)
                : register_images(f[i - 1], f[i], base.reg);
        psi.push_back(r.stalled ? Diffeo::identity(grid) : r.diffeo);
      }
      std::vector<CompoundOperator> ops{CompoundOperator(projector)};
      for (const Diffeo& w : compose_gate_warps(psi)) ops.emplace_back(projector, w);
      EmOptions opts;
      opts.n_iter = max_diff;
      opts.f0 = f[0];
      opts.truth = truth;
      opts.track_kl = false;
      const ReconState st = mmlem(ops, gates.sinograms, opts);
      for (const TraceRow& r : st.trace) curve.push_back(r.psnr);
    }
    for (std::size_t d = 0; d < diff_iters.size(); ++d) table[e][d] = curve[diff_iters[d]];
  }

  SweepResult out;
  out.best = SweepPoint{em_iters[0], diff_iters[0], -std::numeric_limits<double>::infinity()};
  for (std::size_t e = 0; e < em_iters.size(); ++e) {
    for (std::size_t d = 0; d < diff_iters.size(); ++d) {
      const SweepPoint p{em_iters[e], diff_iters[d], table[e][d]};
      out.points.push_back(p);
      if (p.psnr > out.best.psnr) out.best = p;
    }
  }
  return out;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
      return 3;
    case ErrorKind::Magnitude:
    case ErrorKind::UndefinedMetric:
      return 4;
    case ErrorKind::InvalidInput:
    case ErrorKind::Shape:
    case ErrorKind::Config:
      return 2;
  }
  return 4;
}

}  // namespace gpr
