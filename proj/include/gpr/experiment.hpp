#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpr/pipeline.hpp"
#include "gpr/synthesis.hpp"

namespace gpr {

// Everything needed to reproduce one gated-motion experiment. Pixel-sized
// motion and phantom parameters are derived from the grid unless overridden.
struct ExperimentSpec {
  std::string preset = "paper";
  std::string phantom = "derenzo";  // derenzo | ellipsoid-random
  int grid_size = 192;
  double extent = 2.0;
  int n_angles = 108;
  int n_tang = 250;
  double t = 60.0;
  int n_motion = 3;  // N; the experiment has N+1 gates
  GrfConfig motion;
  EllipsoidSceneConfig ellipsoid;
  PipelineConfig pipeline;
  int baseline_iters = 60;
  int oracle_iters = 60;
  std::vector<int> sweep_em;
  std::vector<int> sweep_diff;
  std::uint64_t seed = 1;
  int workers = 0;  // 0 keeps the OpenMP default
  std::filesystem::path out_dir = "out";

  static ExperimentSpec from_preset(const std::string& name);
  GridSpec grid() const { return GridSpec::square(grid_size, extent); }
  ProjGeometry geometry() const { return ProjGeometry(grid(), n_angles, n_tang); }
  void validate() const;

  nlohmann::json to_json() const;
  // Fields absent from `j` keep the values of the preset named in j["preset"]
  // (or `base` when no preset is named).
  static ExperimentSpec from_json(const nlohmann::json& j, const ExperimentSpec& base);
};

// Named random streams of an experiment.
struct ExperimentStreams {
  static RngSeed root(const ExperimentSpec& s) { return RngSeed{s.seed, 0}; }
  static RngSeed phantom(const ExperimentSpec& s) { return root(s).substream(1); }
  static RngSeed motion(const ExperimentSpec& s, int gate) { return root(s).substream(100 + gate); }
  static RngSeed noise(const ExperimentSpec& s, int gate) { return root(s).substream(200 + gate); }
  static RngSeed oracle(const ExperimentSpec& s) { return root(s).substream(300); }
};

struct Dataset {
  ExperimentSpec spec;
  std::vector<Image> truth;          // f_0 ... f_N
  std::vector<VectorField> velocity; // v_1 ... v_N
  std::vector<Diffeo> psi;           // exp(v_1) ... exp(v_N)
  std::vector<Sinogram> mean;        // t A f_i
  GateSet gates;                     // Poisson counts
};

// Builds the dataset in memory (no I/O).
Dataset simulate(const ExperimentSpec& spec);

// Loads a dataset previously written by cmd_generate.
Dataset load_dataset(const std::filesystem::path& dir);

// Curve of PSNR (and KL) per iteration, one CSV row per iteration.
std::string trace_csv(const std::vector<TraceRow>& trace);

struct SweepPoint {
  int em_iter;
  int diff_iter;
  double psnr;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  SweepPoint best;
};

// (em_iter, diff_iter) grid of single-outer-iteration pipelines. ML-EM
// initializations are shared across the grid; each em_iter runs registration
// and one MMLEM chain whose PSNR is read at every requested diff_iter.
SweepResult run_sweep(const Dataset& data, const std::vector<int>& em_iters, const std::vector<int>& diff_iters,
                      const PipelineConfig& base);

// Command-line surface. Each writes its artifacts plus a manifest.json that
// is sufficient to rerun it (pass the manifest back via --config).
void cmd_generate(const ExperimentSpec& spec);
// method: pipeline | baseline-<k> | oracle
void cmd_reconstruct(const ExperimentSpec& spec, const std::string& method);
void cmd_sweep(const ExperimentSpec& spec);
// Peak PSNR of every reconstruction under <out>/recon, the derived
// headroom / gain numbers and the sweep argmax; written to report.json.
nlohmann::json cmd_report(const ExperimentSpec& spec);

int exit_code_for(ErrorKind kind);

}  // namespace gpr
