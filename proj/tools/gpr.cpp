// gpr: generate gated data, reconstruct, sweep and report.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <omp.h>

#include <CLI11.hpp>

#include "gpr/experiment.hpp"
#include "gpr/io.hpp"

namespace {

struct Flags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> workers;
  std::string phantom;
  std::optional<int> grid;
  std::optional<int> n_angles;
  std::optional<int> n_tang;
  std::optional<double> t;
  std::optional<int> n_motion;
  std::optional<int> n_init;
  std::optional<int> n_inner;
  std::optional<int> n_outer;
  std::vector<int> em_iter;
  std::vector<int> diff_iter;
  std::string method;
};

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "spec JSON, or a manifest written by a previous run");
  cmd->add_option("--preset", f.preset, "paper (192x192) or desk (96x96)")->check(CLI::IsMember({"paper", "desk"}));
  cmd->add_option("--seed", f.seed, "experiment seed");
  cmd->add_option("--out", f.out, "dataset / output directory");
  cmd->add_option("--workers", f.workers, "OpenMP threads (0 = default)");
  cmd->add_option("--phantom", f.phantom, "derenzo or ellipsoid-random");
  cmd->add_option("--grid", f.grid, "pixels per side");
  cmd->add_option("--n-angles", f.n_angles, "projection views");
  cmd->add_option("--n-tang", f.n_tang, "tangential bins");
  cmd->add_option("--t", f.t, "acquisition time per gate");
  cmd->add_option("--N", f.n_motion, "number of moving gates (N+1 gates in total)");
  cmd->add_option("--n-init", f.n_init, "ML-EM iterations per gate before registration");
  cmd->add_option("--n-inner", f.n_inner, "MMLEM iterations per outer loop");
  cmd->add_option("--n-outer", f.n_outer, "outer loops");
}

// Preset < config file < individual flags.
gpr::ExperimentSpec resolve(const Flags& f, std::string& method) {
  using nlohmann::json;
  gpr::ExperimentSpec spec = gpr::ExperimentSpec::from_preset(f.preset.empty() ? "paper" : f.preset);
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    gpr::require(static_cast<bool>(in), gpr::ErrorKind::Io, "cannot read config " + f.config);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      gpr::fail(gpr::ErrorKind::Config, f.config + ": " + e.what());
    }
    if (j.contains("spec")) {
      if (method.empty() && j.contains("method")) method = j["method"].get<std::string>();
      j = j["spec"];
    }
    if (!f.preset.empty()) j.erase("preset");
    spec = gpr::ExperimentSpec::from_json(j, spec);
  }
  json over = json::object();
  if (f.seed) over["seed"] = *f.seed;
  if (!f.out.empty()) over["out"] = f.out;
  if (f.workers) over["workers"] = *f.workers;
  if (!f.phantom.empty()) over["phantom"] = f.phantom;
  if (f.grid) over["grid_size"] = *f.grid;
  if (f.n_angles) over["n_angles"] = *f.n_angles;
  if (f.n_tang) over["n_tang"] = *f.n_tang;
  if (f.t) over["t"] = *f.t;
  if (f.n_motion) over["N"] = *f.n_motion;
  if (f.n_init) over["pipeline"]["n_init"] = *f.n_init;
  if (f.n_inner) over["pipeline"]["n_inner"] = *f.n_inner;
  if (f.n_outer) over["pipeline"]["n_outer"] = *f.n_outer;
  if (!f.em_iter.empty()) over["sweep"]["em_iter"] = f.em_iter;
  if (!f.diff_iter.empty()) over["sweep"]["diff_iter"] = f.diff_iter;
  spec = gpr::ExperimentSpec::from_json(over, spec);
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated PET reconstruction with diffeomorphic motion compensation"};
  app.require_subcommand(1);
  Flags f;
  CLI::App* gen = app.add_subcommand("generate", "simulate a gated dataset");
  CLI::App* rec = app.add_subcommand("reconstruct", "reconstruct gate 0 from a dataset");
  CLI::App* sweep = app.add_subcommand("sweep", "PSNR over an (em_iter, diff_iter) grid");
  CLI::App* report = app.add_subcommand("report", "summarize reconstructions and sweep of a dataset");
  for (CLI::App* c : {gen, rec, sweep, report}) add_common(c, f);
  rec->add_option("--method", f.method, "pipeline | baseline-<k> | oracle");
  sweep->add_option("--em-iter", f.em_iter, "em_iter grid")->delimiter(',');
  sweep->add_option("--diff-iter", f.diff_iter, "diff_iter grid")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::string method = f.method;
    const gpr::ExperimentSpec spec = resolve(f, method);
    if (spec.workers > 0) omp_set_num_threads(spec.workers);
    if (gen->parsed()) {
      gpr::cmd_generate(spec);
    } else if (rec->parsed()) {
      gpr::require(!method.empty(), gpr::ErrorKind::Config, "reconstruct needs --method");
      gpr::cmd_reconstruct(spec, method);
    } else if (sweep->parsed()) {
      gpr::cmd_sweep(spec);
    } else {
      gpr::cmd_report(spec);
    }
  } catch (const gpr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return gpr::exit_code_for(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
