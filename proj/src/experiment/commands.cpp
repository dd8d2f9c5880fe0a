#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gpr/experiment.hpp"
#include "gpr/io.hpp"

namespace gpr {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "gpr 1.0.0";

std::string gate_name(const char* stem, int i, const char* ext) {
  return std::string(stem) + "_" + std::to_string(i) + ext;
}

void write_diffeo(const fs::path& dir, const std::string& stem, const Diffeo& d, json& outputs) {
  io::write_vector_field(dir / (stem + "_forward.gpr"), d.forward());
  io::write_vector_field(dir / (stem + "_inverse.gpr"), d.inverse());
  outputs.push_back(stem + "_forward.gpr");
  outputs.push_back(stem + "_inverse.gpr");
}

Diffeo read_diffeo(const fs::path& dir, const std::string& stem) {
  return Diffeo(io::read_vector_field(dir / (stem + "_forward.gpr")), io::read_vector_field(dir / (stem + "_inverse.gpr")));
}

void write_image_pair(const fs::path& dir, const std::string& stem, const Image& img, json& outputs) {
  io::write_image(dir / (stem + ".gpr"), img);
  io::export_pgm16(dir / (stem + ".pgm"), img);
  outputs.push_back(stem + ".gpr");
  outputs.push_back(stem + ".pgm");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::Io, "cannot create output directory " + dir.string());
}

// Fields of the spec that determine the simulated data.
json data_fields(const ExperimentSpec& s) {
  json j = s.to_json();
  for (const char* k : {"pipeline", "baseline_iters", "oracle_iters", "sweep", "workers", "out", "preset"}) j.erase(k);
  if (s.phantom != "ellipsoid-random") j.erase("ellipsoid");
  return j;
}

Dataset load_for(const ExperimentSpec& spec) {
  Dataset d = load_dataset(spec.out_dir);
  require(data_fields(d.spec) == data_fields(spec), ErrorKind::Config,
          "spec does not match the dataset in " + spec.out_dir.string() + " (rerun generate or pass its manifest)");
  return d;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json peak_of(const std::vector<TraceRow>& trace) {
  int best = 0;
  double best_psnr = -std::numeric_limits<double>::infinity();
  for (const TraceRow& r : trace) {
    if (r.psnr > best_psnr) {
      best_psnr = r.psnr;
      best = r.iteration;
    }
  }
  return {{"iteration", best}, {"psnr", best_psnr}};
}

std::vector<TraceRow> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  require(line == "iteration,kl,psnr", ErrorKind::Io, path.string() + ": unexpected CSV header");
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    std::getline(ls, c, ',');
    try {
      rows.push_back(TraceRow{std::stoi(a), std::stod(b), std::stod(c)});
    } catch (const std::exception&) {
      fail(ErrorKind::Io, path.string() + ": malformed row '" + line + "'");
    }
  }
  return rows;
}

}  // namespace

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  require(fs::exists(manifest_path), ErrorKind::Io, "no dataset found in " + dir.string() + " (run generate first)");
  const json manifest = io::read_json(manifest_path);
  require(manifest.value("command", "") == "generate", ErrorKind::Io, manifest_path.string() + " is not a dataset manifest");
  ExperimentSpec spec = ExperimentSpec::from_json(manifest.at("spec"), ExperimentSpec::from_preset("paper"));
  Dataset d{spec, {}, {}, {}, {}, GateSet{spec.geometry(), {}, spec.t}};
  for (int i = 0; i <= spec.n_motion; ++i) {
    d.truth.push_back(io::read_image(dir / gate_name("truth", i, ".gpr")));
    d.mean.push_back(io::read_sinogram(dir / gate_name("mean", i, ".gpr")));
    d.gates.sinograms.push_back(io::read_sinogram(dir / gate_name("counts", i, ".gpr")));
    require(d.gates.sinograms.back().geometry() == d.gates.geometry, ErrorKind::Io,
            "dataset sinogram geometry does not match its manifest");
  }
  for (int i = 1; i <= spec.n_motion; ++i) {
    d.velocity.push_back(io::read_vector_field(dir / gate_name("velocity", i, ".gpr")));
    d.psi.push_back(read_diffeo(dir, "psi_" + std::to_string(i)));
  }
  return d;
}

void cmd_generate(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset d = simulate(spec);
  const fs::path& dir = spec.out_dir;
  make_dir(dir);
  json outputs = json::array();
  for (int i = 0; i <= spec.n_motion; ++i) {
    write_image_pair(dir, "truth_" + std::to_string(i), d.truth[i], outputs);
    io::write_sinogram(dir / gate_name("mean", i, ".gpr"), d.mean[i]);
    io::write_sinogram(dir / gate_name("counts", i, ".gpr"), d.gates.sinograms[i]);
    outputs.push_back(gate_name("mean", i, ".gpr"));
    outputs.push_back(gate_name("counts", i, ".gpr"));
  }
  for (int i = 1; i <= spec.n_motion; ++i) {
    io::write_vector_field(dir / gate_name("velocity", i, ".gpr"), d.velocity[i - 1]);
    outputs.push_back(gate_name("velocity", i, ".gpr"));
    write_diffeo(dir, "psi_" + std::to_string(i), d.psi[i - 1], outputs);
  }
  json counts = json::array();
  for (const Sinogram& g : d.gates.sinograms) counts.push_back(g.sum());
  io::write_json(dir / "manifest.json", {{"command", "generate"},
                                         {"version", kVersion},
                                         {"spec", spec.to_json()},
                                         {"outputs", outputs},
                                         {"total_counts", counts},
                                         {"wall_seconds", seconds_since(t0)}});
  std::cout << "generate: wrote " << outputs.size() << " artifacts to " << dir.string() << "\n";
}

void cmd_reconstruct(const ExperimentSpec& spec, const std::string& method) {
  const auto t0 = std::chrono::steady_clock::now();
  spec.validate();
  const Dataset d = load_for(spec);
  const fs::path dir = spec.out_dir / "recon" / method;
  // Images are written in activity units: the EM estimate divided by the
  // acquisition time it was reconstructed from.
  json outputs = json::array();
  json diagnostics;
  std::vector<TraceRow> trace;

  if (method == "pipeline") {
    make_dir(dir);
    const PipelineResult r = run_pipeline(d.gates, spec.pipeline, d.truth[0]);
    trace = r.trace;
    write_image_pair(dir, "f_0", (1.0 / spec.t) * r.f0, outputs);
    for (int i = 1; i <= spec.n_motion; ++i) {
      write_image_pair(dir, "f_" + std::to_string(i), (1.0 / spec.t) * r.gate_images[i], outputs);
      write_diffeo(dir, "psi_" + std::to_string(i), r.psi[i - 1], outputs);
      write_diffeo(dir, "phi_" + std::to_string(i), r.phi[i - 1], outputs);
    }
    json outer = json::array();
    for (std::size_t k = 0; k < r.outer.size(); ++k) {
      const OuterIteration& o = r.outer[k];
      json regs = json::array();
      for (std::size_t i = 0; i < o.registrations.size(); ++i) {
        const RegResult& reg = o.registrations[i];
        std::ostringstream csv;
        csv << "level,iteration,data,reg,total\n";
        for (const RegTraceRow& row : reg.trace) {
          csv << row.level << ',' << row.iteration << ',' << io::format_double(row.data) << ','
              << io::format_double(row.reg) << ',' << io::format_double(row.total) << '\n';
        }
        const std::string name = "registration_" + std::to_string(k + 1) + "_" + std::to_string(i + 1) + ".csv";
        io::write_text(dir / name, csv.str());
        outputs.push_back(name);
        regs.push_back({{"lambda", reg.lambda},
                        {"stalled", reg.stalled},
                        {"downgraded", static_cast<bool>(o.downgraded[i])},
                        {"final_total", reg.final_objective.total}});
      }
      outer.push_back({{"registrations", regs},
                       {"mmlem_iterations", o.mmlem.iterations},
                       {"clamped_bins", o.mmlem.diagnostics.clamped_bins},
                       {"kl_increases", o.mmlem.diagnostics.kl_increases}});
    }
    diagnostics["outer"] = outer;
  } else if (method == "oracle") {
    make_dir(dir);
    const ReconState r = oracle_no_motion(d.truth[0], d.gates.geometry, spec.t, spec.n_motion, spec.oracle_iters,
                                          ExperimentStreams::oracle(spec));
    trace = r.trace;
    write_image_pair(dir, "f_0", (1.0 / ((spec.n_motion + 1) * spec.t)) * r.iterate, outputs);
    diagnostics = {{"clamped_bins", r.diagnostics.clamped_bins}, {"kl_increases", r.diagnostics.kl_increases}};
  } else if (method.rfind("baseline-", 0) == 0) {
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(method.substr(9), &used);
      require(used == method.size() - 9, ErrorKind::Config, "bad baseline method '" + method + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::Config, "bad baseline method '" + method + "' (expected baseline-<k>)");
    }
    require(k >= 1 && k <= spec.n_motion + 1, ErrorKind::Config, "baseline-k needs 1 <= k <= N+1");
    make_dir(dir);
    const ReconState r = baseline_aggregate(d.gates, k, spec.baseline_iters, d.truth[0]);
    trace = r.trace;
    write_image_pair(dir, "f_0", (1.0 / (k * spec.t)) * r.iterate, outputs);
    diagnostics = {{"clamped_bins", r.diagnostics.clamped_bins}, {"kl_increases", r.diagnostics.kl_increases}};
  } else {
    fail(ErrorKind::Config, "unknown method '" + method + "' (expected pipeline, baseline-<k> or oracle)");
  }

  io::write_text(dir / "trace.csv", trace_csv(trace));
  outputs.push_back("trace.csv");
  const json peak = peak_of(trace);
  io::write_json(dir / "manifest.json", {{"command", "reconstruct"},
                                         {"method", method},
                                         {"version", kVersion},
                                         {"spec", spec.to_json()},
                                         {"outputs", outputs},
                                         {"peak", peak},
                                         {"diagnostics", diagnostics},
                                         {"wall_seconds", seconds_since(t0)}});
  std::cout << "reconstruct " << method << ": peak PSNR " << io::format_double(peak["psnr"].get<double>())
            << " dB at iteration " << peak["iteration"].get<int>() << "\n";
}

void cmd_sweep(const ExperimentSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  spec.validate();
  require(!spec.sweep_em.empty() && !spec.sweep_diff.empty(), ErrorKind::Config, "sweep grids must be non-empty");
  const Dataset d = load_for(spec);
  const SweepResult r = run_sweep(d, spec.sweep_em, spec.sweep_diff, spec.pipeline);
  const fs::path dir = spec.out_dir / "sweep";
  make_dir(dir);
  std::ostringstream csv;
  csv << "em_iter,diff_iter,psnr\n";
  for (const SweepPoint& p : r.points) csv << p.em_iter << ',' << p.diff_iter << ',' << io::format_double(p.psnr) << '\n';
  io::write_text(dir / "sweep.csv", csv.str());
  const json best = {{"em_iter", r.best.em_iter}, {"diff_iter", r.best.diff_iter}, {"psnr", r.best.psnr}};
  io::write_json(dir / "manifest.json", {{"command", "sweep"},
                                         {"version", kVersion},
                                         {"spec", spec.to_json()},
                                         {"outputs", {"sweep.csv"}},
                                         {"argmax", best},
                                         {"wall_seconds", seconds_since(t0)}});
  std::cout << "sweep: best PSNR " << io::format_double(r.best.psnr) << " dB at em_iter=" << r.best.em_iter
            << " diff_iter=" << r.best.diff_iter << "\n";
}

json cmd_report(const ExperimentSpec& spec) {
  const fs::path recon = spec.out_dir / "recon";
  json report = {{"command", "report"}, {"version", kVersion}, {"spec", spec.to_json()}};
  json peaks = json::object();
  if (fs::is_directory(recon)) {
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(recon)) {
      if (entry.is_directory() && fs::exists(entry.path() / "trace.csv")) dirs.push_back(entry.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const fs::path& p : dirs) peaks[p.filename().string()] = peak_of(read_trace_csv(p / "trace.csv"));
  }
  const fs::path sweep = spec.out_dir / "sweep" / "manifest.json";
  require(!peaks.empty() || fs::exists(sweep), ErrorKind::Io,
          "nothing to report in " + spec.out_dir.string() + " (run reconstruct or sweep first)");
  report["peaks"] = peaks;

  auto peak = [&](const std::string& m) { return peaks[m]["psnr"].get<double>(); };
  const std::string all = "baseline-" + std::to_string(spec.n_motion + 1);
  json derived = json::object();
  if (peaks.contains("baseline-1") && peaks.contains("oracle")) {
    derived["oracle_headroom_db"] = peak("oracle") - peak("baseline-1");
  }
  if (peaks.contains("baseline-1") && peaks.contains("pipeline")) {
    derived["pipeline_gain_db"] = peak("pipeline") - peak("baseline-1");
    if (derived.contains("oracle_headroom_db") && derived["oracle_headroom_db"].get<double>() > 0.0) {
      derived["fraction_of_headroom"] = derived["pipeline_gain_db"].get<double>() / derived["oracle_headroom_db"].get<double>();
    }
  }
  if (peaks.contains(all) && peaks.contains("baseline-1") && peaks.contains("pipeline") && peaks.contains("oracle")) {
    derived["ordering_holds"] = peak(all) < peak("baseline-1") && peak("baseline-1") < peak("pipeline") &&
                                peak("pipeline") <= peak("oracle");
  }
  report["derived"] = derived;
  if (fs::exists(sweep)) report["sweep_argmax"] = io::read_json(sweep).at("argmax");
  io::write_json(spec.out_dir / "report.json", report);

  for (const auto& [name, p] : peaks.items()) {
    std::cout << name << ": peak " << io::format_double(p["psnr"].get<double>()) << " dB at iteration "
              << p["iteration"].get<int>() << "\n";
  }
  for (const auto& [name, v] : derived.items()) std::cout << name << ": " << v.dump() << "\n";
  if (report.contains("sweep_argmax")) std::cout << "sweep argmax: " << report["sweep_argmax"].dump() << "\n";
  return report;
}

}  // namespace gpr
