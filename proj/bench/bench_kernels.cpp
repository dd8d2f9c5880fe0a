// Wall time of the OpenMP kernels against the serial reference versions.
//   bench_kernels [grid=192] [repeats=5]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include <omp.h>

#include "gpr/reference.hpp"
#include "gpr/synthesis.hpp"

namespace {

double best_of(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double parallel, double serial) {
  std::printf("%-12s %10.3f ms %10.3f ms %8.2fx\n", name, 1e3 * parallel, 1e3 * serial, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 192;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;
  const gpr::GridSpec grid = gpr::GridSpec::square(n, 2.0);
  const gpr::ProjGeometry geom(grid, 108 * n / 192, 250 * n / 192);
  const gpr::Image f = gpr::derenzo_phantom(grid);
  const gpr::VectorField v = gpr::sample_grf_velocity(grid, gpr::GrfConfig::defaults_for(grid), gpr::RngSeed{1, 0});
  const gpr::Diffeo psi = gpr::exponential(v);
  const gpr::Sinogram s = gpr::forward(geom, f);

  std::printf("grid %dx%d, %d x %d sinogram, %d threads\n", n, n, geom.n_angles(), geom.n_tang(), omp_get_max_threads());
  std::printf("%-12s %13s %13s %9s\n", "kernel", "openmp", "serial", "speedup");
  row("forward", best_of(repeats, [&] { (void)gpr::forward(geom, f); }),
      best_of(repeats, [&] { (void)gpr::reference::forward_serial(geom, f); }));
  row("adjoint", best_of(repeats, [&] { (void)gpr::adjoint(geom, s); }),
      best_of(repeats, [&] { (void)gpr::reference::adjoint_serial(geom, s); }));
  row("pull_back", best_of(repeats, [&] { (void)gpr::pull_back(psi.inverse(), f); }),
      best_of(repeats, [&] { (void)gpr::reference::pull_back_serial(psi.inverse(), f); }));
  return 0;
}
