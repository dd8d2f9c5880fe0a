#pragma once

#include <optional>

#include "gpr/grid.hpp"

namespace gpr {

// Sampled diffeomorphism psi with psi(x) = x + forward(x) and
// psi^-1(x) = x + inverse(x). Displacements are in physical length units.
class Diffeo {
 public:
  struct Provenance {
    VectorField velocity;
    int squarings;
  };

  static Diffeo identity(const GridSpec& grid);
  // Constant displacement psi(x) = x + (dx, dy).
  static Diffeo translation(const GridSpec& grid, double dx, double dy);

  Diffeo(VectorField forward, VectorField inverse, std::optional<Provenance> provenance = std::nullopt);

  const GridSpec& grid() const { return forward_.grid(); }
  const VectorField& forward() const { return forward_; }
  const VectorField& inverse() const { return inverse_; }
  const std::optional<Provenance>& provenance() const { return provenance_; }

  // psi^-1 as a Diffeo (tables swapped).
  Diffeo inverted() const;

 private:
  VectorField forward_;
  VectorField inverse_;
  std::optional<Provenance> provenance_;
};

struct RoundTripDefect {
  double mean = 0.0;  // mean |psi(psi^-1(x)) - x| over interior pixels, pixel units
  double max = 0.0;
};

// Displacement table of a(b(x)) - x where a(x) = x + outer(x), b(x) = x + inner(x):
// inner(x) + outer(x + inner(x)), outer sampled with clamping.
VectorField compose_displacements(const VectorField& outer, const VectorField& inner);

// exp(v) by scaling and squaring. The number of squarings is the larger of
// ceil(log2(min_steps)) and the count needed to bring the initial step below
// half a pixel. The inverse table is exp(-v) by the same scheme.
Diffeo exponential(const VectorField& v, int min_steps = 64);

// One direction only: displacement table of exp(v).
VectorField exponential_displacement(const VectorField& v, int min_steps = 64, int* squarings = nullptr);

Diffeo compose(const Diffeo& outer, const Diffeo& inner);

// Pixels at least `margin` pixels away from every edge.
RoundTripDefect round_trip_defect(const Diffeo& psi, int margin = 2);

// out(x) = f(x + disp(x)) with zero fill outside the grid.
Image pull_back(const VectorField& disp, const Image& f);

// W_psi f (x) = f(psi^-1(x)).
Image warp_intensity(const Diffeo& psi, const Image& f);

enum class Direction { Forward, Inverse };

// det D(x + disp(x)) by central differences, one-sided at the edges.
Image jacobian_determinant(const VectorField& disp);
Image jacobian_determinant(const Diffeo& psi, Direction which);

// |D psi^-1(x)| f(psi^-1(x)).
Image warp_mass(const Diffeo& psi, const Image& f);

// warp_mass(psi^-1, f) = |D psi(x)| f(psi(x)); adjoint of warp_intensity in
// the continuum.
Image warp_adjoint_intensity(const Diffeo& psi, const Image& f);

}  // namespace gpr
