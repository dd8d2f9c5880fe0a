#pragma once

#include "gpr/diffeo.hpp"
#include "gpr/projector.hpp"

// Straightforward single-threaded versions of the hot kernels. They are kept
// as test oracles and as the baseline of bench_kernels; nothing in the
// library calls them.
namespace gpr::reference {

// Ray-by-ray Joseph projection written directly from the ray equation.
Sinogram forward_serial(const ProjGeometry& geom, const Image& f);

// Textbook transpose: for every view and bin, scatter the bin value along the
// ray with the forward interpolation weights.
Image adjoint_serial(const ProjGeometry& geom, const Sinogram& s);

// f(x + disp(x)) evaluated with an explicit four-corner loop in physical
// coordinates, zero outside the grid.
Image pull_back_serial(const VectorField& disp, const Image& f);

}  // namespace gpr::reference
