// SPDX-License-Identifier: Apache-2.0
//
// Test-matrix families: random BLR, single-layer potential on the unit
// circle, and an exponential covariance kernel on a 3D grid.

#pragma once

#include <cstdint>
#include <string>

#include "blrqr/blr.hpp"
#include "blrqr/lowrank.hpp"

namespace blrqr {

enum class Family { RandomBlr, SlpCircle, ExpKernel3d };
enum class Admissibility { Weak, Strong, Auto };

struct GeneratorSpec {
  Family family = Family::RandomBlr;
  Index m = 0;
  Index n = 0;
  Index b = 0;
  double epsilon = 1e-10;
  Index rank = 1;            // RandomBlr
  std::uint64_t seed = 1;    // RandomBlr
  double ell = 0.1;          // ExpKernel3d correlation length
  Admissibility admissibility = Admissibility::Weak;
  double eta = 0.4;          // Strong / Auto
  double fallback_fraction = 0.5;  // Auto
};

struct GeneratedMatrix {
  BlrMatrix blr;
  Matrix dense;
};

GeneratedMatrix gen_random_blr(const GeneratorSpec& spec);
GeneratedMatrix gen_slp_circle(const GeneratorSpec& spec);
GeneratedMatrix gen_exp_kernel_3d(const GeneratorSpec& spec);
GeneratedMatrix generate(const GeneratorSpec& spec);

/// Dense SLP Galerkin matrix on n straight panels of the unit circle.
Matrix slp_circle_dense(Index n);

/// Grid points of the unit cube, n = g^3, in Morton order.
Matrix exp_kernel_points(Index n);

/// Divisor of n closest to 2 sqrt(n); ties go to the smaller one.
Index default_block_size(Index n);

std::string family_name(Family f);
Family parse_family(const std::string& s);

}  // namespace blrqr
