#pragma once

#include <cstdint>
#include <vector>

#include "alanet/grad_check.hpp"

namespace alanet {

// Finite-difference verification of every differentiable operation and every
// assembled module, on small fixed-seed inputs (at most 8 channels and 8x8
// spatial). Module parameters are nudged off their initialization first;
// several modules start on degenerate manifolds where whole gradient paths
// are structurally zero. The end-to-end network check runs at 10x the base
// tolerance; everything else runs at `tolerance`.
std::vector<GradCheckReport> run_grad_check_suite(double tolerance = 1e-4,
                                                  std::uint64_t seed = 0);

} // namespace alanet
