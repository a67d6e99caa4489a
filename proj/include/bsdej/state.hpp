#pragma once

#include <span>

namespace bsdej {

/// Markov summary of the driving noise at one grid node: current Brownian
/// value per dimension and cumulative jump count per mark. Generators and
/// terminal functionals see the path only through this view.
struct StateView {
  double t = 0.0;
  std::span<const double> brownian;
  std::span<const int> jump_counts;
};

}  // namespace bsdej
