#pragma once

#include <cstdint>
#include <vector>

#include "qtl/birth_death.hpp"
#include "qtl/rate_functions.hpp"

namespace qtl {

struct SimConfig {
  double horizon = 1e5;  // simulated time per replication
  int replications = 20;
  std::uint64_t seed = 1;
  double warmup_fraction = 0.1;  // leading share of each run that is discarded
};

struct Estimate {
  double mean = 0.0;
  double half_width = 0.0;  // 95% normal interval across replications; infinite for one replication

  bool covers(double exact, double multiple = 1.0) const noexcept;
};

struct SimEstimate {
  Estimate Q;
  Estimate C;
  Estimate U;
  int replications = 0;
  std::uint64_t events = 0;
};

/// Event-driven simulation of the birth-death chain from the lowest recurrent state.
/// Each replication draws from its own stream seeded by (seed, replication index),
/// so results do not depend on the thread count.
SimEstimate simulate(const Policy& p, const SimConfig& cfg, const RateFunction& cost, const RateFunction& utility);

}  // namespace qtl
