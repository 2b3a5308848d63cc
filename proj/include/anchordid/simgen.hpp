#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "anchordid/panel.hpp"

namespace anchordid {

struct CohortSpec {
  int adoption = 0;
  int size = 0;
  // Added to the untreated outcome of every member at each period 1..T.
  std::vector<double> violation;
  // Treatment effect at relative period s >= 1 (index s - 1); the last entry
  // repeats when the vector is shorter than needed, empty means zero.
  std::vector<double> effect;
};

struct DgpSpec {
  int periods = 0;
  std::vector<CohortSpec> cohorts;
  int never_size = 0;
  double noise_sd = 1.0;
  bool unit_effects = true;   // alpha_i ~ N(0, 1)
  bool time_effects = true;   // xi_t ~ N(0, 1)
};

struct SimulatedPanel {
  PanelData panel;
  Matrix untreated;    // Y(0) for every unit and period
  Matrix effects;      // Y(1) - Y(0); zero before adoption
  DgpSpec spec;

  // Mean true effect of cohort index g at relative period s >= 1.
  [[nodiscard]] double cohort_effect(int g, int rel) const;
  // Average of the true cell effects weighted by cohort size.
  [[nodiscard]] double overall_att() const;
};

[[nodiscard]] SimulatedPanel simulate(const DgpSpec& spec, std::uint64_t seed);

// T = 11, cohorts adopting at 8 and 10 (40 units each), 60 never treated,
// effect 3, noise variance 2; the later cohort's untreated path oscillates.
[[nodiscard]] DgpSpec example_one_spec();
// Same design with a linear 0.75 t drift in the later cohort.
[[nodiscard]] DgpSpec example_two_spec();
// T = 8 with cohorts adopting at 5 and 7.
[[nodiscard]] DgpSpec toy_spec(int size5, int size7, int never_size);

}  // namespace anchordid
