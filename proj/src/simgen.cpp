#include "anchordid/simgen.hpp"

#include <cmath>

#include "anchordid/error.hpp"
#include "anchordid/rng.hpp"

namespace anchordid {

namespace {

double effect_at(const CohortSpec& c, int rel) {
  if (c.effect.empty()) return 0.0;
  const auto k = std::min(static_cast<std::size_t>(rel - 1), c.effect.size() - 1);
  return c.effect[k];
}

DgpSpec two_cohort_design(const std::function<double(int)>& drift) {
  DgpSpec spec;
  spec.periods = 11;
  spec.never_size = 60;
  spec.noise_sd = std::sqrt(2.0);
  CohortSpec early{8, 40, std::vector<double>(11, 0.0), {3.0}};
  CohortSpec late{10, 40, std::vector<double>(11, 0.0), {3.0}};
  for (int t = 1; t <= 11; ++t) late.violation[static_cast<std::size_t>(t - 1)] = drift(t);
  spec.cohorts = {early, late};
  return spec;
}

}  // namespace

double SimulatedPanel::cohort_effect(int g, int rel) const {
  const auto& c = spec.cohorts.at(static_cast<std::size_t>(g));
  return effect_at(c, rel);
}

double SimulatedPanel::overall_att() const {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t g = 0; g < spec.cohorts.size(); ++g) {
    const auto& c = spec.cohorts[g];
    for (int s = 1; s <= spec.periods - c.adoption + 1; ++s) {
      num += c.size * effect_at(c, s);
      den += c.size;
    }
  }
  return num / den;
}

SimulatedPanel simulate(const DgpSpec& spec, std::uint64_t seed) {
  if (spec.periods < 2 || spec.never_size < 1 || !(spec.noise_sd >= 0)) {
    throw Error(ErrorCode::BadArgument, "invalid simulation design");
  }
  for (std::size_t g = 1; g < spec.cohorts.size(); ++g) {
    if (spec.cohorts[g].adoption <= spec.cohorts[g - 1].adoption) {
      throw Error(ErrorCode::BadArgument, "cohort adoption times must increase strictly");
    }
  }
  int n = spec.never_size;
  for (const auto& c : spec.cohorts) {
    if (c.size < 1 || c.adoption < 2 || c.adoption > spec.periods) {
      throw Error(ErrorCode::BadArgument, "invalid cohort in simulation design");
    }
    if (!c.violation.empty() && static_cast<int>(c.violation.size()) != spec.periods) {
      throw Error(ErrorCode::BadArgument, "violation schedule must cover every period");
    }
    n += c.size;
  }
  Rng rng(stream_key(seed, kSimulationStream));
  Vector alpha = Vector::Zero(n);
  Vector xi = Vector::Zero(spec.periods);
  if (spec.unit_effects) {
    for (int i = 0; i < n; ++i) alpha(i) = rng.normal();
  }
  if (spec.time_effects) {
    for (int t = 0; t < spec.periods; ++t) xi(t) = rng.normal();
  }

  SimulatedPanel out;
  out.spec = spec;
  out.untreated.resize(n, spec.periods);
  out.effects = Matrix::Zero(n, spec.periods);
  auto& panel = out.panel;
  panel.outcome.resize(n, spec.periods);
  int row = 0;
  auto add_unit = [&](const CohortSpec* c) {
    panel.unit_ids.push_back("u" + std::to_string(row + 1));
    panel.adoption.push_back(c ? std::optional<int>(c->adoption) : std::nullopt);
    for (int t = 1; t <= spec.periods; ++t) {
      double y0 = alpha(row) + xi(t - 1) + spec.noise_sd * rng.normal();
      if (c && !c->violation.empty()) y0 += c->violation[static_cast<std::size_t>(t - 1)];
      out.untreated(row, t - 1) = y0;
      if (c && t >= c->adoption) out.effects(row, t - 1) = effect_at(*c, t - c->adoption + 1);
      panel.outcome(row, t - 1) = y0 + out.effects(row, t - 1);
    }
    ++row;
  };
  for (const auto& c : spec.cohorts) {
    for (int k = 0; k < c.size; ++k) add_unit(&c);
  }
  for (int k = 0; k < spec.never_size; ++k) add_unit(nullptr);
  validate_panel(panel);
  return out;
}

DgpSpec example_one_spec() {
  return two_cohort_design([](int t) { return t % 2 == 1 ? 1.0 : -1.0; });
}

DgpSpec example_two_spec() {
  return two_cohort_design([](int t) { return 0.75 * t; });
}

DgpSpec toy_spec(int size5, int size7, int never_size) {
  DgpSpec spec;
  spec.periods = 8;
  spec.never_size = never_size;
  spec.cohorts = {CohortSpec{5, size5, {}, {1.0}}, CohortSpec{7, size7, {}, {1.0}}};
  return spec;
}

}  // namespace anchordid
