#include "anchordid/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anchordid/error.hpp"
#include "anchordid/format.hpp"
#include "anchordid/io.hpp"
#include "anchordid/simgen.hpp"
#include "anchordid/vcov.hpp"
#include "anchordid/version.hpp"

namespace anchordid {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

std::vector<std::string> split_colon(const std::string& text) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream s(text);
  while (std::getline(s, part, ':')) parts.push_back(part);
  return parts;
}

double to_double(const std::string& text) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::BadArgument, "not a number: '" + text + "'");
  }
  return v;
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json intervals_json(const IntervalSet& s) {
  json a = json::array();
  for (const auto& i : s.intervals) a.push_back(json::array({number(i.lower), number(i.upper)}));
  return a;
}

json grid_json(const GridSpec& g) {
  return json{{"lower", number(g.lower)},
              {"upper", number(g.upper)},
              {"points", g.points},
              {"step", number(g.points > 1 ? (g.upper - g.lower) / (g.points - 1) : 0.0)}};
}

json header(const RunConfig& cfg) {
  return json{{"version", kVersion}, {"config_hash", config_hash(cfg)}, {"command", cfg.command}};
}

void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.out.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + cfg.out);
  f << text;
  if (!f) throw Error(ErrorCode::Io, "failed writing " + cfg.out);
}

struct Loaded {
  PanelData panel;
  CohortLayout layout;
};

Loaded load(const RunConfig& cfg) {
  if (cfg.input.empty()) throw Error(ErrorCode::BadArgument, "an input panel is required");
  auto panel = load_panel(cfg.input);
  validate_panel(panel);
  auto layout = build_layout(panel);
  return {std::move(panel), std::move(layout)};
}

CoefficientSet estimate_with_vcov(const RunConfig& cfg, const Loaded& data, std::ostream& err) {
  if (!cfg.vcov.empty()) {
    auto est = estimate(data.panel, data.layout, cfg.estimator);
    est.vcov = load_vcov(cfg.vcov, est);
    return est;
  }
  BootstrapSpec spec;
  spec.replicates = cfg.bootstrap;
  spec.seed = cfg.seed;
  spec.estimator = cfg.estimator;
  spec.workers = cfg.workers;
  auto boot = bootstrap_vcov(data.panel, spec);
  for (const auto& w : boot.warnings) err << "warning: " << w << '\n';
  return std::move(boot.coefficients);
}

std::optional<int> target_period(const std::string& target) {
  if (target == "att") return std::nullopt;
  if (target.rfind("period:", 0) == 0) {
    const double s = to_double(target.substr(7));
    if (s != std::floor(s)) throw Error(ErrorCode::BadArgument, "period target must be an integer");
    return static_cast<int>(s);
  }
  throw Error(ErrorCode::BadArgument, "unknown target '" + target + "'");
}

ConfidenceOptions confidence_options(const RunConfig& cfg) {
  ConfidenceOptions o;
  o.hybrid.alpha = cfg.alpha;
  o.hybrid.kappa = cfg.kappa;
  o.hybrid.lf_draws = cfg.lf_draws;
  o.hybrid.seed = cfg.seed;
  o.grid = cfg.grid;
  o.workers = cfg.workers;
  return o;
}

struct Analysis {
  AnchoredModel model;
  AggregatedSeries series;
};

Analysis analyse(const RunConfig& cfg, const Loaded& data, std::ostream& err) {
  auto coefficients = estimate_with_vcov(cfg, data, err);
  auto series = aggregate(coefficients, data.layout);
  return {make_model(data.layout, std::move(coefficients)), std::move(series)};
}

struct Record {
  Framework framework;
  SetResult result;
  double runtime_ms = 0.0;
};

SetResult compute_set(const Analysis& a, Framework f, FamilyKind kind, double param, std::optional<int> period,
                      const ConfidenceOptions& options) {
  if (f == Framework::Aggregated) return aggregated_confidence_set(a.series, kind, param, period, options, true);
  const auto target = period ? period_att(a.model.layout, a.model.coefficients.index, *period)
                             : overall_att(a.model.layout, a.model.coefficients.index);
  return sensitivity_set(a.model, kind, param, target, options, true);
}

// Sweeps the parameter on one grid. Without an explicit grid the default grid
// of the largest parameter is shared, so sets stay comparable across values.
std::vector<Record> sweep(const RunConfig& cfg, const Analysis& a, Framework f, std::optional<int> period) {
  auto options = confidence_options(cfg);
  std::vector<Record> out(cfg.params.size());
  auto one = [&](std::size_t k) {
    const auto start = Clock::now();
    out[k].framework = f;
    out[k].result = compute_set(a, f, cfg.family, cfg.params[k], period, options);
    out[k].runtime_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };
  const std::size_t last = cfg.params.size() - 1;
  one(last);
  if (!options.grid) options.grid = out[last].result.grid;
  for (std::size_t k = 0; k < last; ++k) one(k);
  return out;
}

std::vector<Framework> frameworks(Framework f) {
  if (f == Framework::Both) return {Framework::CohortAnchored, Framework::Aggregated};
  return {f};
}

json record_json(const RunConfig& cfg, const Record& r) {
  const auto& s = r.result;
  json j{{"framework", framework_name(r.framework)},
         {"target", s.target},
         {"family", family_name(s.family)},
         {"parameter", number(s.parameter)},
         {"alpha", number(s.alpha)},
         {"grid", grid_json(s.grid)},
         {"intervals", intervals_json(s.confidence)},
         {"plugin_bounds", intervals_json(s.plugin)}};
  if (s.corrected) {
    j["corrected_point"] = json{{"value", number(s.corrected->value)}, {"se", number(s.corrected->se)}};
  }
  j["member_count"] = s.member_count;
  j["distinct_members"] = s.distinct_members;
  j["touches_grid_edge"] = s.confidence.touches_grid_edge;
  if (cfg.timing) j["runtime_ms"] = r.runtime_ms;
  return j;
}

std::vector<int> post_periods(const AggregatedSeries& series) {
  std::vector<int> rels;
  for (int s : series.rel_periods) {
    if (s >= 1) rels.push_back(s);
  }
  return rels;
}

std::string run_validate(const RunConfig& cfg) {
  const auto data = load(cfg);
  json j = header(cfg);
  j["status"] = "ok";
  j["units"] = data.panel.units();
  j["periods"] = data.panel.periods();
  j["never_treated"] = data.layout.never_treated().size();
  json cohorts = json::array();
  for (std::size_t g = 0; g < data.layout.cohorts().size(); ++g) {
    const auto& c = data.layout.cohorts()[g];
    cohorts.push_back(json{{"adoption", c.adoption},
                           {"size", c.members.size()},
                           {"adjustment_weight", number(data.layout.adjustment_weight(static_cast<int>(g)))}});
  }
  j["cohorts"] = cohorts;
  return j.dump(2) + "\n";
}

std::string run_estimate(const RunConfig& cfg) {
  const auto data = load(cfg);
  std::ostringstream s;
  write_coefficients_csv(s, estimate(data.panel, data.layout, cfg.estimator), config_hash(cfg));
  return s.str();
}

std::string run_vcov(const RunConfig& cfg, std::ostream& err) {
  const auto data = load(cfg);
  std::ostringstream s;
  write_vcov_csv(s, estimate_with_vcov(cfg, data, err), config_hash(cfg));
  return s.str();
}

std::string run_biasmap(const RunConfig& cfg) {
  const auto data = load(cfg);
  const CellIndex index(data.layout, cfg.estimator);
  const auto map = build_bias_map<double>(data.layout, index);
  std::vector<std::string> labels;
  for (std::size_t j = 0; j < index.size(); ++j) labels.push_back(index.label(j));
  std::ostringstream s;
  write_matrix_csv(s, labels, cfg.inverse ? *map.w_inverse : map.w, config_hash(cfg));
  return s.str();
}

std::string run_family(const RunConfig& cfg) {
  const auto data = load(cfg);
  const CellIndex index(data.layout, cfg.estimator);
  json j = header(cfg);
  j["estimator"] = estimator_name(cfg.estimator);
  json records = json::array();
  for (double p : cfg.params) {
    const auto fam = build_family(index, cfg.family, p);
    json labels = json::array();
    for (const auto& m : fam.members) labels.push_back(m.label);
    records.push_back(json{{"family", family_name(fam.kind)},
                           {"parameter", number(p)},
                           {"member_count", fam.members.size()},
                           {"members", labels}});
  }
  j["records"] = records;
  return j.dump(2) + "\n";
}

std::string run_sets(const RunConfig& cfg, std::ostream& err) {
  const auto data = load(cfg);
  const auto period = target_period(cfg.target);
  const auto a = analyse(cfg, data, err);
  json j = header(cfg);
  j["estimator"] = estimator_name(cfg.estimator);
  json records = json::array();
  for (auto f : frameworks(cfg.framework)) {
    for (const auto& r : sweep(cfg, a, f, period)) {
      if (r.result.confidence.touches_grid_edge) {
        err << "warning: " << framework_name(f) << " set at parameter " << format_double(r.result.parameter)
            << " reaches the grid boundary\n";
      }
      records.push_back(record_json(cfg, r));
    }
  }
  j["records"] = records;
  return j.dump(2) + "\n";
}

std::string run_byperiod(const RunConfig& cfg, std::ostream& err) {
  const auto data = load(cfg);
  const auto a = analyse(cfg, data, err);
  json j = header(cfg);
  j["estimator"] = estimator_name(cfg.estimator);
  json records = json::array();
  for (auto f : frameworks(cfg.framework)) {
    for (int s : post_periods(a.series)) {
      for (const auto& r : sweep(cfg, a, f, s)) {
        json rec = record_json(cfg, r);
        rec["rel_period"] = s;
        records.push_back(rec);
      }
    }
  }
  j["records"] = records;
  return j.dump(2) + "\n";
}

std::string run_compare(const RunConfig& cfg, std::ostream& err) {
  const auto data = load(cfg);
  const auto period = target_period(cfg.target);
  const auto a = analyse(cfg, data, err);
  std::ostringstream s;
  s << provenance_comment(config_hash(cfg)) << '\n';
  s << "parameter,framework,target,family,bound_type,lower,upper,pieces,touches_grid_edge\n";
  auto row = [&](const SetResult& r, Framework f, const char* kind, const IntervalSet& set) {
    s << format_double(r.parameter) << ',' << framework_name(f) << ',' << r.target << ',' << family_name(r.family)
      << ',' << kind << ',';
    if (set.empty()) {
      s << ",,0";
    } else {
      s << format_double(set.lower()) << ',' << format_double(set.upper()) << ',' << set.intervals.size();
    }
    s << ',' << (set.touches_grid_edge ? "true" : "false") << '\n';
  };
  for (auto f : frameworks(Framework::Both)) {
    for (const auto& r : sweep(cfg, a, f, period)) {
      row(r.result, f, "plugin", r.result.plugin);
      row(r.result, f, "confidence", r.result.confidence);
    }
  }
  return s.str();
}

std::string sidecar_path(const std::string& out) {
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + ".truth.json";
  return out.substr(0, dot) + ".truth.json";
}

std::string run_simulate(const RunConfig& cfg) {
  if (cfg.out.empty()) throw Error(ErrorCode::BadArgument, "simulate needs --out for the panel and its sidecar");
  DgpSpec spec;
  if (cfg.example == "1") {
    spec = example_one_spec();
  } else if (cfg.example == "2") {
    spec = example_two_spec();
  } else if (cfg.example == "toy") {
    spec = toy_spec(10, 10, 10);
  } else {
    throw Error(ErrorCode::BadArgument, "unknown example '" + cfg.example + "'");
  }
  if (cfg.noise_is_sd) spec.noise_sd = 2.0;
  const auto sim = simulate(spec, cfg.seed);

  json truth = header(cfg);
  truth["example"] = cfg.example;
  truth["seed"] = cfg.seed;
  truth["noise_sd"] = number(spec.noise_sd);
  truth["true_att"] = number(sim.overall_att());
  json cohorts = json::array();
  for (std::size_t g = 0; g < spec.cohorts.size(); ++g) {
    const auto& c = spec.cohorts[g];
    json effects = json::array();
    for (int s = 1; s <= spec.periods - c.adoption + 1; ++s) effects.push_back(number(sim.cohort_effect(static_cast<int>(g), s)));
    json violation = json::array();
    for (double v : c.violation) violation.push_back(number(v));
    cohorts.push_back(json{{"adoption", c.adoption}, {"size", c.size}, {"violation", violation}, {"effects", effects}});
  }
  truth["cohorts"] = cohorts;
  truth["never_treated"] = spec.never_size;

  const auto path = sidecar_path(cfg.out);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path);
  f << truth.dump(2) << '\n';

  std::ostringstream s;
  s << provenance_comment(config_hash(cfg)) << '\n';
  write_panel_csv(s, sim.panel);
  return s.str();
}

}  // namespace

Framework parse_framework(const std::string& name) {
  if (name == "cohort" || name == "cohort-anchored") return Framework::CohortAnchored;
  if (name == "aggregated") return Framework::Aggregated;
  if (name == "both") return Framework::Both;
  throw Error(ErrorCode::BadArgument, "unknown framework '" + name + "'");
}

std::string framework_name(Framework f) {
  switch (f) {
    case Framework::CohortAnchored: return "cohort-anchored";
    case Framework::Aggregated: return "aggregated";
    case Framework::Both: return "both";
  }
  return "";
}

std::vector<double> parse_sweep(const std::string& text) {
  const auto parts = split_colon(text);
  std::vector<double> values;
  if (parts.size() == 1) {
    values.push_back(to_double(parts[0]));
  } else if (parts.size() == 3) {
    const double lo = to_double(parts[0]);
    const double hi = to_double(parts[1]);
    const double step = to_double(parts[2]);
    if (!(step > 0) || hi < lo) throw Error(ErrorCode::BadArgument, "sweep needs lo <= hi and a positive step");
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    if (n > 100000) throw Error(ErrorCode::BadArgument, "sweep is too long");
    for (long k = 0; k <= n; ++k) values.push_back(lo + static_cast<double>(k) * step);
  } else {
    throw Error(ErrorCode::BadArgument, "sweep must be 'value' or 'lo:hi:step'");
  }
  if (values.front() < 0) throw Error(ErrorCode::BadArgument, "sensitivity parameters must be nonnegative");
  return values;
}

GridSpec parse_grid(const std::string& text) {
  const auto parts = split_colon(text);
  if (parts.size() != 3) throw Error(ErrorCode::BadArgument, "grid must be 'lo:hi:n'");
  GridSpec g{to_double(parts[0]), to_double(parts[1]), 0};
  const double n = to_double(parts[2]);
  if (n < 1 || n != std::floor(n) || n > 1e7) throw Error(ErrorCode::BadArgument, "grid point count must be a positive integer");
  g.points = static_cast<int>(n);
  if (g.upper < g.lower) throw Error(ErrorCode::BadArgument, "grid upper bound below lower bound");
  return g;
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream s;
  s << "command=" << c.command << ";input=" << c.input << ";vcov=" << c.vcov
    << ";estimator=" << estimator_name(c.estimator) << ";family=" << family_name(c.family) << ";params=";
  for (std::size_t k = 0; k < c.params.size(); ++k) s << (k ? "," : "") << format_double(c.params[k]);
  s << ";alpha=" << format_double(c.alpha) << ";kappa=" << (c.kappa ? format_double(*c.kappa) : "default")
    << ";bootstrap=" << c.bootstrap << ";seed=" << c.seed << ";grid=";
  if (c.grid) {
    s << format_double(c.grid->lower) << ':' << format_double(c.grid->upper) << ':' << c.grid->points;
  } else {
    s << "default";
  }
  s << ";framework=" << framework_name(c.framework) << ";target=" << c.target << ";lf_draws=" << c.lf_draws
    << ";inverse=" << c.inverse << ";example=" << c.example << ";noise_is_sd=" << c.noise_is_sd;
  return s.str();
}

std::string config_hash(const RunConfig& config) { return hex64(fnv1a(canonical_config(config))); }

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    std::string text;
    if (cfg.command == "validate") {
      text = run_validate(cfg);
    } else if (cfg.command == "estimate") {
      text = run_estimate(cfg);
    } else if (cfg.command == "vcov") {
      text = run_vcov(cfg, err);
    } else if (cfg.command == "biasmap") {
      text = run_biasmap(cfg);
    } else if (cfg.command == "family") {
      text = run_family(cfg);
    } else if (cfg.command == "sets") {
      text = run_sets(cfg, err);
    } else if (cfg.command == "byperiod") {
      text = run_byperiod(cfg, err);
    } else if (cfg.command == "compare") {
      text = run_compare(cfg, err);
    } else if (cfg.command == "simulate") {
      text = run_simulate(cfg);
    } else {
      throw Error(ErrorCode::BadArgument, "unknown command '" + cfg.command + "'");
    }
    emit(cfg, out, text);
    return 0;
  } catch (const Error& e) {
    write_error_json(err, std::string(code_name(e.code())), e.what());
    return 2;
  } catch (const std::exception& e) {
    write_error_json(err, "INTERNAL", e.what());
    return 3;
  }
}

void write_error_json(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", {{"code", code}, {"message", message}}}}.dump() << '\n';
}

}  // namespace anchordid
