#include "anchordid/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include "anchordid/error.hpp"
#include "anchordid/format.hpp"

namespace anchordid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size() && !text.empty();
}

[[noreturn]] void fail(ErrorCode code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::string estimator_name(EstimatorKind kind) {
  return kind == EstimatorKind::Imputation ? "imputation" : "csnyt";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "imputation") return EstimatorKind::Imputation;
  if (name == "csnyt" || name == "cs-nyt") return EstimatorKind::CsNyt;
  throw Error(ErrorCode::BadArgument, "unknown estimator '" + name + "'");
}

PanelData read_panel_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split_commas(line);
    if (fields.size() != 4 || fields[0] != "unit" || fields[1] != "time" || fields[2] != "outcome" ||
        fields[3] != "cohort") {
      fail(ErrorCode::BadHeader, line_no, "expected header 'unit,time,outcome,cohort'");
    }
    have_header = true;
    break;
  }
  if (!have_header) throw Error(ErrorCode::BadHeader, "empty panel file");

  struct Row {
    int unit;
    int time;
    double value;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::vector<std::string> ids;
  std::vector<std::optional<int>> adoption;
  std::unordered_map<std::string, int> unit_row;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split_commas(line);
    if (fields.size() != 4) fail(ErrorCode::ParseError, line_no, "expected 4 fields");
    if (fields[0].empty()) fail(ErrorCode::ParseError, line_no, "empty unit id");

    long long time = 0;
    if (!parse_number(fields[1], time)) fail(ErrorCode::BadTime, line_no, "time is not an integer");
    if (time < 1 || time > 100000) fail(ErrorCode::BadTime, line_no, "time must be a positive integer");

    double value = 0.0;
    if (!parse_number(fields[2], value) || !std::isfinite(value)) {
      fail(ErrorCode::ParseError, line_no, "outcome is not a finite number");
    }

    std::optional<int> cohort;
    if (fields[3] != "never") {
      long long c = 0;
      if (!parse_number(fields[3], c)) fail(ErrorCode::ParseError, line_no, "cohort must be an integer or 'never'");
      if (c < -100000 || c > 100000) fail(ErrorCode::AdoptionOutOfRange, line_no, "adoption time out of range");
      cohort = static_cast<int>(c);
    }

    std::string id(fields[0]);
    auto [it, inserted] = unit_row.emplace(id, static_cast<int>(ids.size()));
    if (inserted) {
      ids.push_back(id);
      adoption.push_back(cohort);
    } else if (adoption[static_cast<std::size_t>(it->second)] != cohort) {
      fail(ErrorCode::InconsistentCohort, line_no, "unit '" + id + "' changes cohort");
    }
    rows.push_back({it->second, static_cast<int>(time), value, line_no});
  }
  if (rows.empty()) throw Error(ErrorCode::UnbalancedPanel, "panel has no observations");

  int periods = 0;
  for (const auto& r : rows) periods = std::max(periods, r.time);

  PanelData panel;
  panel.unit_ids = std::move(ids);
  panel.adoption = std::move(adoption);
  const auto n = static_cast<Eigen::Index>(panel.unit_ids.size());
  panel.outcome = Matrix::Constant(n, periods, std::nan(""));
  Mask seen = Mask::Constant(n, periods, false);
  for (const auto& r : rows) {
    if (seen(r.unit, r.time - 1)) {
      fail(ErrorCode::DuplicateCell, r.line,
           "duplicate observation for unit '" + panel.unit_ids[static_cast<std::size_t>(r.unit)] + "' at time " +
               std::to_string(r.time));
    }
    seen(r.unit, r.time - 1) = true;
    panel.outcome(r.unit, r.time - 1) = r.value;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int t = 0; t < periods; ++t) {
      if (!seen(i, t)) {
        throw Error(ErrorCode::UnbalancedPanel, "unit '" + panel.unit_ids[static_cast<std::size_t>(i)] +
                                                    "' has no observation at time " + std::to_string(t + 1));
      }
    }
  }
  validate_panel(panel);
  return panel;
}

PanelData load_panel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return read_panel_csv(in);
}

void write_panel_csv(std::ostream& out, const PanelData& panel) {
  out << "unit,time,outcome,cohort\n";
  for (int i = 0; i < panel.units(); ++i) {
    const auto& a = panel.adoption[static_cast<std::size_t>(i)];
    const std::string cohort = a ? std::to_string(*a) : std::string("never");
    for (int t = 0; t < panel.periods(); ++t) {
      out << panel.unit_ids[static_cast<std::size_t>(i)] << ',' << (t + 1) << ',' << format_double(panel.outcome(i, t))
          << ',' << cohort << '\n';
    }
  }
}

void validate_panel(const PanelData& panel) {
  const int n = panel.units();
  const int periods = panel.periods();
  if (n == 0 || periods == 0) throw Error(ErrorCode::UnbalancedPanel, "panel is empty");
  if (static_cast<int>(panel.unit_ids.size()) != n || static_cast<int>(panel.adoption.size()) != n) {
    throw Error(ErrorCode::UnbalancedPanel, "unit metadata does not match outcome rows");
  }
  if (periods < 2) throw Error(ErrorCode::BadTime, "panel needs at least two periods");
  if (!panel.outcome.allFinite()) throw Error(ErrorCode::UnbalancedPanel, "panel has missing or non-finite outcomes");
  bool any_never = false;
  for (int i = 0; i < n; ++i) {
    const auto& a = panel.adoption[static_cast<std::size_t>(i)];
    if (!a) {
      any_never = true;
      continue;
    }
    if (*a < 2 || *a > periods) {
      throw Error(ErrorCode::AdoptionOutOfRange, "unit '" + panel.unit_ids[static_cast<std::size_t>(i)] +
                                                     "' adopts at " + std::to_string(*a) + ", outside 2.." +
                                                     std::to_string(periods));
    }
  }
  if (!any_never) throw Error(ErrorCode::NoNeverTreated, "panel has no never-treated units");
}

CohortLayout build_layout(const PanelData& panel) {
  validate_panel(panel);
  std::vector<int> times;
  std::vector<int> never;
  for (int i = 0; i < panel.units(); ++i) {
    const auto& a = panel.adoption[static_cast<std::size_t>(i)];
    if (a) {
      times.push_back(*a);
    } else {
      never.push_back(i);
    }
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<Cohort> cohorts(times.size());
  for (std::size_t g = 0; g < times.size(); ++g) cohorts[g].adoption = times[g];
  for (int i = 0; i < panel.units(); ++i) {
    const auto& a = panel.adoption[static_cast<std::size_t>(i)];
    if (!a) continue;
    auto g = std::lower_bound(times.begin(), times.end(), *a) - times.begin();
    cohorts[static_cast<std::size_t>(g)].members.push_back(i);
  }
  return CohortLayout(panel.periods(), std::move(cohorts), std::move(never));
}

Mask untreated_mask(const PanelData& panel) {
  Mask m = Mask::Constant(panel.units(), panel.periods(), true);
  for (int i = 0; i < panel.units(); ++i) {
    const auto& a = panel.adoption[static_cast<std::size_t>(i)];
    if (!a) continue;
    for (int t = *a; t <= panel.periods(); ++t) m(i, t - 1) = false;
  }
  return m;
}

CohortLayout::CohortLayout(int periods, std::vector<Cohort> cohorts, std::vector<int> never_treated)
    : periods_(periods), cohorts_(std::move(cohorts)), never_(std::move(never_treated)) {
  if (never_.empty()) throw Error(ErrorCode::NoNeverTreated, "layout has no never-treated units");
  int max_unit = -1;
  for (std::size_t g = 0; g < cohorts_.size(); ++g) {
    const auto& c = cohorts_[g];
    if (c.members.empty()) throw Error(ErrorCode::EmptyCohort, "cohort " + std::to_string(c.adoption) + " is empty");
    if (c.adoption < 2 || c.adoption > periods_) {
      throw Error(ErrorCode::AdoptionOutOfRange, "cohort adoption " + std::to_string(c.adoption) + " out of range");
    }
    if (g > 0 && cohorts_[g - 1].adoption >= c.adoption) {
      throw Error(ErrorCode::BadArgument, "cohorts must be sorted by strictly increasing adoption time");
    }
    for (int u : c.members) max_unit = std::max(max_unit, u);
  }
  for (int u : never_) max_unit = std::max(max_unit, u);
  unit_cohort_.assign(static_cast<std::size_t>(max_unit + 1), -2);
  for (std::size_t g = 0; g < cohorts_.size(); ++g) {
    for (int u : cohorts_[g].members) unit_cohort_[static_cast<std::size_t>(u)] = static_cast<int>(g);
  }
  for (int u : never_) unit_cohort_[static_cast<std::size_t>(u)] = -1;
}

int CohortLayout::total_units() const {
  int n = never_size();
  for (const auto& c : cohorts_) n += c.size();
  return n;
}

std::optional<int> CohortLayout::find_cohort(int adoption) const {
  for (std::size_t g = 0; g < cohorts_.size(); ++g) {
    if (cohorts_[g].adoption == adoption) return static_cast<int>(g);
  }
  return std::nullopt;
}

std::vector<int> CohortLayout::initial_controls(int g) const {
  return untreated_at(cohort(g).adoption);
}

std::vector<int> CohortLayout::untreated_at(int t) const {
  std::vector<int> out;
  for (const auto& c : cohorts_) {
    if (c.adoption > t) out.insert(out.end(), c.members.begin(), c.members.end());
  }
  out.insert(out.end(), never_.begin(), never_.end());
  std::sort(out.begin(), out.end());
  return out;
}

double CohortLayout::adjustment_weight(int k) const {
  int later = never_size();
  for (int j = k; j < cohort_count(); ++j) later += cohort(j).size();
  return static_cast<double>(cohort(k).size()) / static_cast<double>(later);
}

std::vector<int> CohortLayout::intermediate_cohorts(int g, int t) const {
  std::vector<int> out;
  for (int k = g + 1; k < cohort_count(); ++k) {
    if (cohort(k).adoption <= t) out.push_back(k);
  }
  return out;
}

CellIndex::CellIndex(const CohortLayout& layout, EstimatorKind estimator)
    : estimator_(estimator), cohorts_(layout.cohort_count()), periods_(layout.periods()) {
  for (const auto& c : layout.cohorts()) adoption_.push_back(c.adoption);
  by_cohort_time_.assign(static_cast<std::size_t>(cohorts_ * periods_), 0);
  cells_.reserve(by_cohort_time_.size());
  for (int t = 1; t <= periods_; ++t) {
    for (int g = 0; g < cohorts_; ++g) {
      Cell c;
      c.cohort = g;
      c.adoption = adoption_[static_cast<std::size_t>(g)];
      c.time = t;
      c.rel = t - c.adoption + 1;
      c.structural_zero = estimator == EstimatorKind::CsNyt && c.rel == 0;
      by_cohort_time_[static_cast<std::size_t>(g * periods_ + t - 1)] = cells_.size();
      cells_.push_back(c);
    }
  }
}

std::size_t CellIndex::position_at_time(int g, int t) const {
  if (g < 0 || g >= cohorts_ || t < 1 || t > periods_) {
    throw Error(ErrorCode::IndexMismatch, "cell (" + std::to_string(g) + ", t=" + std::to_string(t) + ") out of range");
  }
  return by_cohort_time_[static_cast<std::size_t>(g * periods_ + t - 1)];
}

std::optional<std::size_t> CellIndex::position(int g, int rel) const {
  if (g < 0 || g >= cohorts_) return std::nullopt;
  const int t = adoption_[static_cast<std::size_t>(g)] + rel - 1;
  if (t < 1 || t > periods_) return std::nullopt;
  return by_cohort_time_[static_cast<std::size_t>(g * periods_ + t - 1)];
}

std::string CellIndex::label(std::size_t i) const {
  const auto& c = cells_.at(i);
  return "g" + std::to_string(c.adoption) + "_s" + std::to_string(c.rel);
}

}  // namespace anchordid
