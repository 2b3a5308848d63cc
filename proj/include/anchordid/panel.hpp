#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace anchordid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Balanced outcome panel. Rows are units, columns are periods 1..T.
// adoption[i] is the first treated period of unit i, or nullopt if the unit
// is never treated.
struct PanelData {
  std::vector<std::string> unit_ids;
  std::vector<std::optional<int>> adoption;
  Matrix outcome;

  [[nodiscard]] int periods() const { return static_cast<int>(outcome.cols()); }
  [[nodiscard]] int units() const { return static_cast<int>(outcome.rows()); }
};

struct Cohort {
  int adoption = 0;           // t_g
  std::vector<int> members;   // unit rows, ascending
  [[nodiscard]] int size() const { return static_cast<int>(members.size()); }
  [[nodiscard]] int pre_periods() const { return adoption - 1; }
};

// Cohort structure derived from a validated panel. Cohorts are sorted by
// adoption time; cohort indices below always refer to this order.
class CohortLayout {
 public:
  CohortLayout(int periods, std::vector<Cohort> cohorts, std::vector<int> never_treated);

  [[nodiscard]] int periods() const { return periods_; }
  [[nodiscard]] int cohort_count() const { return static_cast<int>(cohorts_.size()); }
  [[nodiscard]] const std::vector<Cohort>& cohorts() const { return cohorts_; }
  [[nodiscard]] const Cohort& cohort(int g) const { return cohorts_.at(static_cast<std::size_t>(g)); }
  [[nodiscard]] const std::vector<int>& never_treated() const { return never_; }
  [[nodiscard]] int never_size() const { return static_cast<int>(never_.size()); }
  [[nodiscard]] int total_units() const;

  // Cohort index for a unit row, or -1 for never-treated units.
  [[nodiscard]] int cohort_of_unit(int unit) const { return unit_cohort_.at(static_cast<std::size_t>(unit)); }
  // Cohort index with the given adoption time.
  [[nodiscard]] std::optional<int> find_cohort(int adoption) const;

  // Units of every later cohort plus the never-treated (the group untreated
  // through the cohort's first treated period).
  [[nodiscard]] std::vector<int> initial_controls(int g) const;
  // Units still untreated at calendar time t (later adopters and never-treated).
  [[nodiscard]] std::vector<int> untreated_at(int t) const;
  // N_k / (N_k + N_k+1 + ... + N_never).
  [[nodiscard]] double adjustment_weight(int k) const;
  // Cohorts k with t_g < t_k <= t.
  [[nodiscard]] std::vector<int> intermediate_cohorts(int g, int t) const;

 private:
  int periods_;
  std::vector<Cohort> cohorts_;
  std::vector<int> never_;
  std::vector<int> unit_cohort_;
};

enum class EstimatorKind { Imputation, CsNyt };

[[nodiscard]] std::string estimator_name(EstimatorKind kind);
[[nodiscard]] EstimatorKind parse_estimator(const std::string& name);

struct Cell {
  int cohort = 0;     // cohort index
  int adoption = 0;   // t_g
  int rel = 0;        // relative period s = t - t_g + 1
  int time = 0;       // calendar period
  bool structural_zero = false;

  [[nodiscard]] bool is_pre() const { return rel <= 0; }
  [[nodiscard]] bool is_post() const { return rel >= 1; }
};

// All cohort-by-period cells, ordered by calendar time and, within a period,
// by adoption time. Every cohort contributes one cell per period.
class CellIndex {
 public:
  CellIndex(const CohortLayout& layout, EstimatorKind estimator);

  [[nodiscard]] std::size_t size() const { return cells_.size(); }
  [[nodiscard]] const Cell& operator[](std::size_t i) const { return cells_[i]; }
  [[nodiscard]] const std::vector<Cell>& cells() const { return cells_; }
  [[nodiscard]] EstimatorKind estimator() const { return estimator_; }
  [[nodiscard]] int cohort_count() const { return cohorts_; }
  [[nodiscard]] int periods() const { return periods_; }

  [[nodiscard]] std::size_t position_at_time(int g, int t) const;
  [[nodiscard]] std::optional<std::size_t> position(int g, int rel) const;
  [[nodiscard]] std::string label(std::size_t i) const;

 private:
  EstimatorKind estimator_;
  int cohorts_;
  int periods_;
  std::vector<int> adoption_;
  std::vector<Cell> cells_;
  std::vector<std::size_t> by_cohort_time_;
};

// Reads `unit,time,outcome,cohort` CSV. Validates and throws anchordid::Error.
[[nodiscard]] PanelData read_panel_csv(std::istream& in);
[[nodiscard]] PanelData load_panel(const std::string& path);
void write_panel_csv(std::ostream& out, const PanelData& panel);

// Full validation of an in-memory panel. Throws anchordid::Error.
void validate_panel(const PanelData& panel);
[[nodiscard]] CohortLayout build_layout(const PanelData& panel);

// Untreated mask: true where unit i is not yet treated at period t.
[[nodiscard]] Mask untreated_mask(const PanelData& panel);

}  // namespace anchordid
