#include "anchordid/restrictions.hpp"

#include <sstream>

#include "anchordid/format.hpp"

namespace anchordid {

namespace {

using Row = Eigen::RowVectorXd;

struct Benchmark {
  int cohort;
  int rel;   // later period of the difference (rel, rel - 1)
  int sign;
};

Row unit_row(const CellIndex& index, int g, int rel) {
  Row r = Row::Zero(static_cast<Eigen::Index>(index.size()));
  r(static_cast<Eigen::Index>(*index.position(g, rel))) = 1.0;
  return r;
}

Row first_diff(const CellIndex& index, int g, int rel) { return unit_row(index, g, rel) - unit_row(index, g, rel - 1); }

int adoption_of(const CellIndex& index, int g) { return index[*index.position(g, 1)].adoption; }

// Relative periods s with (s, s-1) both pre-treatment.
std::vector<int> pre_difference_periods(const CellIndex& index, int g) {
  std::vector<int> out;
  for (int s = 3 - adoption_of(index, g); s <= 0; ++s) out.push_back(s);
  return out;
}

int last_post(const CellIndex& index, int g) { return index.periods() - adoption_of(index, g) + 1; }

class RowBuilder {
 public:
  explicit RowBuilder(std::size_t cells) : cells_(static_cast<Eigen::Index>(cells)) {}
  void add(const Row& row, double bound) {
    rows_.push_back(row);
    bounds_.push_back(bound);
  }
  Polyhedron finish(std::string label, const CellIndex& index) const {
    Polyhedron p;
    p.a.resize(static_cast<Eigen::Index>(rows_.size()), cells_);
    p.d.resize(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t k = 0; k < rows_.size(); ++k) {
      p.a.row(static_cast<Eigen::Index>(k)) = rows_[k];
      p.d(static_cast<Eigen::Index>(k)) = bounds_[k];
    }
    p.a_eq.resize(0, cells_);
    p.d_eq.resize(0);
    for (std::size_t j = 0; j < index.size(); ++j) {
      if (index[j].structural_zero) p.a.col(static_cast<Eigen::Index>(j)).setZero();
    }
    p.label = std::move(label);
    return p;
  }

 private:
  Eigen::Index cells_;
  std::vector<Row> rows_;
  std::vector<double> bounds_;
};

void add_rm_rows(RowBuilder& rows, const CellIndex& index, int g, double mbar, const Benchmark& b) {
  const Row bench = mbar * b.sign * first_diff(index, b.cohort, b.rel);
  for (int s = 1; s <= last_post(index, g); ++s) {
    const Row diff = first_diff(index, g, s);
    rows.add(diff - bench, 0.0);
    rows.add(-diff - bench, 0.0);
  }
}

std::string benchmark_label(const CellIndex& index, const Benchmark& b) {
  std::ostringstream os;
  os << "g" << adoption_of(index, b.cohort) << ":s" << b.rel << (b.sign > 0 ? "+" : "-");
  return os.str();
}

std::vector<Benchmark> cohort_benchmarks(const CellIndex& index, int g) {
  std::vector<Benchmark> out;
  for (int s : pre_difference_periods(index, g)) {
    out.push_back({g, s, +1});
    out.push_back({g, s, -1});
  }
  return out;
}

RestrictionFamily empty_family(const CellIndex& index, FamilyKind kind, double parameter) {
  if (!(parameter >= 0.0)) throw Error(ErrorCode::BadArgument, "restriction parameter must be nonnegative");
  RestrictionFamily f;
  f.kind = kind;
  f.parameter = parameter;
  f.estimator = index.estimator();
  f.cells = index.size();
  return f;
}

RestrictionFamily finish_family(RestrictionFamily f, const CellIndex& index, const FamilyOptions& options) {
  return options.normalize ? with_normalization(std::move(f), index) : f;
}

}  // namespace

std::string family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::RmGlobal: return "rm-global";
    case FamilyKind::RmCohort: return "rm-cohort";
    case FamilyKind::SecondDifference: return "sd";
  }
  return "unknown";
}

FamilyKind parse_family(const std::string& name) {
  if (name == "rm-global") return FamilyKind::RmGlobal;
  if (name == "rm-cohort") return FamilyKind::RmCohort;
  if (name == "sd") return FamilyKind::SecondDifference;
  throw Error(ErrorCode::BadArgument, "unknown restriction family '" + name + "'");
}

bool Polyhedron::contains(const Vector& x, double tolerance) const {
  if ((a * x - d).maxCoeff() > tolerance && a.rows() > 0) return false;
  if (a_eq.rows() > 0 && (a_eq * x - d_eq).cwiseAbs().maxCoeff() > tolerance) return false;
  return true;
}

std::size_t predicted_member_count(const CellIndex& index, FamilyKind kind) {
  switch (kind) {
    case FamilyKind::SecondDifference: return 1;
    case FamilyKind::RmGlobal: {
      std::size_t n = 0;
      for (int g = 0; g < index.cohort_count(); ++g) n += 2 * pre_difference_periods(index, g).size();
      return n;
    }
    case FamilyKind::RmCohort: {
      std::size_t n = 1;
      for (int g = 0; g < index.cohort_count(); ++g) {
        const std::size_t choices = 2 * pre_difference_periods(index, g).size();
        if (choices == 0) return 0;
        if (n > static_cast<std::size_t>(1) << 50) return n;  // saturate; far above any cap
        n *= choices;
      }
      return n;
    }
  }
  return 0;
}

RestrictionFamily rm_global(const CellIndex& index, double mbar, const FamilyOptions& options) {
  auto f = empty_family(index, FamilyKind::RmGlobal, mbar);
  std::vector<Benchmark> benchmarks;
  for (int k = 0; k < index.cohort_count(); ++k) {
    auto b = cohort_benchmarks(index, k);
    benchmarks.insert(benchmarks.end(), b.begin(), b.end());
  }
  if (benchmarks.empty()) throw Error(ErrorCode::NoPreDifferences, "no cohort has two pre-treatment periods");
  if (benchmarks.size() > options.member_cap) {
    throw Error(ErrorCode::MemberCountExceedsCap, "benchmark count exceeds the member cap");
  }
  for (const auto& b : benchmarks) {
    RowBuilder rows(index.size());
    for (int g = 0; g < index.cohort_count(); ++g) add_rm_rows(rows, index, g, mbar, b);
    f.members.push_back(rows.finish("rm-global " + benchmark_label(index, b), index));
  }
  return finish_family(std::move(f), index, options);
}

RestrictionFamily rm_cohort(const CellIndex& index, double mbar, const FamilyOptions& options) {
  auto f = empty_family(index, FamilyKind::RmCohort, mbar);
  std::vector<std::vector<Benchmark>> choices;
  for (int g = 0; g < index.cohort_count(); ++g) {
    choices.push_back(cohort_benchmarks(index, g));
    if (choices.back().empty()) {
      throw Error(ErrorCode::CohortWithoutPreDifference,
                  "cohort " + std::to_string(adoption_of(index, g)) + " has no pre-treatment difference");
    }
  }
  const std::size_t count = predicted_member_count(index, FamilyKind::RmCohort);
  if (count > options.member_cap) {
    throw Error(ErrorCode::MemberCountExceedsCap, "cohort benchmark combinations (" + std::to_string(count) +
                                                      ") exceed the cap of " + std::to_string(options.member_cap));
  }
  std::vector<std::size_t> pick(choices.size(), 0);
  for (std::size_t m = 0; m < count; ++m) {
    RowBuilder rows(index.size());
    std::string label = "rm-cohort";
    for (std::size_t g = 0; g < choices.size(); ++g) {
      const auto& b = choices[g][pick[g]];
      add_rm_rows(rows, index, static_cast<int>(g), mbar, b);
      label += " " + benchmark_label(index, b);
    }
    f.members.push_back(rows.finish(label, index));
    for (std::size_t g = choices.size(); g-- > 0;) {
      if (++pick[g] < choices[g].size()) break;
      pick[g] = 0;
    }
  }
  return finish_family(std::move(f), index, options);
}

RestrictionFamily second_difference(const CellIndex& index, double m, const FamilyOptions& options) {
  auto f = empty_family(index, FamilyKind::SecondDifference, m);
  RowBuilder rows(index.size());
  for (int g = 0; g < index.cohort_count(); ++g) {
    if (adoption_of(index, g) < 3) {
      throw Error(ErrorCode::CohortWithoutTwoPrePeriods,
                  "cohort " + std::to_string(adoption_of(index, g)) + " has fewer than two pre-treatment periods");
    }
    for (int s = 1; s <= last_post(index, g); ++s) {
      const Row sd = first_diff(index, g, s) - first_diff(index, g, s - 1);
      rows.add(sd, m);
      rows.add(-sd, m);
    }
  }
  f.members.push_back(rows.finish("sd M=" + format_double(m), index));
  return finish_family(std::move(f), index, options);
}

RestrictionFamily build_family(const CellIndex& index, FamilyKind kind, double parameter,
                               const FamilyOptions& options) {
  switch (kind) {
    case FamilyKind::RmGlobal: return rm_global(index, parameter, options);
    case FamilyKind::RmCohort: return rm_cohort(index, parameter, options);
    case FamilyKind::SecondDifference: return second_difference(index, parameter, options);
  }
  throw Error(ErrorCode::BadArgument, "unknown restriction family");
}

RestrictionFamily with_normalization(RestrictionFamily family, const CellIndex& index) {
  if (family.space != BiasSpace::Block) throw Error(ErrorCode::AlreadyMapped, "normalize before mapping");
  family.normalized = true;
  if (index.estimator() == EstimatorKind::CsNyt) return family;
  const auto n = static_cast<Eigen::Index>(index.size());
  Matrix eq = Matrix::Zero(index.cohort_count(), n);
  for (std::size_t j = 0; j < index.size(); ++j) {
    if (index[j].is_pre()) eq(index[j].cohort, static_cast<Eigen::Index>(j)) = 1.0;
  }
  for (auto& p : family.members) {
    Matrix stacked(p.a_eq.rows() + eq.rows(), n);
    stacked << p.a_eq, eq;
    p.a_eq = std::move(stacked);
    Vector rhs(p.d_eq.size() + eq.rows());
    rhs << p.d_eq, Vector::Zero(eq.rows());
    p.d_eq = std::move(rhs);
  }
  return family;
}

RestrictionFamily map_to_overall(const RestrictionFamily& family, const BiasMap<double>& map, const CellIndex& index) {
  if (family.space == BiasSpace::Overall) throw Error(ErrorCode::AlreadyMapped, "family is already in overall-bias space");
  if (!map.w_inverse || map.w_inverse->cols() != static_cast<Eigen::Index>(family.cells) ||
      index.size() != family.cells || map.estimator != family.estimator) {
    throw Error(ErrorCode::IndexMismatch, "bias map does not match the restriction family");
  }
  RestrictionFamily out = family;
  out.space = BiasSpace::Overall;
  for (auto& p : out.members) {
    p.a = p.a * *map.w_inverse;
    if (p.a_eq.rows() > 0) p.a_eq = p.a_eq * *map.w_inverse;
    for (std::size_t j = 0; j < index.size(); ++j) {
      if (!index[j].structural_zero) continue;
      p.a.col(static_cast<Eigen::Index>(j)).setZero();
      if (p.a_eq.rows() > 0) p.a_eq.col(static_cast<Eigen::Index>(j)).setZero();
    }
  }
  return out;
}

}  // namespace anchordid
