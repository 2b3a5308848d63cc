#include "anchordid/vcov.hpp"

#include <cmath>

#include "anchordid/error.hpp"
#include "anchordid/parallel.hpp"
#include "anchordid/rng.hpp"

namespace anchordid {

std::vector<int> resample_units(const CohortLayout& layout, std::uint64_t key) {
  Rng rng(key);
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(layout.total_units()));
  auto draw = [&](const std::vector<int>& stratum) {
    const int n = static_cast<int>(stratum.size());
    for (int k = 0; k < n; ++k) rows.push_back(stratum[static_cast<std::size_t>(rng.uniform_index(n))]);
  };
  for (const auto& c : layout.cohorts()) draw(c.members);
  draw(layout.never_treated());
  return rows;
}

PanelData take_units(const PanelData& panel, const std::vector<int>& rows) {
  PanelData out;
  out.outcome.resize(static_cast<Eigen::Index>(rows.size()), panel.outcome.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = static_cast<std::size_t>(rows[k]);
    out.unit_ids.push_back("r" + std::to_string(k) + ":" + panel.unit_ids[src]);
    out.adoption.push_back(panel.adoption[src]);
    out.outcome.row(static_cast<Eigen::Index>(k)) = panel.outcome.row(rows[k]);
  }
  return out;
}

Matrix sample_covariance(const Matrix& draws) {
  if (draws.rows() < 2) throw Error(ErrorCode::BadArgument, "covariance needs at least two draws");
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Matrix centered = draws.rowwise() - mean;
  return (centered.transpose() * centered) / static_cast<double>(draws.rows() - 1);
}

BootstrapResult bootstrap_vcov(const PanelData& panel, const BootstrapSpec& spec) {
  if (spec.replicates < 2) throw Error(ErrorCode::BadArgument, "bootstrap needs at least two replicates");
  const CohortLayout layout = build_layout(panel);
  BootstrapResult result{estimate(panel, layout, spec.estimator), {}, {}, 0};
  const auto m = result.coefficients.size();
  result.draws.resize(spec.replicates, m);

  for (const auto& c : layout.cohorts()) {
    if (c.size() == 1) {
      result.warnings.push_back("cohort " + std::to_string(c.adoption) +
                                " has a single unit; its resampling variance is zero");
    }
  }
  if (layout.never_size() == 1) {
    result.warnings.push_back("the never-treated group has a single unit; its resampling variance is zero");
  }

  std::vector<int> redraws(static_cast<std::size_t>(spec.replicates), 0);
  parallel_for(static_cast<std::size_t>(spec.replicates), spec.workers, [&](std::size_t b) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > spec.max_redraws) {
        throw Error(ErrorCode::ResamplingDegenerate,
                    "replicate " + std::to_string(b) + " failed after " + std::to_string(spec.max_redraws) +
                        " redraws");
      }
      const auto rows = resample_units(layout, stream_key(spec.seed, kBootstrapStream, b, static_cast<std::uint64_t>(attempt)));
      const PanelData sample = take_units(panel, rows);
      try {
        const CohortLayout sample_layout = build_layout(sample);
        const CoefficientSet est = estimate(sample, sample_layout, spec.estimator);
        if (est.positions != result.coefficients.positions || !est.values.allFinite()) {
          throw Error(ErrorCode::UnstableEstimate, "replicate produced a different coefficient layout");
        }
        result.draws.row(static_cast<Eigen::Index>(b)) = est.values.transpose();
        redraws[b] = attempt;
        return;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RankDeficient && e.code() != ErrorCode::UnstableEstimate) throw;
      }
    }
  });
  for (int r : redraws) result.redraws += r;
  result.coefficients.vcov = sample_covariance(result.draws);
  return result;
}

}  // namespace anchordid
