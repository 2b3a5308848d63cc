#include "anchordid/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "anchordid/error.hpp"
#include "anchordid/format.hpp"
#include "anchordid/version.hpp"

namespace anchordid {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream s(line);
  while (std::getline(s, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    while (!field.empty() && field.front() == ' ') field.erase(field.begin());
    out.push_back(field);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool skip(const std::string& line) {
  const auto p = line.find_first_not_of(" \t\r");
  return p == std::string::npos || line[p] == '#';
}

}  // namespace

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string provenance_comment(const std::string& config_hash) {
  return std::string("# anchordid ") + kVersion + " config " + config_hash;
}

void write_coefficients_csv(std::ostream& out, const CoefficientSet& coefficients, const std::string& config_hash) {
  out << provenance_comment(config_hash) << '\n';
  out << "estimator,cohort,rel_period,calendar_time,kind,value\n";
  const auto name = estimator_name(coefficients.index.estimator());
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
    const auto& c = coefficients.cell(j);
    out << name << ',' << c.adoption << ',' << c.rel << ',' << c.time << ',' << (c.is_post() ? "post" : "pre") << ','
        << format_double(coefficients.values(j)) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& labels, const Matrix& m,
                      const std::string& config_hash) {
  out << provenance_comment(config_hash) << '\n';
  for (std::size_t k = 0; k < labels.size(); ++k) out << (k ? "," : "") << labels[k];
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

void write_vcov_csv(std::ostream& out, const CoefficientSet& coefficients, const std::string& config_hash) {
  if (!coefficients.vcov) throw Error(ErrorCode::MissingVcov, "coefficients carry no covariance");
  std::vector<std::string> labels;
  for (auto p : coefficients.positions) labels.push_back(coefficients.index.label(p));
  write_matrix_csv(out, labels, *coefficients.vcov, config_hash);
}

Matrix read_vcov_csv(std::istream& in, const CoefficientSet& coefficients) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (skip(line)) continue;
    header = split(line);
    break;
  }
  const auto n = coefficients.size();
  if (static_cast<Eigen::Index>(header.size()) != n) {
    throw Error(ErrorCode::IndexMismatch, "covariance has " + std::to_string(header.size()) + " columns, expected " +
                                              std::to_string(n));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto want = coefficients.index.label(coefficients.positions[static_cast<std::size_t>(j)]);
    if (header[static_cast<std::size_t>(j)] != want) {
      throw Error(ErrorCode::IndexMismatch, "covariance column '" + header[static_cast<std::size_t>(j)] +
                                                "' where '" + want + "' was expected");
    }
  }
  Matrix v(n, n);
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (skip(line)) continue;
    if (row >= n) throw Error(ErrorCode::IndexMismatch, "covariance has too many rows");
    const auto fields = split(line);
    if (static_cast<Eigen::Index>(fields.size()) != n) throw Error(ErrorCode::ParseError, "ragged covariance row");
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& f = fields[static_cast<std::size_t>(c)];
      double x = 0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
      if (ec != std::errc() || p != f.data() + f.size()) throw Error(ErrorCode::ParseError, "bad covariance entry '" + f + "'");
      v(row, c) = x;
    }
    ++row;
  }
  if (row != n) throw Error(ErrorCode::IndexMismatch, "covariance has too few rows");
  return v;
}

Matrix load_vcov(const std::string& path, const CoefficientSet& coefficients) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_vcov_csv(in, coefficients);
}

}  // namespace anchordid
