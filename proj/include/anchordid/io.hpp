#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "anchordid/estimators.hpp"

namespace anchordid {

[[nodiscard]] std::uint64_t fnv1a(std::string_view text);
[[nodiscard]] std::string hex64(std::uint64_t value);

// "# anchordid <version> config <hash>"; first line of every CSV we write.
[[nodiscard]] std::string provenance_comment(const std::string& config_hash);

void write_coefficients_csv(std::ostream& out, const CoefficientSet& coefficients, const std::string& config_hash);
void write_vcov_csv(std::ostream& out, const CoefficientSet& coefficients, const std::string& config_hash);
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& labels, const Matrix& m,
                      const std::string& config_hash);

// Header labels must match the coefficient cells in order.
[[nodiscard]] Matrix read_vcov_csv(std::istream& in, const CoefficientSet& coefficients);
[[nodiscard]] Matrix load_vcov(const std::string& path, const CoefficientSet& coefficients);

}  // namespace anchordid
