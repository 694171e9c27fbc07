#pragma once

#include <filesystem>

#include "json.hpp"

#include "chem/conformal.hpp"
#include "chem/subband.hpp"

namespace chem {

// Coefficient-field container: magic "CHCF", u16 version, layout records,
// then the values as little-endian doubles. A JSON twin exists for small
// fields and debugging.

inline constexpr std::uint16_t kCoefficientVersion = 1;

void write_coefficients(const std::filesystem::path& path, const CoefficientField<double>& field);
CoefficientField<double> read_coefficients(const std::filesystem::path& path);

nlohmann::json coefficients_to_json(const CoefficientField<double>& field);
CoefficientField<double> coefficients_from_json(const nlohmann::json& j);

// Per-image score matrix: magic "CHSM", u16 version, u32 sample count,
// u64 coefficient count, row-major little-endian doubles.
void write_score_matrix(const std::filesystem::path& path, const ResidualMatrix<double>& scores);
ResidualMatrix<double> read_score_matrix(const std::filesystem::path& path);

}  // namespace chem
