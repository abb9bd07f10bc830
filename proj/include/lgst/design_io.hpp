#pragma once

#include <filesystem>

#include "lgst/design.hpp"

namespace lgst {

void save_design(const std::filesystem::path& path, const ExperimentDesign& design);
ExperimentDesign load_design(const std::filesystem::path& path);

/// Binary design-matrix cache, little endian:
///   "LGSTDM01", u64 K, u64 kappa, u64 nnz,
///   kappa column kinds (u8, 0 = H, 1 = S),
///   ceil(K/8) bytes partition bitmap (bit r set = stochastic row),
///   K x i8 ideal, K x u32 circuit index, K x u32 observable index,
///   nnz x (u32 row, u32 col, f64 value) in row-major order.
void save_design_matrix(const std::filesystem::path& path, const DesignMatrix& d);
/// Throws FormatError on a bad header, truncation, or a bitmap that disagrees with ideal.
DesignMatrix load_design_matrix(const std::filesystem::path& path);

}  // namespace lgst
