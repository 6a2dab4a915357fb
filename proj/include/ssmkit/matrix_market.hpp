#pragma once

#include <string>

#include "ssmkit/types.hpp"

namespace ssmkit {

/// Reads a real Matrix Market file (coordinate or array format; general,
/// symmetric, or skew-symmetric) into a dense matrix.
MatrixXd read_matrix_market(const std::string& path);

/// Writes a dense matrix in array format.
void write_matrix_market(const std::string& path, const MatrixXd& m);

}  // namespace ssmkit
