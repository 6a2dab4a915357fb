#include "ssmkit/matrix_market.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ssmkit {

MatrixXd read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_matrix_market: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("read_matrix_market: empty file");
  std::istringstream hdr(line);
  std::string banner, object, format, field, symmetry;
  hdr >> banner >> object >> format >> field >> symmetry;
  std::transform(format.begin(), format.end(), format.begin(), ::tolower);
  std::transform(field.begin(), field.end(), field.begin(), ::tolower);
  std::transform(symmetry.begin(), symmetry.end(), symmetry.begin(), ::tolower);
  if (banner != "%%MatrixMarket" || object != "matrix")
    throw std::runtime_error("read_matrix_market: not a MatrixMarket matrix file");
  if (field == "complex" || field == "pattern")
    throw std::runtime_error("read_matrix_market: only real/integer fields supported");

  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  std::istringstream sizes(line);

  if (format == "array") {
    int rows, cols;
    sizes >> rows >> cols;
    MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = (symmetry == "general" ? 0 : j); i < rows; ++i) {
        Real v;
        if (!(in >> v)) throw std::runtime_error("read_matrix_market: truncated array data");
        m(i, j) = v;
        if (symmetry == "symmetric") m(j, i) = v;
        if (symmetry == "skew-symmetric") m(j, i) = -v;
      }
    if (symmetry != "general")
      for (int i = 0; i < rows; ++i)
        if (symmetry == "skew-symmetric") m(i, i) = 0.0;
    return m;
  }
  if (format == "coordinate") {
    int rows, cols;
    long nnz;
    sizes >> rows >> cols >> nnz;
    MatrixXd m = MatrixXd::Zero(rows, cols);
    for (long k = 0; k < nnz; ++k) {
      int i, j;
      Real v;
      if (!(in >> i >> j >> v))
        throw std::runtime_error("read_matrix_market: truncated coordinate data");
      m(i - 1, j - 1) = v;
      if (symmetry == "symmetric" && i != j) m(j - 1, i - 1) = v;
      if (symmetry == "skew-symmetric" && i != j) m(j - 1, i - 1) = -v;
    }
    return m;
  }
  throw std::runtime_error("read_matrix_market: unknown format " + format);
}

void write_matrix_market(const std::string& path, const MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_matrix_market: cannot open " + path);
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << " " << m.cols() << "\n";
  out.precision(17);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) out << m(i, j) << "\n";
}

}  // namespace ssmkit
