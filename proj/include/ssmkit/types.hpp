#pragma once

#include <complex>
#include <Eigen/Core>
#include <Eigen/Dense>

namespace ssmkit {

using Real = double;
using Complex = std::complex<double>;

using VectorXd = Eigen::VectorXd;
using MatrixXd = Eigen::MatrixXd;
using VectorXcd = Eigen::VectorXcd;
using MatrixXcd = Eigen::MatrixXcd;
using Vector2d = Eigen::Vector2d;

constexpr Real kPi = 3.14159265358979323846;

}  // namespace ssmkit
