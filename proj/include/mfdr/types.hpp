#pragma once

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace mfdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using StateIndex = std::size_t;

}  // namespace mfdr
