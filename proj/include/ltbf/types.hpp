#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

namespace ltbf {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Complex = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

/// Force exact Hermitian symmetry, averaging away rounding skew.
inline CMat hermitize(const CMat& a) { return 0.5 * (a + a.adjoint()); }

}  // namespace ltbf
