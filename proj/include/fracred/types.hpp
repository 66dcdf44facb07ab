#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fracred {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied input does not hold.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The assembled operator is not positive definite.
class PositivityError : public Error {
 public:
  PositivityError(const std::string& what, double lambda_min)
      : Error(what), lambda_min_(lambda_min) {}
  double lambda_min() const { return lambda_min_; }

 private:
  double lambda_min_;
};

/// A time quadrature does not resolve the requested integral.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracred
