#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qbmor {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// (sE - A) could not be factorized, or the solve residual stayed above
// tolerance after refinement.
class SingularPencilError : public Error {
 public:
  SingularPencilError(std::complex<double> shift, const std::string& what);
  std::complex<double> shift() const noexcept { return shift_; }

 private:
  std::complex<double> shift_;
};

class RankCollapseError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(long step, double residual, const std::string& what);
  long step() const noexcept { return step_; }
  double residual() const noexcept { return residual_; }

 private:
  long step_;
  double residual_;
};

}  // namespace qbmor
