#include "qbmor/errors.hpp"

#include <sstream>

namespace qbmor {

namespace {

std::string with_shift(std::complex<double> s, const std::string& what) {
  std::ostringstream os;
  os.precision(17);
  os << what << " (shift s = " << s.real();
  if (s.imag() != 0.0) os << (s.imag() < 0 ? " - " : " + ") << std::abs(s.imag()) << "i";
  os << ")";
  return os.str();
}

std::string with_step(long step, double residual, const std::string& what) {
  std::ostringstream os;
  os << what << " at step " << step << " (residual " << residual << ")";
  return os.str();
}

}  // namespace

SingularPencilError::SingularPencilError(std::complex<double> shift, const std::string& what)
    : Error(with_shift(shift, what)), shift_(shift) {}

ConvergenceError::ConvergenceError(long step, double residual, const std::string& what)
    : Error(with_step(step, residual, what)), step_(step), residual_(residual) {}

}  // namespace qbmor
