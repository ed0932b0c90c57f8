#include "filament/errors.hpp"

#include <sstream>

namespace filament {

namespace {

std::string degeneracy_message(const Vector2d& x, const Vector3d& d2) {
  std::ostringstream os;
  os << "degenerate Hessian at (" << x(0) << ", " << x(1) << "): d2 = (" << d2(0) << ", " << d2(1) << ", "
     << d2(2) << ")";
  return os.str();
}

}  // namespace

DegeneracyError::DegeneracyError(const Vector2d& x, const Vector3d& d2)
    : std::runtime_error(degeneracy_message(x, d2)), x_(x), d2_(d2) {}

DegeneracyError::DegeneracyError(const std::string& what, const Vector3d& d2)
    : std::runtime_error(what), d2_(d2) {}

FlatFilamentError::FlatFilamentError(const Vector2d& x)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "||A||_R vanishes at (" << x(0) << ", " << x(1) << ")";
        return os.str();
      }()),
      x_(x) {}

}  // namespace filament
