#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace gmrs {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec = VectorX<double>;
using Mat = MatrixX<double>;

enum class ErrorCode {
  invalid_argument,
  singular_system,
  not_converged,
  infeasible,
  io,
  validation,
  conflict,
  not_found,
  unsupported,
};

const char* to_string(ErrorCode code) noexcept;

/// Error carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gmrs
