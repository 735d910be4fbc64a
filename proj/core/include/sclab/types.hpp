#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sclab {

// Phase space is R^d x R^d with d <= kMaxDim; small fixed-capacity types keep
// hot loops free of heap traffic.
constexpr int kMaxDim = 2;

using cplx = std::complex<double>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;
using PhaseMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2 * kMaxDim, 2 * kMaxDim>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Violated precondition on arguments (bad dimension, tolerance out of range...).
struct DomainError : Error {
  using Error::Error;
};

// Non-finite value produced by a model evaluator.
struct EvaluationError : Error {
  using Error::Error;
};

struct IntegrationError : Error {
  IntegrationError(const std::string& msg, double t) : Error(msg), t_reached(t) {}
  double t_reached;
};

struct InversionError : Error {
  InversionError(const std::string& msg, double r) : Error(msg), residual(r) {}
  double residual;
};

// Grid does not resolve the requested frequencies / tail mass too large.
struct ResolutionError : Error {
  using Error::Error;
};

inline double japanese(double r2) { return std::sqrt(1.0 + r2); }

}  // namespace sclab
