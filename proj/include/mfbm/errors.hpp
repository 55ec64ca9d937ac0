#pragma once

#include <stdexcept>
#include <string>

namespace mfbm {

// Inputs violate a documented constraint (bad parameter, bad flag, size mismatch).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Evaluation point outside the domain of the function (spectral pole, inadmissible perturbation).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Factorization failure, non-finite intermediate, quadrature that did not converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested problem size exceeds what the dense kernels can hold in memory.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Largest n for which dense n x n work matrices are allocated.
inline constexpr long long kMaxDenseN = 16384;

}  // namespace mfbm
