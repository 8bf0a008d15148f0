#pragma once

#include <stdexcept>
#include <string>

namespace repden {

// Numerical failures that are not caller mistakes: overflow, non-existence of
// an estimate, solver non-convergence. Precondition violations use the
// standard std::invalid_argument instead.
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// The requested moment vector is not in the open range of the moment map, so
// the corresponding natural parameter (or MLE) does not exist.
class MomentRangeError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

} // namespace repden
