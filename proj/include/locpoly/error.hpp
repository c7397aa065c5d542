#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace locpoly {

//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error
{
public:
  using Error::Error;
};

//! A user-supplied callable (kernel, density) produced NaN/Inf.
class EvaluationError : public Error
{
public:
  using Error::Error;
};

class SingularGramError : public Error
{
public:
  using Error::Error;
};

//! No observation has positive kernel weight at the evaluation point.
class EmptyWindowError : public Error
{
public:
  using Error::Error;
};

//! The local design matrix is singular or its condition number exceeds the
//! hard threshold. Never regularized.
class SingularDesignError : public Error
{
public:
  using Error::Error;
};

class DegenerateScanError : public Error
{
public:
  using Error::Error;
};

class DegenerateMetricError : public Error
{
public:
  using Error::Error;
};

class PreconditionError : public Error
{
public:
  using Error::Error;
};

//! Malformed input file; carries the 1-based row (file line) number.
class InputError : public Error
{
public:
  InputError(std::size_t row, const std::string& what)
    : Error("row " + std::to_string(row) + ": " + what)
    , row_(row)
  {}

  std::size_t row() const { return row_; }

private:
  std::size_t row_;
};

} // namespace locpoly
