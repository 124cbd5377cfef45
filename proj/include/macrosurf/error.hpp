// Copyright the macrosurf contributors.
// SPDX-License-Identifier: Apache-2.0

#ifndef MACROSURF_ERROR_HPP
#define MACROSURF_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace macrosurf
{

// Base class for every error raised by the library. Subclasses name the module
// that detected the problem; messages are meant to be shown to the user as-is.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error
{
public:
  ParseError(const std::string &msg, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line)
  {
  }
  int Line() const { return line_; }

private:
  int line_;
};

class GeometryError : public Error
{
public:
  using Error::Error;
};

// Requested mesh length does not resolve a geometric feature.
class RefinementError : public GeometryError
{
public:
  using GeometryError::GeometryError;
};

class MatchingError : public Error
{
public:
  using Error::Error;
};

class AssemblyError : public Error
{
public:
  using Error::Error;
};

class IncidenceError : public Error
{
public:
  using Error::Error;
};

class ReductionError : public Error
{
public:
  using Error::Error;
};

class LayoutError : public Error
{
public:
  using Error::Error;
};

class DimensionError : public Error
{
public:
  using Error::Error;
};

class ExcitationError : public Error
{
public:
  using Error::Error;
};

class FactorizationError : public Error
{
public:
  using Error::Error;
};

class ProximityError : public Error
{
public:
  using Error::Error;
};

class ConfigError : public Error
{
public:
  using Error::Error;
};

// Iterative solve stopped at the iteration limit; carries the relative
// residual after every iteration.
class ConvergenceError : public Error
{
public:
  ConvergenceError(const std::string &what, std::vector<double> history)
      : Error(what), history_(std::move(history))
  {
  }
  const std::vector<double> &History() const { return history_; }

private:
  std::vector<double> history_;
};

}  // namespace macrosurf

#endif  // MACROSURF_ERROR_HPP
