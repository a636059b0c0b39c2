#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chainexit
{

//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

//! Malformed problem definition (bad expression variables, domains, sets).
class SpecError : public Error
{
  public:
    using Error::Error;
};

//! Configuration file or override problems.
class ConfigError : public Error
{
  public:
    using Error::Error;
};

//! Numerical failure: singular solves, non-convergence, invalid samples.
class NumericError : public Error
{
  public:
    using Error::Error;
};

}  // namespace chainexit
