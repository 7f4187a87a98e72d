// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_ERRORS_HPP
#define SCHWARZEIG_ERRORS_HPP

#include <stdexcept>
#include <string>

#include "schwarzeig/types.hpp"

namespace schwarzeig
{

// Base of every exception thrown by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error
{
public:
  using Error::Error;
};

class SingularMatrix : public Error
{
public:
  using Error::Error;
};

// Raised by an SPD factorization that meets a non-positive pivot. The pivot index refers
// to the elimination order of the factorization.
class IndefiniteMatrix : public Error
{
public:
  IndefiniteMatrix(const std::string &what, Index pivot) : Error(what), pivot_(pivot) {}
  Index pivot() const noexcept { return pivot_; }

private:
  Index pivot_;
};

class EmptyBasis : public Error
{
public:
  using Error::Error;
};

class ShiftOutOfRange : public Error
{
public:
  ShiftOutOfRange(const std::string &what, double shift, double bound)
    : Error(what), shift_(shift), bound_(bound)
  {
  }
  double shift() const noexcept { return shift_; }
  double bound() const noexcept { return bound_; }

private:
  double shift_, bound_;
};

class ClusterTooLarge : public Error
{
public:
  using Error::Error;
};

class ProblemTooLarge : public Error
{
public:
  using Error::Error;
};

}  // namespace schwarzeig

#endif  // SCHWARZEIG_ERRORS_HPP
