// Copyright 2026 The trajcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRAJCAST__ERROR_HPP_
#define TRAJCAST__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace trajcast
{

/// Base of every exception raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform for an operation.
class DimensionError : public Error
{
public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error
{
public:
  using Error::Error;
};

/// Input text could not be parsed. `line()` is 1-based, 0 when unknown.
class ParseError : public Error
{
public:
  ParseError(const std::string & what, std::size_t line)
  : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line)
  {
  }
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Input was well-formed but semantically invalid (out-of-bounds, duplicates, empty classes).
class DataError : public Error
{
public:
  using Error::Error;
};

/// Optimization diverged or produced non-finite values.
class TrainingError : public Error
{
public:
  using Error::Error;
};

/// Run configuration is missing, malformed or contains unknown keys.
class ConfigError : public Error
{
public:
  using Error::Error;
};

}  // namespace trajcast

#endif  // TRAJCAST__ERROR_HPP_
