// Copyright 2026 The GRIP Engine Authors
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

#ifndef GRIP__ERROR_HPP_
#define GRIP__ERROR_HPP_

#include <stdexcept>
#include <string>

namespace grip
{
enum class ErrorKind {
  dimension,
  parameter,
  usage,
  data,
  io,
  divergence,
  capacity,
};

const char * to_string(ErrorKind kind) noexcept;

/// Base exception for everything thrown by the engine. The kind decides the
/// C API status code and the CLI exit code.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

class DimensionError : public Error
{
public:
  explicit DimensionError(const std::string & what) : Error(ErrorKind::dimension, what) {}
};

class ParameterError : public Error
{
public:
  explicit ParameterError(const std::string & what) : Error(ErrorKind::parameter, what) {}
};

class UsageError : public Error
{
public:
  explicit UsageError(const std::string & what) : Error(ErrorKind::usage, what) {}
};

class DataError : public Error
{
public:
  explicit DataError(const std::string & what) : Error(ErrorKind::data, what) {}
};

class IoError : public Error
{
public:
  explicit IoError(const std::string & what) : Error(ErrorKind::io, what) {}
};

class DivergenceError : public Error
{
public:
  explicit DivergenceError(const std::string & what) : Error(ErrorKind::divergence, what) {}
};

class CapacityError : public Error
{
public:
  explicit CapacityError(const std::string & what) : Error(ErrorKind::capacity, what) {}
};
}  // namespace grip

#endif  // GRIP__ERROR_HPP_
