// Copyright 2026 The semtent Authors.
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

#ifndef SEMTENT_ERRORS_H_
#define SEMTENT_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semtent {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data is malformed or violates a record invariant. `line` is the
// 1-based line in the source file, or 0 when the value did not come from a
// file.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class ValidationError : public DataError {
 public:
  ValidationError(std::string field, const std::string& what,
                  std::size_t line = 0)
      : DataError(field + ": " + what, line), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// A measure cannot be computed for the given inputs (too few samples, single
// class labels, missing token).
class UndefinedMeasureError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Failures talking to an NLI or generator endpoint.
class TransportError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public TransportError {
 public:
  using TransportError::TransportError;
};

class HttpStatusError : public TransportError {
 public:
  HttpStatusError(int status, const std::string& what)
      : TransportError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// The endpoint answered 2xx but the body does not match the wire schema.
class SchemaError : public TransportError {
 public:
  using TransportError::TransportError;
};

}  // namespace semtent

#endif  // SEMTENT_ERRORS_H_
