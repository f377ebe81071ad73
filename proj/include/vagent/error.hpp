// Copyright 2026 The vagent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VAGENT_ERROR_HPP_
#define VAGENT_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace vagent {

// Base for every error raised by the library. The CLI maps the subclasses
// onto exit codes (data errors -> 2, everything else at runtime -> 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input data (labels outside a space, unknown ids,
// unfinished sessions handed to export, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

class ScoringError : public Error {
 public:
  ScoringError(const std::string& backend, const std::string& what)
      : Error("scorer '" + backend + "': " + what), backend_(backend) {}
  const std::string& backend() const { return backend_; }

 private:
  std::string backend_;
};

class ExecutionError : public Error {
 public:
  using Error::Error;
};

class CompletionError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace vagent

#endif  // VAGENT_ERROR_HPP_
