// Copyright 2026 The qabo Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qabo {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class UnsupportedFamily : public Error {
 public:
  using Error::Error;
};

// Gram matrix could not be factorized even after jitter escalation.
class IllConditioned : public Error {
 public:
  using Error::Error;
};

class IntegratorError : public Error {
 public:
  IntegratorError(const std::string& what, double t) : Error(what), t_(t) {}
  double time() const { return t_; }

 private:
  double t_;
};

// Raised by an objective; carries the parameter vector that failed.
class ObjectiveError : public Error {
 public:
  ObjectiveError(const std::string& what, std::vector<double> theta)
      : Error(what), theta_(std::move(theta)) {}
  const std::vector<double>& theta() const { return theta_; }

 private:
  std::vector<double> theta_;
};

// Malformed input file; line is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace qabo
