// Copyright 2026 The crsbias Authors
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

#ifndef CRSBIAS_ERRORS_H_
#define CRSBIAS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace crsbias {

// Broad failure classes. Each maps onto one process exit code of the
// crs-bias tool.
enum class ErrorClass {
  kInput,      // bad configuration, malformed file, unknown reference
  kBackend,    // text-generation backend failure
  kInvariant,  // internal invariant violated
};

int ExitCodeFor(ErrorClass error_class);

class Error : public std::runtime_error {
 public:
  Error(ErrorClass error_class, const std::string& message)
      : std::runtime_error(message), error_class_(error_class) {}

  ErrorClass error_class() const { return error_class_; }

 private:
  ErrorClass error_class_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& message)
      : Error(ErrorClass::kInput, message) {}
};

class InvariantError : public Error {
 public:
  explicit InvariantError(const std::string& message)
      : Error(ErrorClass::kInvariant, message) {}
};

enum class BackendFailure {
  kAuth,
  kTimeout,
  kEmptyCompletion,
  kHttpStatus,
  kMalformedResponse,
};

const char* BackendFailureName(BackendFailure failure);

class BackendError : public Error {
 public:
  BackendError(BackendFailure failure, const std::string& message)
      : Error(ErrorClass::kBackend,
              std::string(BackendFailureName(failure)) + ": " + message),
        failure_(failure) {}

  BackendFailure failure() const { return failure_; }

 private:
  BackendFailure failure_;
};

}  // namespace crsbias

#endif  // CRSBIAS_ERRORS_H_
