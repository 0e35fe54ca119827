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

#include "crsbias/errors.h"

namespace crsbias {

int ExitCodeFor(ErrorClass error_class) {
  switch (error_class) {
    case ErrorClass::kInput:
      return 2;
    case ErrorClass::kBackend:
      return 3;
    case ErrorClass::kInvariant:
      return 4;
  }
  return 4;
}

const char* BackendFailureName(BackendFailure failure) {
  switch (failure) {
    case BackendFailure::kAuth:
      return "auth";
    case BackendFailure::kTimeout:
      return "timeout";
    case BackendFailure::kEmptyCompletion:
      return "empty completion";
    case BackendFailure::kHttpStatus:
      return "http status";
    case BackendFailure::kMalformedResponse:
      return "malformed response";
  }
  return "unknown";
}

}  // namespace crsbias
