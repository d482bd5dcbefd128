// Copyright 2026 The sfl-lab Authors
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

#ifndef SFL_ERROR_H_
#define SFL_ERROR_H_

#include <stdexcept>
#include <string>

namespace sfl {

enum class ErrorKind {
  kParse,
  kValidation,
  kInvalidArgument,
  kInfeasible,
  kNonConvergence,
  kGridTooLarge,
  kDivergence,
  kIo,
};

const char* error_kind_name(ErrorKind kind);

// All library failures are reported through this exception type. The kind
// drives the CLI exit code mapping.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace sfl

#endif  // SFL_ERROR_H_
