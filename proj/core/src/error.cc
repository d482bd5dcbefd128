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

#include "sfl/error.h"

namespace sfl {

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse:
      return "parse error";
    case ErrorKind::kValidation:
      return "validation error";
    case ErrorKind::kInvalidArgument:
      return "invalid argument";
    case ErrorKind::kInfeasible:
      return "infeasible";
    case ErrorKind::kNonConvergence:
      return "did not converge";
    case ErrorKind::kGridTooLarge:
      return "grid too large";
    case ErrorKind::kDivergence:
      return "divergence";
    case ErrorKind::kIo:
      return "i/o error";
  }
  return "error";
}

}  // namespace sfl
