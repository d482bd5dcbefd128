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

// The sfl-lab command line: generate, optimize, simulate, oracle, sweep.

#ifndef SFL_TOOLS_APP_H_
#define SFL_TOOLS_APP_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sfl/error.h"

namespace sfl::cli {

// Stable process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;        // bad flags, unreadable or invalid input
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitGridTooLarge = 4;
inline constexpr int kExitCheckFailed = 5;  // oracle suite found a violation
inline constexpr int kExitNoConvergence = 6;

int exit_code_for(ErrorKind kind);

// Default output directory when --out is absent; falls back to ./sfl-out.
inline constexpr const char* kOutDirEnv = "SFL_LAB_OUT_DIR";

// Frozen CSV headers.
inline constexpr std::string_view kSimulateCsvHeader =
    "run,round,sim_seconds,loss,eval_loss,accuracy,batch,cuts";
inline constexpr std::string_view kSweepCsvHeader =
    "axis,value,policy,theta_s,rounds_bound,total_time_s,plateau_round,"
    "plateau_time_s,batch,cuts";
inline constexpr std::string_view kOracleCsvHeader =
    "case,seed,brute_theta_s,bcd_theta_s,rel_gap,never_below,within_5pct,"
    "cut_match";

// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string config_hash(std::string_view text);

// args excludes the program name. Writes human-readable progress to `out`,
// diagnostics to `err`, and reports under the output directory.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace sfl::cli

#endif  // SFL_TOOLS_APP_H_
