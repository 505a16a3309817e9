// Copyright 2026 The seqrl Authors
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

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqrl::cli {

// Entry point behind the seqrl executable; args exclude the program name.
// Exit codes: 0 success, 1 configuration error (the message names the
// offending key or flag), 2 runtime failure.
int run(const std::vector<std::string>& args);

// Seeded self-check suites over the enumeration oracle, the gradient
// checker and the reward identities. Prints one pass/fail line per suite.
bool run_verify_suites(std::ostream& out);

}  // namespace seqrl::cli
