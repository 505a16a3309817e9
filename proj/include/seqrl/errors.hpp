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

#include <stdexcept>
#include <string>

namespace seqrl {

// One exception type per contract violation so callers and tests can catch
// the exact failure they expect.
#define SEQRL_ERROR_TYPE(Name)                          \
  struct Name : std::runtime_error {                    \
    explicit Name(const std::string& msg)               \
        : std::runtime_error(std::string(#Name ": ") + msg) {} \
  }

SEQRL_ERROR_TYPE(EmptySentence);
SEQRL_ERROR_TYPE(LineCountMismatch);
SEQRL_ERROR_TYPE(OversizedPair);
SEQRL_ERROR_TYPE(EmptyReference);
SEQRL_ERROR_TYPE(ListMismatch);
SEQRL_ERROR_TYPE(InvalidToken);
SEQRL_ERROR_TYPE(WeightMismatch);
SEQRL_ERROR_TYPE(CorruptCheckpoint);
SEQRL_ERROR_TYPE(DivergedTraining);
SEQRL_ERROR_TYPE(MissingInitModel);
SEQRL_ERROR_TYPE(VocabMismatch);
SEQRL_ERROR_TYPE(SpaceTooLarge);
SEQRL_ERROR_TYPE(ConfigError);
SEQRL_ERROR_TYPE(IoError);

#undef SEQRL_ERROR_TYPE

}  // namespace seqrl
