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

#ifndef VAGENT_MEMORY_HPP_
#define VAGENT_MEMORY_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vagent/action_space.hpp"
#include "vagent/ui_model.hpp"

namespace vagent {

enum class MemoryMode { ActionHistory, RuleBased, External };

std::string_view to_string(MemoryMode mode);
std::optional<MemoryMode> memory_mode_from_string(std::string_view name);

struct WorkingMemory {
  MemoryMode mode = MemoryMode::RuleBased;
  std::vector<std::string> entries;

  bool operator==(const WorkingMemory&) const = default;
};

// Summaries produced outside the process (an LLM behind the completion
// endpoint). Implementations throw on failure.
class StepSummarizer {
 public:
  virtual ~StepSummarizer() = default;
  virtual std::string summarize(std::string_view goal, std::string_view state_streamline,
                                const WorkingMemory& memory,
                                std::string_view executed_action) = 0;
};

// Templated sentence from the executed action and the UI change it caused,
// e.g. "Clicked the 'Save' button. Now an 'OK' text box appears."
std::string rule_based_summary(const Action& executed, const UiState& before,
                               const UiDelta& delta);

// Appends exactly one entry. External mode falls back to the rule-based
// sentence when the summarizer is missing or throws; returns false in that
// case.
bool update_memory(WorkingMemory& memory, const Action& executed, const UiState& before,
                   const UiState& after, const UiDelta& delta, std::string_view goal = {},
                   StepSummarizer* summarizer = nullptr);

}  // namespace vagent

#endif  // VAGENT_MEMORY_HPP_
