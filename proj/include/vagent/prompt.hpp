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

#ifndef VAGENT_PROMPT_HPP_
#define VAGENT_PROMPT_HPP_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vagent/action_space.hpp"
#include "vagent/memory.hpp"
#include "vagent/ui_model.hpp"

namespace vagent {

// Prompt template file:
//
//   vagent-prompt-template <version>
//   ---
//   <prefix template with {goal} {memory} {ui}>
//   ---
//   <question template with {action}>
//
// Everything before the second "---" is rendered once per step and shared by
// all candidates.
struct PromptTemplate {
  std::string version;
  std::string prefix;
  std::string question;

  static PromptTemplate standard();
  static PromptTemplate parse(std::string_view text);
  static PromptTemplate load(const std::string& path);
};

// Per-step inputs shared by every candidate.
struct PromptContext {
  std::string goal;
  std::vector<std::string> memory;
  UiState state;
  std::string ui;  // streamline(state)
  int step = 0;
};

struct VerificationPrompt {
  std::shared_ptr<const PromptContext> context;
  std::shared_ptr<const std::string> shared_prefix;
  std::string question;
  int action_ref = 0;
  Action action;

  std::string text() const { return *shared_prefix + question; }
};

std::string render_memory(const std::vector<std::string>& entries);

std::string render_prefix(const PromptTemplate& tmpl, const PromptContext& ctx);
std::string render_question(const PromptTemplate& tmpl, const Action& action);

std::vector<VerificationPrompt> build_prompts(const UiState& state, std::string_view goal,
                                              const WorkingMemory& memory,
                                              const ActionSpace& space,
                                              const PromptTemplate& tmpl = PromptTemplate::standard());

std::vector<VerificationPrompt> build_prompts(std::shared_ptr<const PromptContext> ctx,
                                              const ActionSpace& space,
                                              const PromptTemplate& tmpl = PromptTemplate::standard());

}  // namespace vagent

#endif  // VAGENT_PROMPT_HPP_
