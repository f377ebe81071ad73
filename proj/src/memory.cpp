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

#include "vagent/memory.hpp"

#include <cctype>

namespace vagent {
namespace {

std::string_view role_noun(Role role) {
  switch (role) {
    case Role::Button: return "button";
    case Role::Checkbox: return "checkbox";
    case Role::Textbox: return "text box";
    case Role::ListItem: return "list item";
    case Role::Label: return "label";
    case Role::Container: return "container";
  }
  return "element";
}

std::string article_for(std::string_view word) {
  if (!word.empty()) {
    const auto c = static_cast<char>(std::tolower(static_cast<unsigned char>(word.front())));
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return "an";
  }
  return "a";
}

std::string element_phrase(const std::string& label, Role role) {
  return "'" + label + "' " + std::string(role_noun(role));
}

std::string target_phrase(const Action& a, const UiState& before) {
  if (!a.target) return "screen";
  const auto* e = find_element(before, *a.target);
  if (e == nullptr) return "element";
  const auto& label =
      e->role == Role::Textbox && !e->content_desc.empty() ? e->content_desc : e->label();
  return "the " + element_phrase(label, e->role);
}

std::string action_sentence(const Action& a, const UiState& before) {
  const std::string content = a.content.value_or("");
  switch (a.type) {
    case ActionType::Click: return "Clicked " + target_phrase(a, before) + ".";
    case ActionType::LongPress: return "Long-pressed " + target_phrase(a, before) + ".";
    case ActionType::Scroll:
      return "Scrolled " + std::string(to_string(a.direction.value_or(ScrollDirection::Down))) +
             " on " + target_phrase(a, before) + ".";
    case ActionType::TypeText: return "Typed '" + content + "' into " + target_phrase(a, before) + ".";
    case ActionType::ClearText: return "Cleared " + target_phrase(a, before) + ".";
    case ActionType::OpenApp: return "Opened the " + content + " app.";
    case ActionType::Wait: return "Waited.";
    case ActionType::NavigateHome: return "Navigated home.";
    case ActionType::NavigateBack: return "Navigated back.";
    case ActionType::CompleteTask: return "Marked the task complete.";
    case ActionType::Answer: return "Answered '" + content + "'.";
  }
  return "Acted.";
}

std::string list_phrase(const std::vector<ElementSummary>& items) {
  constexpr std::size_t kShown = 3;
  std::string out;
  const std::size_t shown = std::min(items.size(), kShown);
  for (std::size_t i = 0; i < shown; ++i) {
    if (i > 0) out += (i + 1 == shown && items.size() <= kShown) ? " and " : ", ";
    out += element_phrase(items[i].label(), items[i].role);
  }
  if (items.size() > kShown) {
    out += " and " + std::to_string(items.size() - kShown) + " more elements";
  }
  return out;
}

}  // namespace

std::string_view to_string(MemoryMode mode) {
  switch (mode) {
    case MemoryMode::ActionHistory: return "action_history";
    case MemoryMode::RuleBased: return "rule_based";
    case MemoryMode::External: return "external";
  }
  return "rule_based";
}

std::optional<MemoryMode> memory_mode_from_string(std::string_view name) {
  if (name == "action_history") return MemoryMode::ActionHistory;
  if (name == "rule_based") return MemoryMode::RuleBased;
  if (name == "external") return MemoryMode::External;
  return std::nullopt;
}

std::string rule_based_summary(const Action& executed, const UiState& before,
                               const UiDelta& delta) {
  std::string out = action_sentence(executed, before);
  if (delta.empty()) return out + " There is no visible change.";
  if (!delta.appeared.empty()) {
    const auto& first = delta.appeared.front();
    const bool single = delta.appeared.size() == 1;
    out += " Now ";
    if (single) out += article_for(first.label()) + " ";
    out += list_phrase(delta.appeared);
    out += single ? " appears." : " appear.";
  }
  if (!delta.changed_text.empty()) {
    const auto& c = delta.changed_text.front();
    out += " Text changed from '" + c.before + "' to '" + c.after + "'.";
  }
  if (delta.appeared.empty() && delta.changed_text.empty()) {
    const auto n = delta.disappeared.size();
    out += " " + std::to_string(n) + (n == 1 ? " element disappeared." : " elements disappeared.");
  }
  return out;
}

bool update_memory(WorkingMemory& memory, const Action& executed, const UiState& before,
                   const UiState& after, const UiDelta& delta, std::string_view goal,
                   StepSummarizer* summarizer) {
  switch (memory.mode) {
    case MemoryMode::ActionHistory:
      memory.entries.push_back(executed.rendered());
      return true;
    case MemoryMode::RuleBased:
      memory.entries.push_back(rule_based_summary(executed, before, delta));
      return true;
    case MemoryMode::External:
      if (summarizer != nullptr) {
        try {
          memory.entries.push_back(
              summarizer->summarize(goal, streamline(after), memory, executed.rendered()));
          return true;
        } catch (const std::exception&) {
        }
      }
      memory.entries.push_back(rule_based_summary(executed, before, delta));
      return false;
  }
  return false;
}

}  // namespace vagent
