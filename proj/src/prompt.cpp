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

#include "vagent/prompt.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <utility>

#include "vagent/error.hpp"
#include "vagent/prompt_template_text.hpp"

namespace vagent {
namespace {

// Single pass so placeholder-like text inside values is left alone.
std::string substitute(std::string_view tmpl,
                       std::initializer_list<std::pair<std::string_view, std::string_view>> vars) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '{') {
      for (const auto& [name, value] : vars) {
        if (tmpl.substr(i, name.size()) == name) {
          out += value;
          i += name.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[i++];
  }
  return out;
}

}  // namespace

PromptTemplate PromptTemplate::standard() {
  static const PromptTemplate tmpl = parse(kStandardPromptTemplate);
  return tmpl;
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("vagent-prompt-template ", 0) != 0) {
    throw ParseError("prompt template must start with 'vagent-prompt-template <version>'", 1, 1);
  }
  PromptTemplate tmpl;
  tmpl.version = line.substr(std::string_view("vagent-prompt-template ").size());
  int section = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line == "---") {
      ++section;
      continue;
    }
    if (section == 0) {
      tmpl.prefix += line + "\n";
    } else if (section == 1) {
      if (!tmpl.question.empty()) tmpl.question += "\n";
      tmpl.question += line;
    } else {
      throw ParseError("text outside template sections", line_no, 1);
    }
  }
  if (section != 1) throw ParseError("prompt template needs two '---' separators", line_no, 1);
  if (tmpl.question.find("{action}") == std::string::npos) {
    throw ValidationError("question template lacks {action}");
  }
  return tmpl;
}

PromptTemplate PromptTemplate::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prompt template " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string render_memory(const std::vector<std::string>& entries) {
  if (entries.empty()) return "No actions taken yet.";
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) out += "\n";
    out += "Step " + std::to_string(i + 1) + ": " + entries[i];
  }
  return out;
}

std::string render_prefix(const PromptTemplate& tmpl, const PromptContext& ctx) {
  std::string_view ui = ctx.ui;
  if (!ui.empty() && ui.back() == '\n') ui.remove_suffix(1);
  const std::string memory = render_memory(ctx.memory);
  return substitute(tmpl.prefix, {{"{goal}", ctx.goal}, {"{memory}", memory}, {"{ui}", ui}});
}

std::string render_question(const PromptTemplate& tmpl, const Action& action) {
  return substitute(tmpl.question, {{"{action}", action.descriptor}});
}

std::vector<VerificationPrompt> build_prompts(std::shared_ptr<const PromptContext> ctx,
                                              const ActionSpace& space,
                                              const PromptTemplate& tmpl) {
  auto prefix = std::make_shared<const std::string>(render_prefix(tmpl, *ctx));
  std::vector<VerificationPrompt> out;
  out.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    VerificationPrompt p;
    p.context = ctx;
    p.shared_prefix = prefix;
    p.question = render_question(tmpl, space.actions[i]);
    p.action_ref = static_cast<int>(i);
    p.action = space.actions[i];
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<VerificationPrompt> build_prompts(const UiState& state, std::string_view goal,
                                              const WorkingMemory& memory,
                                              const ActionSpace& space,
                                              const PromptTemplate& tmpl) {
  auto ctx = std::make_shared<PromptContext>();
  ctx->goal = std::string(goal);
  ctx->memory = memory.entries;
  ctx->state = state;
  ctx->ui = streamline(state);
  ctx->step = space.step;
  return build_prompts(std::move(ctx), space, tmpl);
}

}  // namespace vagent
