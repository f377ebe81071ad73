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

#ifndef VAGENT_SIM_DEVICE_HPP_
#define VAGENT_SIM_DEVICE_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vagent/action_space.hpp"
#include "vagent/sim/world.hpp"
#include "vagent/ui_model.hpp"

namespace vagent::sim {

// A parameterised task with its parameters bound. init/oracle/success are the
// template's lists with every {param} substituted.
struct TaskSpec {
  std::string id;
  std::string app;
  std::string template_id;
  std::string goal;
  std::map<std::string, std::string> params;
  bool held_out = false;
  std::uint64_t seed = 0;
  nlohmann::json init = nlohmann::json::array();
  nlohmann::json oracle = nlohmann::json::array();
  nlohmann::json success = nlohmann::json::array();
  std::optional<std::string> answer;
  int max_oracle_length = 0;
};

nlohmann::json task_to_json(const TaskSpec& task);
TaskSpec task_from_json(const nlohmann::json& j);

// counts: app id -> number of tasks. Apps are visited in world order and each
// app's templates are used round-robin; parameter tuples are distinct within
// an app.
std::vector<TaskSpec> catalog(const World& world, std::uint64_t seed,
                              const std::map<std::string, int>& counts);

// Binds one template. The task id is "<app>.<template>#<index>" and its seed
// derives from `seed` and the id.
TaskSpec instantiate(const World& world, const std::string& app, const std::string& template_id,
                     const std::map<std::string, std::string>& params, std::uint64_t seed, int index = 0);

// Throws DataError for an unknown id.
const TaskSpec& find_task(const std::vector<TaskSpec>& tasks, const std::string& id);

// `per_app` tasks for every non-launcher app, optionally skipping held-out ones.
std::map<std::string, int> uniform_counts(const World& world, int per_app, bool include_held_out = true);

struct SelRef {
  std::string list;
  int index = -1;

  bool operator==(const SelRef&) const = default;
};

struct Frame {
  int app = 0;
  int screen = 0;
  std::map<std::string, std::string> fields;  // empty values are erased
  std::map<std::string, int> offsets;         // zero offsets are erased
  std::optional<SelRef> sel;

  bool operator==(const Frame&) const = default;
};

// What an executed action did; decides whether the reverse map applies.
enum class EffectKind {
  NoOp,
  PushedScreen,      // exactly one frame pushed, nothing else changed
  PoppedScreen,
  LaunchedFromHome,  // OpenApp with only the home frame below
  Launched,
  FilledEmpty,       // TypeText into an empty field
  EditedText,
  Scrolled,
  Mutated,           // store/selection/field changes, possibly with navigation
  WentHome,
  Terminal,
};

std::string_view to_string(EffectKind kind);

// True when executing the reverse of `executed` is guaranteed to restore the
// prior UiState.
bool reversible(ActionType executed, EffectKind kind);

class SimDevice {
 public:
  explicit SimDevice(const World& world);

  // Installs the task's initial device state and precomputes the oracle path.
  UiState reset(const TaskSpec& task, std::uint64_t seed = 0);

  const UiState& state() const { return ui_; }
  const TaskSpec& task() const { return task_; }
  const World& world() const { return *world_; }

  // Throws ExecutionError for unknown, invisible or unlicensed targets and for
  // content-requiring actions without content.
  EffectKind execute(const Action& action);

  // Oracle action for the current state. Throws ExecutionError when the state
  // is not on the oracle path.
  Action oracle_action() const;
  bool on_path() const;
  const std::vector<Action>& oracle_path() const { return path_actions_; }

  bool success() const;

  // Content for TypeText/OpenApp/Answer. Throws CompletionError when the
  // oracle has nothing sensible to offer.
  std::string complete(const Action& action) const;

  // Key identifying everything the UI and success predicate depend on: top
  // frame, stores, answer and completion flag.
  std::string snapshot_key() const;

  std::size_t stack_depth() const { return stack_.size(); }
  const std::vector<Frame>& stack() const { return stack_; }
  const nlohmann::json& store(const std::string& app) const;
  const std::optional<std::string>& answer() const { return answer_; }
  bool marked_complete() const { return completed_; }

 private:
  struct Located {
    const ElementDef* def = nullptr;
    int element = -1;
    int item = -1;  // record index for repeat items
  };

  void render();
  Located locate(int id) const;
  Frame home_frame() const;
  Frame initial_frame(int app) const;
  EffectKind apply_transition(const std::vector<EffectDef>& effects, const ElementDef* def, int item);
  void normalize();
  Action step_action(const std::string& verb, const std::string& key, int item,
                     std::optional<ScrollDirection> dir = std::nullopt) const;
  void run_oracle_step(const nlohmann::json& step, std::vector<std::pair<std::string, Action>>& out);
  bool holds(const nlohmann::json& cond) const;

  const World* world_;
  TaskSpec task_;
  std::vector<Frame> stack_;
  std::vector<nlohmann::json> stores_;
  std::optional<std::string> answer_;
  bool completed_ = false;
  UiState ui_;

  std::map<std::string, std::size_t> path_index_;
  std::vector<Action> path_actions_;
};

}  // namespace vagent::sim

#endif  // VAGENT_SIM_DEVICE_HPP_
