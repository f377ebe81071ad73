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

#ifndef VAGENT_SIM_WORLD_HPP_
#define VAGENT_SIM_WORLD_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vagent/ui_model.hpp"

// Static definitions of the simulated apps, loaded from data/apps/*.json.
//
// An app file holds screens (static elements and paged repeat lists), the
// transitions out of each screen, the app's initial store, filler
// generators, and task templates. Text templates reference
// {field.x} {sel.x} {item.x} {store.x}; task templates additionally use
// {param} placeholders that are bound when the catalog is generated.
namespace vagent::sim {

struct RepeatDef {
  std::string list;
  int page = 6;
  Role item_role = Role::ListItem;
  std::string item_text;
  std::string item_desc;
  std::string item_flags;
  std::string item_checked;
};

struct ElementDef {
  std::string key;
  Role role = Role::Label;
  std::string text;
  std::string desc;
  std::string flags;    // letters: c l s h e
  std::string checked;  // binding such as "store.wifi" or "field.category=Food"
  std::optional<RepeatDef> repeat;
};

// One effect of a transition; `op` names the operation and `args` carries
// its operands verbatim from the file.
struct EffectDef {
  std::string op;
  nlohmann::json args;
};

struct ScreenDef {
  std::string id;
  std::string title;
  std::vector<ElementDef> elements;
  // "click:key" / "long_press:key" -> effects
  std::map<std::string, std::vector<EffectDef>> transitions;
};

struct FillerDef {
  int min_count = 0;
  int max_count = 0;
  std::string unique;              // field whose values must be distinct
  nlohmann::json record;           // field -> "pool:<name>" or literal
};

struct TaskTemplate {
  std::string id;
  std::string goal;
  std::map<std::string, std::string> params;  // param -> pool name
  nlohmann::json init;                        // list of ops
  nlohmann::json oracle;                      // list of steps
  nlohmann::json success;                     // list of conditions
  std::optional<std::string> answer;
};

struct AppDef {
  std::string id;
  std::string name;
  std::string category;
  bool held_out = false;
  bool launcher = false;
  std::string initial;
  std::vector<ScreenDef> screens;
  nlohmann::json store;
  std::map<std::string, FillerDef> fillers;  // list -> generator
  std::vector<TaskTemplate> tasks;

  int screen_index(const std::string& screen) const;
  const ScreenDef& screen(const std::string& screen) const;
};

class World {
 public:
  // Loads every *.json under `dir` except pools.json, which holds the named
  // value pools. Throws DataError/ValidationError.
  static World load(const std::string& dir);
  static World load_default();
  static World from_json(const std::vector<nlohmann::json>& apps, const nlohmann::json& pools);

  const std::vector<AppDef>& apps() const { return apps_; }
  const AppDef& app(const std::string& id) const;
  const AppDef* find_app(const std::string& id_or_name) const;
  int app_index(const std::string& id) const;
  const AppDef& launcher() const;
  const std::vector<std::string>& pool(const std::string& name) const;

 private:
  std::vector<AppDef> apps_;
  std::map<std::string, std::vector<std::string>> pools_;
};

std::string default_data_dir();

}  // namespace vagent::sim

#endif  // VAGENT_SIM_WORLD_HPP_
