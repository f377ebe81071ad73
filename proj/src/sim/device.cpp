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

#include "vagent/sim/device.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <set>

#include "vagent/error.hpp"

namespace vagent::sim {

namespace {

using nlohmann::json;

constexpr int kAppStride = 1000000;
constexpr int kScreenStride = 10000;
constexpr int kElementStride = 100;
constexpr int kMaxRowHeight = 160;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_str(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\n") - b + 1);
}

std::string value_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  return v.dump();
}

bool truthy(const json* v) {
  if (v == nullptr) return false;
  if (v->is_boolean()) return v->get<bool>();
  if (v->is_string()) return !v->get<std::string>().empty() && v->get<std::string>() != "false";
  if (v->is_number()) return v->get<double>() != 0.0;
  return false;
}

struct Scope {
  const Frame* frame = nullptr;
  const json* store = nullptr;
  const json* sel = nullptr;
  const json* item = nullptr;
};

// Returns nullptr for unknown references; fields resolve to a temporary.
const json* lookup(const Scope& s, std::string_view ref, json& scratch) {
  const auto dot = ref.find('.');
  if (dot == std::string_view::npos) return nullptr;
  const std::string prefix(ref.substr(0, dot));
  const std::string name(ref.substr(dot + 1));
  auto member = [&](const json* obj) -> const json* {
    if (obj == nullptr || !obj->is_object()) return nullptr;
    const auto it = obj->find(name);
    return it == obj->end() ? nullptr : &*it;
  };
  if (prefix == "field") {
    if (s.frame == nullptr) return nullptr;
    const auto it = s.frame->fields.find(name);
    scratch = it == s.frame->fields.end() ? std::string() : it->second;
    return &scratch;
  }
  if (prefix == "store") return member(s.store);
  if (prefix == "sel") return member(s.sel);
  if (prefix == "item") return member(s.item);
  return nullptr;
}

std::string expand(std::string_view tmpl, const Scope& s) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const auto open = tmpl.find('{', i);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(i, open - i));
    json scratch;
    const json* v = lookup(s, tmpl.substr(open + 1, close - open - 1), scratch);
    if (v != nullptr) {
      out += value_string(*v);
    } else {
      out.append(tmpl.substr(open, close - open + 1));
    }
    i = close + 1;
  }
  out.append(tmpl.substr(std::min(i, tmpl.size())));
  return out;
}

bool eval_binding(const std::string& binding, const Scope& s) {
  if (binding.empty()) return false;
  json scratch;
  const auto eq = binding.find('=');
  if (eq == std::string::npos) return truthy(lookup(s, binding, scratch));
  const json* v = lookup(s, std::string_view(binding).substr(0, eq), scratch);
  return v != nullptr && value_string(*v) == binding.substr(eq + 1);
}

json expand_value(const json& v, const Scope& s) {
  return v.is_string() ? json(expand(v.get<std::string>(), s)) : v;
}

ElementFlags parse_flags(const std::string& letters) {
  ElementFlags f;
  for (char c : letters) {
    switch (c) {
      case 'c': f.clickable = true; break;
      case 'l': f.long_clickable = true; break;
      case 's':
      case 'h': f.scrollable = true; break;
      case 'e': f.editable = true; break;
      default: break;
    }
  }
  return f;
}

const json& list_of(const json& store, const std::string& name) {
  static const json kEmpty = json::array();
  const auto it = store.find(name);
  return it != store.end() && it->is_array() ? *it : kEmpty;
}

bool matches(const json& record, const json& where) {
  for (const auto& [k, v] : where.items()) {
    const auto it = record.find(k);
    if (it == record.end() || *it != v) return false;
  }
  return true;
}

void bind_params(json& j, const std::map<std::string, std::string>& params) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    for (const auto& [k, v] : params) {
      const std::string ph = "{" + k + "}";
      std::string out;
      std::size_t pos = 0;
      for (auto hit = s.find(ph); hit != std::string::npos; hit = s.find(ph, pos)) {
        out.append(s, pos, hit - pos);
        out += v;
        pos = hit + ph.size();
      }
      out.append(s, pos, std::string::npos);
      s = std::move(out);
    }
    j = s;
  } else if (j.is_array() || j.is_object()) {
    for (auto& child : j) bind_params(child, params);
  }
}

template <typename Rng>
std::size_t pick(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

std::string_view to_string(EffectKind kind) {
  switch (kind) {
    case EffectKind::NoOp: return "noop";
    case EffectKind::PushedScreen: return "pushed";
    case EffectKind::PoppedScreen: return "popped";
    case EffectKind::LaunchedFromHome: return "launched_from_home";
    case EffectKind::Launched: return "launched";
    case EffectKind::FilledEmpty: return "filled_empty";
    case EffectKind::EditedText: return "edited_text";
    case EffectKind::Scrolled: return "scrolled";
    case EffectKind::Mutated: return "mutated";
    case EffectKind::WentHome: return "went_home";
    case EffectKind::Terminal: return "terminal";
  }
  return "noop";
}

bool reversible(ActionType executed, EffectKind kind) {
  switch (executed) {
    case ActionType::Click:
    case ActionType::LongPress: return kind == EffectKind::PushedScreen;
    case ActionType::TypeText: return kind == EffectKind::FilledEmpty;
    case ActionType::Scroll: return kind == EffectKind::Scrolled;
    case ActionType::OpenApp: return kind == EffectKind::LaunchedFromHome;
    default: return false;
  }
}

// ---------------------------------------------------------------- catalog

nlohmann::json task_to_json(const TaskSpec& t) {
  json j{{"id", t.id},         {"app", t.app},       {"template", t.template_id},
         {"goal", t.goal},     {"params", t.params}, {"held_out", t.held_out},
         {"seed", t.seed},     {"init", t.init},     {"oracle", t.oracle},
         {"success", t.success}, {"max_oracle_length", t.max_oracle_length}};
  j["answer"] = t.answer ? json(*t.answer) : json(nullptr);
  return j;
}

TaskSpec task_from_json(const nlohmann::json& j) {
  try {
    TaskSpec t;
    t.id = j.at("id").get<std::string>();
    t.app = j.at("app").get<std::string>();
    t.template_id = j.at("template").get<std::string>();
    t.goal = j.at("goal").get<std::string>();
    t.params = j.at("params").get<std::map<std::string, std::string>>();
    t.held_out = j.at("held_out").get<bool>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.init = j.at("init");
    t.oracle = j.at("oracle");
    t.success = j.at("success");
    if (!j.at("answer").is_null()) t.answer = j["answer"].get<std::string>();
    t.max_oracle_length = j.at("max_oracle_length").get<int>();
    return t;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed task: ") + e.what());
  }
}

const TaskSpec& find_task(const std::vector<TaskSpec>& tasks, const std::string& id) {
  for (const auto& t : tasks) {
    if (t.id == id) return t;
  }
  throw DataError("unknown task id '" + id + "'");
}

std::map<std::string, int> uniform_counts(const World& world, int per_app, bool include_held_out) {
  std::map<std::string, int> out;
  for (const auto& a : world.apps()) {
    if (a.launcher || a.tasks.empty()) continue;
    if (a.held_out && !include_held_out) continue;
    out[a.id] = per_app;
  }
  return out;
}

TaskSpec instantiate(const World& world, const std::string& app_id, const std::string& template_id,
                     const std::map<std::string, std::string>& params, std::uint64_t seed, int index) {
  const AppDef& app = world.app(app_id);
  const TaskTemplate* found = nullptr;
  for (const auto& t : app.tasks) {
    if (t.id == template_id) found = &t;
  }
  if (found == nullptr) throw DataError("app '" + app.id + "' has no task template '" + template_id + "'");
  const TaskTemplate& tmpl = *found;
  for (const auto& [p, pool] : tmpl.params) {
    if (!params.count(p)) throw ValidationError(app.id + "." + tmpl.id + ": missing parameter '" + p + "'");
  }
  const int k = index;
  TaskSpec t;
  t.id = app.id + "." + tmpl.id + "#" + std::to_string(k);
  t.app = app.id;
  t.template_id = tmpl.id;
  t.params = params;
  t.held_out = app.held_out;
  t.seed = mix(seed, hash_str(t.id));
  json goal = tmpl.goal;
  bind_params(goal, params);
  t.goal = goal.get<std::string>();
  t.init = tmpl.init;
  t.oracle = tmpl.oracle;
  t.success = tmpl.success;
  bind_params(t.init, params);
  bind_params(t.oracle, params);
  bind_params(t.success, params);
  if (tmpl.answer) {
    json a = *tmpl.answer;
    bind_params(a, params);
    t.answer = a.get<std::string>();
  }
  // Each located list item may need one scroll per record in front of it.
  int longest = 0;
  for (const auto& [key, v] : app.store.items()) {
    if (!v.is_array()) continue;
    const auto f = app.fillers.find(key);
    longest = std::max(longest, static_cast<int>(v.size()) + (f == app.fillers.end() ? 0 : f->second.max_count));
  }
  longest += static_cast<int>(t.init.size());
  int located = 0;
  for (const auto& step : t.oracle) located += step.contains("where") ? 1 : 0;
  t.max_oracle_length = static_cast<int>(t.oracle.size()) + located * longest;
  return t;
}

std::vector<TaskSpec> catalog(const World& world, std::uint64_t seed,
                              const std::map<std::string, int>& counts) {
  for (const auto& [app, n] : counts) {
    if (n < 0) throw ValidationError("negative task count for '" + app + "'");
    if (world.find_app(app) == nullptr) throw DataError("unknown app '" + app + "'");
  }
  std::vector<TaskSpec> out;
  for (const auto& app : world.apps()) {
    const auto it = counts.find(app.id);
    if (it == counts.end() || it->second == 0) continue;
    if (app.tasks.empty()) throw DataError("app '" + app.id + "' defines no tasks");
    std::set<std::string> seen;
    for (int k = 0; k < it->second; ++k) {
      const TaskTemplate& tmpl = app.tasks[static_cast<std::size_t>(k) % app.tasks.size()];
      std::map<std::string, std::string> params;
      bool fresh = false;
      for (int attempt = 0; attempt < 500 && !fresh; ++attempt) {
        std::mt19937_64 rng(mix(mix(seed, hash_str(app.id + "/" + tmpl.id)),
                                static_cast<std::uint64_t>(k) * 1000003ULL + attempt));
        params.clear();
        std::set<std::string> used;
        for (const auto& [p, pool_name] : tmpl.params) {
          const auto& pool = world.pool(pool_name);
          std::string v;
          for (int tries = 0; tries < 100; ++tries) {
            v = pool[pick(rng, pool.size())];
            if (!used.count(v)) break;
          }
          used.insert(v);
          params[p] = v;
        }
        std::string sig = tmpl.id;
        for (const auto& [p, v] : params) sig += "\x1f" + p + "=" + v;
        fresh = seen.insert(sig).second;
      }
      if (!fresh && !tmpl.params.empty()) {
        throw DataError("not enough distinct parameters for " + app.id + "." + tmpl.id);
      }
      out.push_back(instantiate(world, app.id, tmpl.id, params, seed, k));
    }
  }
  return out;
}

// ---------------------------------------------------------------- device

SimDevice::SimDevice(const World& world) : world_(&world) {
  for (const auto& a : world_->apps()) stores_.push_back(a.store);
  stack_.push_back(home_frame());
  render();
}

Frame SimDevice::home_frame() const { return initial_frame(0); }

Frame SimDevice::initial_frame(int app) const {
  Frame f;
  f.app = app;
  const auto& def = world_->apps()[static_cast<std::size_t>(app)];
  f.screen = def.screen_index(def.initial);
  return f;
}

const nlohmann::json& SimDevice::store(const std::string& app) const {
  const int i = world_->app_index(app);
  if (i < 0) throw DataError("unknown app '" + app + "'");
  return stores_[static_cast<std::size_t>(i)];
}

UiState SimDevice::reset(const TaskSpec& task, std::uint64_t seed) {
  task_ = task;
  if (world_->find_app(task.app) == nullptr) throw DataError("unknown app for task '" + task.id + "'");
  std::mt19937_64 rng(mix(task.seed, seed));

  std::set<std::string> reserved;
  for (const auto& [k, v] : task.params) reserved.insert(v);

  stores_.clear();
  for (const auto& app : world_->apps()) {
    json store = app.store;
    for (const auto& [list, filler] : app.fillers) {
      json& arr = store[list];
      if (!arr.is_array()) arr = json::array();
      std::set<std::string> taken(reserved);
      for (const auto& rec : arr) {
        if (!filler.unique.empty() && rec.contains(filler.unique)) {
          taken.insert(value_string(rec[filler.unique]));
        }
      }
      const int n = std::uniform_int_distribution<int>(filler.min_count, filler.max_count)(rng);
      for (int i = 0; i < n; ++i) {
        for (int tries = 0; tries < 50; ++tries) {
          json rec = json::object();
          for (const auto& [field, spec] : filler.record.items()) {
            if (spec.is_string() && spec.get<std::string>().rfind("pool:", 0) == 0) {
              const auto& pool = world_->pool(spec.get<std::string>().substr(5));
              rec[field] = pool[pick(rng, pool.size())];
            } else {
              rec[field] = spec;
            }
          }
          if (!filler.unique.empty()) {
            const std::string key = value_string(rec[filler.unique]);
            if (taken.count(key)) continue;
            taken.insert(key);
          }
          arr.push_back(std::move(rec));
          break;
        }
      }
    }
    stores_.push_back(std::move(store));
  }

  for (const auto& op : task.init) {
    const std::string app_id = op.value("app", task.app);
    const int ai = world_->app_index(app_id);
    if (ai < 0) throw DataError(task.id + ": init references unknown app '" + app_id + "'");
    json& store = stores_[static_cast<std::size_t>(ai)];
    if (op.contains("insert")) {
      json& arr = store[op["insert"].get<std::string>()];
      if (!arr.is_array()) arr = json::array();
      const std::string at = op.value("at", "random");
      std::size_t pos = arr.size();
      if (at == "front") pos = 0;
      else if (at == "random") pos = pick(rng, arr.size() + 1);
      arr.insert(arr.begin() + static_cast<std::ptrdiff_t>(pos), op.at("record"));
    } else if (op.contains("set")) {
      store[op["set"].get<std::string>()] = op.at("value");
    } else if (op.contains("remove")) {
      json& arr = store[op["remove"].get<std::string>()];
      if (arr.is_array()) {
        const json& where = op.at("where");
        arr.erase(std::remove_if(arr.begin(), arr.end(), [&](const json& r) { return matches(r, where); }),
                  arr.end());
      }
    } else {
      throw DataError(task.id + ": unknown init op " + op.dump());
    }
  }

  stack_.assign(1, home_frame());
  answer_.reset();
  completed_ = false;
  normalize();
  render();

  // Walk the oracle once from a copy of the initial state.
  path_index_.clear();
  path_actions_.clear();
  const auto saved_stack = stack_;
  const auto saved_stores = stores_;
  std::vector<std::pair<std::string, Action>> path;
  for (const auto& step : task.oracle) run_oracle_step(step, path);
  if (!success()) throw DataError("oracle for task '" + task.id + "' does not reach success");
  for (std::size_t i = 0; i < path.size(); ++i) {
    path_index_[path[i].first] = i;
    path_actions_.push_back(path[i].second);
  }
  stack_ = saved_stack;
  stores_ = saved_stores;
  answer_.reset();
  completed_ = false;
  render();
  return ui_;
}

void SimDevice::normalize() {
  for (auto& f : stack_) {
    std::erase_if(f.fields, [](const auto& kv) { return kv.second.empty(); });
    const auto& screen = world_->apps()[static_cast<std::size_t>(f.app)].screens[static_cast<std::size_t>(f.screen)];
    for (auto it = f.offsets.begin(); it != f.offsets.end();) {
      int max_off = 0;
      for (const auto& e : screen.elements) {
        if (e.key == it->first && e.repeat) {
          const auto n = static_cast<int>(list_of(stores_[static_cast<std::size_t>(f.app)], e.repeat->list).size());
          max_off = std::max(0, n - e.repeat->page);
        }
      }
      it->second = std::clamp(it->second, 0, max_off);
      it = it->second == 0 ? f.offsets.erase(it) : std::next(it);
    }
  }
}

void SimDevice::render() {
  const Frame& f = stack_.back();
  const AppDef& app = world_->apps()[static_cast<std::size_t>(f.app)];
  const ScreenDef& screen = app.screens[static_cast<std::size_t>(f.screen)];
  const json& store = stores_[static_cast<std::size_t>(f.app)];
  const json* sel = nullptr;
  if (f.sel) {
    const json& arr = list_of(store, f.sel->list);
    if (f.sel->index >= 0 && f.sel->index < static_cast<int>(arr.size())) sel = &arr[static_cast<std::size_t>(f.sel->index)];
  }
  const Scope scope{&f, &store, sel, nullptr};

  UiState ui;
  ui.app_id = app.id;
  ui.screen_id = screen.id;
  const int base = f.app * kAppStride + f.screen * kScreenStride;
  ui.root.id = base;
  ui.root.role = Role::Container;
  ui.root.content_desc = screen.title;
  ui.root.bounds = {0, 0, ui.width, ui.height};

  int rows = 0;
  for (const auto& e : screen.elements) rows += e.repeat ? e.repeat->page : 1;
  const int h = std::min(kMaxRowHeight, ui.height / std::max(rows, 1));
  auto row_bounds = [&](int r, int span) { return Bounds{0, r * h, ui.width, (r + span) * h}; };

  int row = 0;
  for (std::size_t i = 0; i < screen.elements.size(); ++i) {
    const ElementDef& def = screen.elements[i];
    UiElement el;
    el.id = base + static_cast<int>(i + 1) * kElementStride;
    el.role = def.role;
    el.content_desc = expand(def.desc, scope);
    if (def.repeat) {
      const RepeatDef& rep = *def.repeat;
      const json& arr = list_of(store, rep.list);
      const int n = static_cast<int>(arr.size());
      const auto off_it = f.offsets.find(def.key);
      const int off = off_it == f.offsets.end() ? 0 : off_it->second;
      el.bounds = row_bounds(row, rep.page);
      el.flags = parse_flags(def.flags);
      el.flags.scrollable = n > rep.page;
      for (int k = 0; k < n && k < kElementStride - 1; ++k) {
        const Scope item_scope{&f, &store, sel, &arr[static_cast<std::size_t>(k)]};
        UiElement it;
        it.id = el.id + 1 + k;
        it.role = rep.item_role;
        it.text = expand(rep.item_text, item_scope);
        it.content_desc = expand(rep.item_desc, item_scope);
        it.flags = parse_flags(rep.item_flags);
        it.flags.checked = eval_binding(rep.item_checked, item_scope);
        it.flags.visible = k >= off && k < off + rep.page;
        it.bounds = it.flags.visible ? row_bounds(row + k - off, 1)
                                     : Bounds{0, el.bounds.top, ui.width, el.bounds.top};
        el.children.push_back(std::move(it));
      }
      row += rep.page;
    } else {
      el.flags = parse_flags(def.flags);
      el.flags.checked = eval_binding(def.checked, scope);
      if (el.flags.editable) {
        const auto it = f.fields.find(def.key);
        el.text = it == f.fields.end() ? std::string() : it->second;
      } else {
        el.text = expand(def.text, scope);
      }
      if (def.flags.find('h') != std::string::npos) el.scroll_axis = ScrollAxis::Horizontal;
      el.bounds = row_bounds(row, 1);
      row += 1;
    }
    ui.root.children.push_back(std::move(el));
  }
  ui_ = std::move(ui);
}

SimDevice::Located SimDevice::locate(int id) const {
  const Frame& f = stack_.back();
  Located loc;
  if (id / kAppStride != f.app || (id / kScreenStride) % 100 != f.screen) return loc;
  const auto& screen = world_->apps()[static_cast<std::size_t>(f.app)].screens[static_cast<std::size_t>(f.screen)];
  const int elem = (id / kElementStride) % 100 - 1;
  if (elem < 0 || elem >= static_cast<int>(screen.elements.size())) return loc;
  loc.def = &screen.elements[static_cast<std::size_t>(elem)];
  loc.element = elem;
  loc.item = id % kElementStride - 1;
  return loc;
}

EffectKind SimDevice::execute(const Action& action) {
  EffectKind kind = EffectKind::NoOp;
  const bool ui_dependent = !is_default(action.type);
  Located loc;
  if (ui_dependent) {
    if (!action.target) throw ExecutionError("UI action without a target: " + action.descriptor);
    const auto visible = streamline_indices(ui_);
    if (!visible.count(*action.target)) {
      throw ExecutionError("target " + std::to_string(*action.target) + " is not visible on " +
                           ui_.app_id + "/" + ui_.screen_id);
    }
    const UiElement* el = find_element(ui_, *action.target);
    const auto& fl = el->flags;
    bool licensed = false;
    switch (action.type) {
      case ActionType::Click: licensed = fl.clickable; break;
      case ActionType::LongPress: licensed = fl.long_clickable; break;
      case ActionType::Scroll: {
        const bool horizontal = el->scroll_axis == ScrollAxis::Horizontal;
        const bool dir_ok = action.direction &&
                            (horizontal == (*action.direction == ScrollDirection::Left ||
                                            *action.direction == ScrollDirection::Right));
        licensed = fl.scrollable && dir_ok;
        break;
      }
      case ActionType::TypeText:
      case ActionType::ClearText: licensed = fl.editable; break;
      default: break;
    }
    if (!licensed) throw ExecutionError("action not licensed by target flags: " + action.descriptor);
    loc = locate(*action.target);
    if (loc.def == nullptr) throw ExecutionError("target does not belong to the current screen");
  }
  if ((action.type == ActionType::TypeText || action.type == ActionType::OpenApp ||
       action.type == ActionType::Answer) &&
      !action.content) {
    throw ExecutionError("action needs content before execution: " + action.descriptor);
  }

  Frame& top = stack_.back();
  switch (action.type) {
    case ActionType::Click:
    case ActionType::LongPress: {
      const auto& screen = world_->apps()[static_cast<std::size_t>(top.app)].screens[static_cast<std::size_t>(top.screen)];
      const std::string trig =
          std::string(action.type == ActionType::Click ? "click:" : "long_press:") + loc.def->key;
      const auto it = screen.transitions.find(trig);
      if (it != screen.transitions.end()) {
        kind = apply_transition(it->second, loc.def, loc.def->repeat ? loc.item : -1);
      }
      break;
    }
    case ActionType::Scroll:
      if (loc.def->repeat && loc.item < 0) {
        const auto n = static_cast<int>(list_of(stores_[static_cast<std::size_t>(top.app)], loc.def->repeat->list).size());
        const int max_off = std::max(0, n - loc.def->repeat->page);
        int& off = top.offsets[loc.def->key];
        const int before = off;
        const bool forward = *action.direction == ScrollDirection::Down ||
                             *action.direction == ScrollDirection::Right;
        off = std::clamp(off + (forward ? 1 : -1), 0, max_off);
        if (off != before) kind = EffectKind::Scrolled;
      }
      break;
    case ActionType::TypeText: {
      if (action.content->empty()) break;
      std::string& field = top.fields[loc.def->key];
      kind = field.empty() ? EffectKind::FilledEmpty : EffectKind::EditedText;
      field += *action.content;
      break;
    }
    case ActionType::ClearText: {
      const auto it = top.fields.find(loc.def->key);
      if (it != top.fields.end() && !it->second.empty()) {
        top.fields.erase(it);
        kind = EffectKind::EditedText;
      }
      break;
    }
    case ActionType::OpenApp: {
      const AppDef* app = world_->find_app(*action.content);
      if (app == nullptr || app->launcher) break;
      // Switching apps discards the current task stack, so repeated opens
      // never grow the back stack.
      kind = stack_.size() == 1 ? EffectKind::LaunchedFromHome : EffectKind::Launched;
      stack_.resize(1);
      stack_.push_back(initial_frame(world_->app_index(app->id)));
      break;
    }
    case ActionType::Wait: break;
    case ActionType::NavigateHome:
      if (stack_.size() > 1) {
        stack_.resize(1);
        kind = EffectKind::WentHome;
      }
      break;
    case ActionType::NavigateBack:
      if (stack_.size() > 1) {
        stack_.pop_back();
        kind = EffectKind::PoppedScreen;
      }
      break;
    case ActionType::CompleteTask:
      completed_ = true;
      kind = EffectKind::Terminal;
      break;
    case ActionType::Answer:
      answer_ = *action.content;
      kind = EffectKind::Terminal;
      break;
  }
  normalize();
  render();
  return kind;
}

EffectKind SimDevice::apply_transition(const std::vector<EffectDef>& effects, const ElementDef* def,
                                       int item) {
  const std::size_t origin = stack_.size() - 1;
  const Frame start = stack_.back();
  const auto& app = world_->apps()[static_cast<std::size_t>(start.app)];
  const std::string item_list = def != nullptr && def->repeat && item >= 0 ? def->repeat->list : "";
  int pushes = 0;
  int pops = 0;
  bool mutated = false;

  auto store = [&]() -> json& { return stores_[static_cast<std::size_t>(start.app)]; };
  auto sel_record = [&]() -> json* {
    if (!start.sel) return nullptr;
    json& arr = store()[start.sel->list];
    if (!arr.is_array() || start.sel->index < 0 || start.sel->index >= static_cast<int>(arr.size())) return nullptr;
    return &arr[static_cast<std::size_t>(start.sel->index)];
  };
  auto item_record = [&]() -> json* {
    if (item < 0 || item_list.empty()) return nullptr;
    json& arr = store()[item_list];
    if (!arr.is_array() || item >= static_cast<int>(arr.size())) return nullptr;
    return &arr[static_cast<std::size_t>(item)];
  };
  auto scope = [&]() {
    const Frame* fr = origin < stack_.size() ? &stack_[origin] : &start;
    return Scope{fr, &store(), sel_record(), item_record()};
  };
  auto target_ref = [&](const std::string& ref) -> json* {
    const auto dot = ref.find('.');
    if (dot == std::string::npos) throw DataError("bad effect target '" + ref + "'");
    const std::string prefix = ref.substr(0, dot), name = ref.substr(dot + 1);
    json* obj = prefix == "store" ? &store() : prefix == "sel" ? sel_record() : prefix == "item" ? item_record() : nullptr;
    return obj == nullptr ? nullptr : &(*obj)[name];
  };
  auto origin_fields = [&]() -> std::map<std::string, std::string>* {
    return origin < stack_.size() ? &stack_[origin].fields : nullptr;
  };

  for (const auto& e : effects) {
    const json& a = e.args;
    if (e.op == "push") {
      Frame nf;
      nf.app = start.app;
      nf.screen = app.screen_index(a["push"].get<std::string>());
      nf.sel = start.sel;
      if (a.value("sel", "keep") == "item" && item >= 0 && !item_list.empty()) nf.sel = SelRef{item_list, item};
      const Scope sc = scope();
      const json fields = a.value("fields", json::object());
      for (const auto& [k, v] : fields.items()) {
        Scope with_sel = sc;
        if (nf.sel) {
          json& arr = store()[nf.sel->list];
          if (arr.is_array() && nf.sel->index >= 0 && nf.sel->index < static_cast<int>(arr.size())) {
            with_sel.sel = &arr[static_cast<std::size_t>(nf.sel->index)];
          }
        }
        const std::string val = expand(v.get<std::string>(), with_sel);
        if (!val.empty()) nf.fields[k] = val;
      }
      stack_.push_back(std::move(nf));
      ++pushes;
    } else if (e.op == "pop") {
      for (int n = a["pop"].get<int>(); n > 0 && stack_.size() > 1; --n) {
        stack_.pop_back();
        ++pops;
      }
    } else if (e.op == "launch") {
      const AppDef* target = world_->find_app(expand(a["launch"].get<std::string>(), scope()));
      if (target != nullptr && !target->launcher) {
        stack_.push_back(initial_frame(world_->app_index(target->id)));
        ++pushes;
      }
    } else if (e.op == "append") {
      json rec = json::object();
      const Scope sc = scope();
      for (const auto& [k, v] : a.at("record").items()) rec[k] = expand_value(v, sc);
      json& arr = store()[a["append"].get<std::string>()];
      if (!arr.is_array()) arr = json::array();
      if (a.value("front", false)) {
        arr.insert(arr.begin(), std::move(rec));
      } else {
        arr.push_back(std::move(rec));
      }
      mutated = true;
    } else if (e.op == "update_sel") {
      json* rec = sel_record();
      if (rec != nullptr) {
        const Scope sc = scope();
        json updated = *rec;
        for (const auto& [k, v] : a["update_sel"].items()) updated[k] = expand_value(v, sc);
        *rec = std::move(updated);
        mutated = true;
      }
    } else if (e.op == "remove_sel") {
      if (start.sel && sel_record() != nullptr) {
        json& arr = store()[start.sel->list];
        arr.erase(arr.begin() + start.sel->index);
        mutated = true;
      }
    } else if (e.op == "toggle") {
      const std::string ref = a["toggle"].get<std::string>();
      if (ref.rfind("field.", 0) == 0) {
        if (auto* fields = origin_fields()) {
          auto& v = (*fields)[ref.substr(6)];
          v = v == "true" ? "" : "true";
        }
      } else if (json* t = target_ref(ref)) {
        *t = !truthy(t);
      }
      mutated = true;
    } else if (e.op == "set") {
      const std::string ref = a["set"].get<std::string>();
      const json v = expand_value(a.at("value"), scope());
      if (ref.rfind("field.", 0) == 0) {
        if (auto* fields = origin_fields()) (*fields)[ref.substr(6)] = value_string(v);
      } else if (json* t = target_ref(ref)) {
        *t = v;
      }
      mutated = true;
    } else if (e.op == "clear") {
      const std::string ref = a["clear"].get<std::string>();
      if (ref.rfind("field.", 0) != 0) throw DataError("clear only applies to fields: " + ref);
      if (auto* fields = origin_fields()) fields->erase(ref.substr(6));
      mutated = true;
    }
  }
  if (mutated) return EffectKind::Mutated;
  if (pushes == 1 && pops == 0) return EffectKind::PushedScreen;
  if (pushes == 0 && pops > 0) return EffectKind::PoppedScreen;
  if (pushes == 0 && pops == 0) return EffectKind::NoOp;
  return EffectKind::Mutated;
}

std::string SimDevice::snapshot_key() const {
  const Frame& f = stack_.back();
  json j;
  j["app"] = f.app;
  j["screen"] = f.screen;
  j["fields"] = f.fields;
  j["offsets"] = f.offsets;
  j["sel"] = f.sel ? json{f.sel->list, f.sel->index} : json(nullptr);
  j["stores"] = stores_;
  j["answer"] = answer_ ? json(*answer_) : json(nullptr);
  j["completed"] = completed_;
  return j.dump();
}

Action SimDevice::step_action(const std::string& verb, const std::string& key, int item,
                              std::optional<ScrollDirection> dir) const {
  const Frame& f = stack_.back();
  const auto& screen = world_->apps()[static_cast<std::size_t>(f.app)].screens[static_cast<std::size_t>(f.screen)];
  int elem = -1;
  for (std::size_t i = 0; i < screen.elements.size(); ++i) {
    if (screen.elements[i].key == key) elem = static_cast<int>(i);
  }
  if (elem < 0) {
    throw DataError(task_.id + ": oracle step names '" + key + "', absent from " + ui_.app_id + "/" +
                    ui_.screen_id);
  }
  const int id = f.app * kAppStride + f.screen * kScreenStride + (elem + 1) * kElementStride +
                 (item >= 0 ? item + 1 : 0);
  const ActionType type = *action_type_from_string(verb);
  for (const auto& a : extract(ui_).actions) {
    if (a.type == type && a.target == id && a.direction == dir) return a;
  }
  throw DataError(task_.id + ": oracle step '" + verb + " " + key + "' is not available on " +
                  ui_.app_id + "/" + ui_.screen_id);
}

void SimDevice::run_oracle_step(const json& step, std::vector<std::pair<std::string, Action>>& out) {
  auto emit = [&](Action a) {
    out.emplace_back(snapshot_key(), a);
    execute(a);
  };
  if (step.contains("open")) {
    Action a = make_default_action(ActionType::OpenApp);
    a.content = world_->app(step["open"].get<std::string>()).name;
    emit(std::move(a));
    return;
  }
  if (step.contains("answer")) {
    Action a = make_default_action(ActionType::Answer);
    a.content = step["answer"].get<std::string>();
    emit(std::move(a));
    return;
  }
  static const std::pair<const char*, ActionType> kDefaults[] = {
      {"back", ActionType::NavigateBack}, {"home", ActionType::NavigateHome},
      {"wait", ActionType::Wait}, {"complete", ActionType::CompleteTask}};
  for (const auto& [name, type] : kDefaults) {
    if (step.contains(name)) {
      emit(make_default_action(type));
      return;
    }
  }
  static const char* kVerbs[] = {"click", "long_press", "type", "clear", "scroll"};
  for (const char* verb : kVerbs) {
    if (!step.contains(verb)) continue;
    const std::string key = step[verb].get<std::string>();
    const std::string action_verb = std::string(verb) == "type"    ? "type_text"
                                    : std::string(verb) == "clear" ? "clear_text"
                                                                   : verb;
    int item = -1;
    if (step.contains("where")) {
      const Frame& f = stack_.back();
      const auto& screen = world_->apps()[static_cast<std::size_t>(f.app)].screens[static_cast<std::size_t>(f.screen)];
      const ElementDef* def = nullptr;
      for (const auto& e : screen.elements) {
        if (e.key == key) def = &e;
      }
      if (def == nullptr || !def->repeat) throw DataError(task_.id + ": 'where' on non-list '" + key + "'");
      const json& arr = list_of(stores_[static_cast<std::size_t>(f.app)], def->repeat->list);
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (matches(arr[i], step["where"])) {
          item = static_cast<int>(i);
          break;
        }
      }
      if (item < 0) throw DataError(task_.id + ": no record matches " + step["where"].dump());
      for (int guard = 0; guard < 200; ++guard) {
        const auto& offs = stack_.back().offsets;
        const auto it = offs.find(key);
        const int off = it == offs.end() ? 0 : it->second;
        if (item >= off && item < off + def->repeat->page) break;
        const auto dir = item < off ? ScrollDirection::Up : ScrollDirection::Down;
        emit(step_action("scroll", key, -1, dir));
      }
    }
    std::optional<ScrollDirection> dir;
    if (action_verb == "scroll") {
      dir = scroll_direction_from_string(step.value("direction", "down"));
    }
    Action a = step_action(action_verb, key, item, dir);
    if (action_verb == "type_text") a.content = step.at("text").get<std::string>();
    emit(std::move(a));
    return;
  }
  throw DataError(task_.id + ": unknown oracle step " + step.dump());
}

bool SimDevice::holds(const json& cond) const {
  const std::string app_id = cond.value("app", task_.app);
  const json& st = store(app_id);
  if (cond.contains("exists") || cond.contains("absent")) {
    const bool want = cond.contains("exists");
    const json& arr = list_of(st, cond[want ? "exists" : "absent"].get<std::string>());
    const bool found = std::any_of(arr.begin(), arr.end(),
                                   [&](const json& r) { return matches(r, cond.at("where")); });
    return found == want;
  }
  if (cond.contains("record")) {
    const json& arr = list_of(st, cond["record"].get<std::string>());
    return std::any_of(arr.begin(), arr.end(), [&](const json& r) {
      return matches(r, cond.at("where")) && matches(r, cond.at("has"));
    });
  }
  if (cond.contains("store")) {
    const auto it = st.find(cond["store"].get<std::string>());
    return it != st.end() && *it == cond.at("equals");
  }
  if (cond.contains("answered")) {
    return answer_ && lower(trim(*answer_)) == lower(trim(cond["answered"].get<std::string>()));
  }
  if (cond.contains("screen")) {
    return ui_.app_id + "/" + ui_.screen_id == cond["screen"].get<std::string>();
  }
  throw DataError(task_.id + ": unknown success condition " + cond.dump());
}

bool SimDevice::success() const {
  if (task_.success.empty()) return false;
  return std::all_of(task_.success.begin(), task_.success.end(), [&](const json& c) { return holds(c); });
}

bool SimDevice::on_path() const { return path_index_.count(snapshot_key()) > 0 || success(); }

Action SimDevice::oracle_action() const {
  const auto it = path_index_.find(snapshot_key());
  if (it != path_index_.end()) return path_actions_[it->second];
  if (success()) return make_default_action(ActionType::CompleteTask);
  throw ExecutionError("state " + ui_.app_id + "/" + ui_.screen_id + " is off the oracle path of " + task_.id);
}

std::string SimDevice::complete(const Action& action) const {
  switch (action.type) {
    case ActionType::OpenApp: {
      for (const auto& step : task_.oracle) {
        if (step.contains("open")) return world_->app(step["open"].get<std::string>()).name;
      }
      return world_->app(task_.app).name;
    }
    case ActionType::TypeText: {
      const auto it = path_index_.find(snapshot_key());
      if (it != path_index_.end()) {
        const Action& o = path_actions_[it->second];
        if (o.type == ActionType::TypeText && o.target == action.target) return *o.content;
      }
      for (const auto& o : path_actions_) {
        if (o.type == ActionType::TypeText && o.target == action.target) return *o.content;
      }
      throw CompletionError("no text is known for " + action.descriptor);
    }
    case ActionType::Answer: {
      if (!task_.answer) throw CompletionError("task " + task_.id + " asks no question");
      const std::string want = lower(*task_.answer);
      for (const auto* e : visible_elements(ui_)) {
        if (lower(e->text).find(want) != std::string::npos ||
            lower(e->content_desc).find(want) != std::string::npos) {
          return *task_.answer;
        }
      }
      throw CompletionError("the answer is not visible on " + ui_.app_id + "/" + ui_.screen_id);
    }
    default: throw CompletionError("action needs no completion: " + action.descriptor);
  }
}

}  // namespace vagent::sim
