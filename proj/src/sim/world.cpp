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

#include "vagent/sim/world.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "vagent/error.hpp"

namespace vagent::sim {

namespace {

using nlohmann::json;

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

Role parse_role(const std::string& name, const std::string& where) {
  const auto r = role_from_string(name);
  if (!r) throw DataError(where + ": unknown role '" + name + "'");
  return *r;
}

void check_flags(const std::string& flags, const std::string& where) {
  for (char c : flags) {
    if (std::string_view("clshe").find(c) == std::string_view::npos) {
      throw DataError(where + ": unknown flag letter '" + std::string(1, c) + "'");
    }
  }
}

ElementDef parse_element(const json& j, const std::string& where) {
  ElementDef e;
  e.key = j.at("key").get<std::string>();
  const std::string w = where + "/" + e.key;
  e.role = parse_role(j.value("role", "label"), w);
  e.text = j.value("text", "");
  e.desc = j.value("desc", "");
  e.flags = j.value("flags", "");
  e.checked = j.value("checked", "");
  check_flags(e.flags, w);
  if (e.flags.find('e') != std::string::npos && e.role != Role::Textbox) {
    throw DataError(w + ": editable element must be a textbox");
  }
  if (j.contains("repeat")) {
    const auto& r = j["repeat"];
    RepeatDef rep;
    rep.list = r.at("list").get<std::string>();
    rep.page = r.value("page", 6);
    if (rep.page < 1 || rep.page > 98) throw DataError(w + ": page must be in [1, 98]");
    const auto& item = r.at("item");
    rep.item_role = parse_role(item.value("role", "list-item"), w);
    rep.item_text = item.value("text", "");
    rep.item_desc = item.value("desc", "");
    rep.item_flags = item.value("flags", "");
    rep.item_checked = item.value("checked", "");
    check_flags(rep.item_flags, w + "/item");
    e.role = Role::Container;
    e.repeat = rep;
  }
  return e;
}

const std::set<std::string> kEffectOps = {"push",       "pop",    "launch", "append", "update_sel",
                                          "remove_sel", "toggle", "set",    "clear"};

AppDef parse_app(const json& j) {
  AppDef app;
  try {
    app.id = j.at("app").get<std::string>();
    app.name = j.value("name", app.id);
    app.category = j.value("category", "");
    app.held_out = j.value("held_out", false);
    app.launcher = j.value("launcher", false);
    app.initial = j.at("initial").get<std::string>();
    app.store = j.value("store", json::object());
    for (const auto& [sid, sj] : j.at("screens").items()) {
      ScreenDef s;
      s.id = sid;
      s.title = sj.value("title", sid);
      const std::string where = app.id + "/" + sid;
      std::set<std::string> keys;
      for (const auto& ej : sj.value("elements", json::array())) {
        s.elements.push_back(parse_element(ej, where));
        if (!keys.insert(s.elements.back().key).second) {
          throw DataError(where + ": duplicate element key '" + s.elements.back().key + "'");
        }
      }
      if (s.elements.size() > 98) throw DataError(where + ": too many elements");
      const json on = sj.value("on", json::object());
      for (const auto& [trig, effects] : on.items()) {
        const auto colon = trig.find(':');
        if (colon == std::string::npos) throw DataError(where + ": bad trigger '" + trig + "'");
        const std::string verb = trig.substr(0, colon);
        const std::string key = trig.substr(colon + 1);
        if (verb != "click" && verb != "long_press") {
          throw DataError(where + ": trigger verb must be click or long_press");
        }
        if (!keys.count(key)) throw DataError(where + ": trigger on unknown key '" + key + "'");
        std::vector<EffectDef> list;
        for (const auto& ej : effects) {
          if (!ej.is_object() || ej.empty()) throw DataError(where + ": malformed effect");
          EffectDef e;
          for (const auto& [k, v] : ej.items()) {
            if (!kEffectOps.count(k)) continue;
            if (!e.op.empty()) throw DataError(where + ": effect names two operations: " + ej.dump());
            e.op = k;
          }
          if (e.op.empty()) throw DataError(where + ": unknown effect " + ej.dump());
          e.args = ej;
          list.push_back(std::move(e));
        }
        s.transitions[trig] = std::move(list);
      }
      app.screens.push_back(std::move(s));
    }
    const json fill = j.value("fill", json::object());
    for (const auto& [list, fj] : fill.items()) {
      FillerDef f;
      f.min_count = fj.at("count").at(0).get<int>();
      f.max_count = fj.at("count").at(1).get<int>();
      f.unique = fj.value("unique", "");
      f.record = fj.at("record");
      if (f.min_count < 0 || f.max_count < f.min_count) throw DataError(app.id + ": bad fill count");
      app.fillers[list] = std::move(f);
    }
    for (const auto& tj : j.value("tasks", json::array())) {
      TaskTemplate t;
      t.id = tj.at("id").get<std::string>();
      t.goal = tj.at("goal").get<std::string>();
      const json params = tj.value("params", json::object());
      for (const auto& [p, pool] : params.items()) {
        t.params[p] = pool.get<std::string>();
      }
      t.init = tj.value("init", json::array());
      t.oracle = tj.at("oracle");
      t.success = tj.at("success");
      if (tj.contains("answer")) t.answer = tj["answer"].get<std::string>();
      app.tasks.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw DataError("app definition '" + app.id + "': " + e.what());
  }
  return app;
}

// Push/launch targets must exist and every screen must be reachable from the
// initial one.
void check_app(const AppDef& app) {
  if (app.screen_index(app.initial) < 0) {
    throw ValidationError(app.id + ": initial screen '" + app.initial + "' missing");
  }
  std::set<std::string> reached{app.initial};
  std::vector<std::string> todo{app.initial};
  while (!todo.empty()) {
    const std::string sid = todo.back();
    todo.pop_back();
    for (const auto& [trig, effects] : app.screen(sid).transitions) {
      for (const auto& e : effects) {
        if (e.op != "push") continue;
        const auto target = e.args.at("push").get<std::string>();
        if (app.screen_index(target) < 0) {
          throw ValidationError(app.id + "/" + sid + ": push to unknown screen '" + target + "'");
        }
        if (reached.insert(target).second) todo.push_back(target);
      }
    }
  }
  for (const auto& s : app.screens) {
    if (!reached.count(s.id)) throw ValidationError(app.id + ": screen '" + s.id + "' unreachable");
  }
}

}  // namespace

int AppDef::screen_index(const std::string& sid) const {
  for (std::size_t i = 0; i < screens.size(); ++i) {
    if (screens[i].id == sid) return static_cast<int>(i);
  }
  return -1;
}

const ScreenDef& AppDef::screen(const std::string& sid) const {
  const int i = screen_index(sid);
  if (i < 0) throw DataError(id + ": unknown screen '" + sid + "'");
  return screens[static_cast<std::size_t>(i)];
}

World World::from_json(const std::vector<json>& apps, const json& pools) {
  World w;
  for (const auto& j : apps) {
    w.apps_.push_back(parse_app(j));
    check_app(w.apps_.back());
  }
  // Launcher first so that its index, and hence the home ids, never move.
  std::stable_sort(w.apps_.begin(), w.apps_.end(),
                   [](const AppDef& a, const AppDef& b) { return a.launcher > b.launcher; });
  if (w.apps_.empty() || !w.apps_.front().launcher) throw ValidationError("no launcher app defined");
  if (w.apps_.size() > 1 && w.apps_[1].launcher) throw ValidationError("more than one launcher app");
  if (w.apps_.size() > 99) throw ValidationError("too many apps");
  std::set<std::string> ids;
  for (const auto& a : w.apps_) {
    if (!ids.insert(a.id).second) throw ValidationError("duplicate app id '" + a.id + "'");
  }
  for (const auto& [name, values] : pools.items()) {
    w.pools_[name] = values.get<std::vector<std::string>>();
  }
  return w;
}

World World::load(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("app directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<json> apps;
  json pools = json::object();
  for (const auto& f : files) {
    if (f.filename() == "pools.json") {
      pools = read_json(f);
    } else {
      apps.push_back(read_json(f));
    }
  }
  return from_json(apps, pools);
}

std::string default_data_dir() {
  if (const char* env = std::getenv("VAGENT_DATA_DIR")) return env;
#ifdef VAGENT_DATA_DIR
  return VAGENT_DATA_DIR;
#else
  return "data";
#endif
}

World World::load_default() { return load(default_data_dir() + "/apps"); }

const AppDef& World::app(const std::string& id) const {
  const auto* a = find_app(id);
  if (a == nullptr) throw DataError("unknown app '" + id + "'");
  return *a;
}

const AppDef* World::find_app(const std::string& id_or_name) const {
  auto lower = [](std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  };
  const std::string want = lower(id_or_name);
  for (const auto& a : apps_) {
    if (a.id == id_or_name || lower(a.name) == want) return &a;
  }
  return nullptr;
}

int World::app_index(const std::string& id) const {
  for (std::size_t i = 0; i < apps_.size(); ++i) {
    if (apps_[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

const AppDef& World::launcher() const { return apps_.front(); }

const std::vector<std::string>& World::pool(const std::string& name) const {
  const auto it = pools_.find(name);
  if (it == pools_.end() || it->second.empty()) throw DataError("unknown or empty pool '" + name + "'");
  return it->second;
}

}  // namespace vagent::sim
