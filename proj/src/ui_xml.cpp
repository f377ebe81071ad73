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

#include <sstream>
#include <string>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "vagent/error.hpp"
#include "vagent/ui_model.hpp"

namespace vagent {
namespace {

namespace pt = boost::property_tree;

Role role_from_class(const std::string& cls) {
  if (auto r = role_from_string(cls)) return *r;
  const auto dot = cls.rfind('.');
  const std::string simple = dot == std::string::npos ? cls : cls.substr(dot + 1);
  if (simple == "Button" || simple == "ImageButton") return Role::Button;
  if (simple == "CheckBox" || simple == "Switch" || simple == "ToggleButton") {
    return Role::Checkbox;
  }
  if (simple == "EditText") return Role::Textbox;
  if (simple == "TextView" || simple == "ImageView") return Role::Label;
  return Role::Container;
}

Bounds parse_bounds(const std::string& s) {
  Bounds b;
  if (std::sscanf(s.c_str(), "[%d,%d][%d,%d]", &b.left, &b.top, &b.right, &b.bottom) != 4) {
    throw ValidationError("bad bounds attribute '" + s + "'");
  }
  return b;
}

UiElement node_from_tree(const pt::ptree& node) {
  const auto& attrs = node.get_child("<xmlattr>", pt::ptree{});
  UiElement e;
  e.id = attrs.get<int>("id", -1);
  if (e.id < 0) throw ValidationError("node without id");
  e.role = role_from_class(attrs.get<std::string>("class", "container"));
  e.text = attrs.get<std::string>("text", "");
  e.content_desc = attrs.get<std::string>("content-desc", "");
  e.bounds = parse_bounds(attrs.get<std::string>("bounds", "[0,0][0,0]"));
  e.flags.clickable = attrs.get<bool>("clickable", false);
  e.flags.long_clickable = attrs.get<bool>("long-clickable", false);
  e.flags.scrollable = attrs.get<bool>("scrollable", false);
  e.flags.editable = attrs.get<bool>("editable", false);
  e.flags.checked = attrs.get<bool>("checked", false);
  e.flags.visible = attrs.get<bool>("visible-to-user", true);
  if (attrs.get<std::string>("scroll-axis", "vertical") == "horizontal") {
    e.scroll_axis = ScrollAxis::Horizontal;
  }
  for (const auto& [name, child] : node) {
    if (name == "node") e.children.push_back(node_from_tree(child));
  }
  return e;
}

}  // namespace

UiState parse_ui_xml(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed UI XML: " + e.message(), static_cast<int>(e.line()), 1);
  }
  const auto hierarchy = tree.get_child_optional("hierarchy");
  if (!hierarchy) throw ValidationError("missing <hierarchy> element");
  const auto& attrs = hierarchy->get_child("<xmlattr>", pt::ptree{});
  UiState state;
  try {
    state.app_id = attrs.get<std::string>("app", "");
    state.screen_id = attrs.get<std::string>("screen", "");
    state.width = attrs.get<int>("width", 1080);
    state.height = attrs.get<int>("height", 2400);
    int roots = 0;
    for (const auto& [name, child] : *hierarchy) {
      if (name != "node") continue;
      if (++roots > 1) throw ValidationError("hierarchy must have exactly one root node");
      state.root = node_from_tree(child);
    }
    if (roots == 0) throw ValidationError("hierarchy has no root node");
  } catch (const pt::ptree_bad_data& e) {
    throw ValidationError(std::string("bad attribute value: ") + e.what());
  }
  validate_ui(state);
  return state;
}

}  // namespace vagent
