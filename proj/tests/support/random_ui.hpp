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

#ifndef VAGENT_TESTS_RANDOM_UI_HPP_
#define VAGENT_TESTS_RANDOM_UI_HPP_

#include <random>
#include <string>
#include <vector>

#include "vagent/ui_model.hpp"

namespace vagent::testing {

inline const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "",      "Save",     "OK",        "Cancel", "Add note", "Groceries", "q\"uote",
      "back\\slash", "Ünïcode", "tab\there", "line\nbreak", "Settings", "Wi-Fi", "42"};
  return words;
}

struct RandomUiOptions {
  int max_depth = 4;
  int max_children = 4;
  double invisible = 0.1;
};

class RandomUi {
 public:
  explicit RandomUi(std::uint64_t seed, RandomUiOptions opts = {}) : rng_(seed), opts_(opts) {}

  UiState next() {
    UiState s;
    s.app_id = "app" + std::to_string(uniform(0, 5));
    s.screen_id = "screen" + std::to_string(uniform(0, 9));
    s.width = 1080;
    s.height = 2400;
    next_id_ = 0;
    s.root = node({0, 0, s.width, s.height}, 0);
    s.root.role = Role::Container;
    s.root.flags.editable = false;
    return s;
  }

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::mt19937_64& rng() { return rng_; }

 private:
  UiElement node(Bounds b, int depth) {
    UiElement e;
    e.id = next_id_++;
    e.role = static_cast<Role>(uniform(0, 5));
    const auto& vocab = vocabulary();
    e.text = vocab[static_cast<std::size_t>(uniform(0, static_cast<int>(vocab.size()) - 1))];
    e.content_desc = vocab[static_cast<std::size_t>(uniform(0, static_cast<int>(vocab.size()) - 1))];
    e.bounds = b;
    e.flags.clickable = coin(0.4);
    e.flags.long_clickable = coin(0.15);
    e.flags.scrollable = coin(0.1);
    e.flags.editable = e.role == Role::Textbox && coin(0.7);
    e.flags.checked = e.role == Role::Checkbox && coin(0.5);
    e.flags.visible = !coin(opts_.invisible);
    if (e.flags.scrollable && coin(0.3)) e.scroll_axis = ScrollAxis::Horizontal;
    if (depth < opts_.max_depth) {
      const int n = uniform(0, opts_.max_children);
      const int h = (b.bottom - b.top) / std::max(1, n);
      for (int i = 0; i < n; ++i) {
        Bounds cb{b.left, b.top + i * h, b.right, b.top + (i + 1) * h};
        e.children.push_back(node(cb, depth + 1));
      }
    }
    return e;
  }

  std::mt19937_64 rng_;
  RandomUiOptions opts_;
  int next_id_ = 0;
};

}  // namespace vagent::testing

#endif  // VAGENT_TESTS_RANDOM_UI_HPP_
