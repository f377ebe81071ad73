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

#include "vagent/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vagent/tokenizer.hpp"

namespace vagent {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  for (auto tok : tokenize(text)) {
    const auto c = static_cast<unsigned char>(tok.front());
    if (std::isalnum(c) || c >= 0x80) out.push_back(lower(tok));
  }
  return out;
}

std::vector<std::string> unique_words(std::string_view text) {
  auto w = words(text);
  std::sort(w.begin(), w.end());
  w.erase(std::unique(w.begin(), w.end()), w.end());
  return w;
}

// Double-quoted substrings of the goal, lower-cased.
std::vector<std::string> goal_entities(std::string_view goal) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = goal.find('"', pos)) != std::string_view::npos) {
    const auto end = goal.find('"', pos + 1);
    if (end == std::string_view::npos) break;
    if (end > pos + 1) out.push_back(lower(goal.substr(pos + 1, end - pos - 1)));
    pos = end + 1;
  }
  return out;
}

bool matches_entity(const std::string& label, const std::vector<std::string>& entities) {
  if (label.empty()) return false;
  for (const auto& e : entities) {
    if (label == e || label.find(e) != std::string::npos) return true;
  }
  return false;
}

// Descriptor without the trailing "(role index)" locator and content slot.
std::string descriptor_core(const Action& a) {
  std::string d = a.descriptor;
  if (const auto paren = d.rfind(" ("); paren != std::string::npos && a.target) d.resize(paren);
  if (const auto slot = d.find(kContentSlot); slot != std::string::npos) {
    d.erase(slot, kContentSlot.size());
  }
  return lower(d);
}

class Accumulator {
 public:
  Accumulator(int dim, double norm) : dim_(static_cast<std::uint64_t>(dim)), norm_(norm) {}

  void add(std::string_view group, std::string_view a, std::string_view b = {},
           std::string_view c = {}) {
    std::uint64_t h = stable_hash(group);
    h = stable_hash(a, h ^ 0x1fULL);
    if (!b.empty()) h = stable_hash(b, h ^ 0x2fULL);
    if (!c.empty()) h = stable_hash(c, h ^ 0x3fULL);
    const int index = static_cast<int>(h % dim_);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    entries_.emplace_back(index, sign);
  }

  SparseFeatures finish() {
    std::sort(entries_.begin(), entries_.end());
    SparseFeatures out(static_cast<Eigen::Index>(dim_));
    double norm2 = 0.0;
    std::vector<std::pair<int, double>> merged;
    for (const auto& [index, value] : entries_) {
      if (!merged.empty() && merged.back().first == index) {
        merged.back().second += value;
      } else {
        merged.emplace_back(index, value);
      }
    }
    for (const auto& [index, value] : merged) norm2 += value * value;
    const double scale = norm2 > 0.0 ? norm_ / std::sqrt(norm2) : 0.0;
    out.reserve(static_cast<Eigen::Index>(merged.size()));
    for (const auto& [index, value] : merged) {
      if (value != 0.0) out.insertBack(index) = value * scale;
    }
    return out;
  }

 private:
  std::uint64_t dim_;
  double norm_;
  std::vector<std::pair<int, double>> entries_;
};

}  // namespace

std::uint64_t stable_hash(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL ^ seed;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  // Final avalanche so the sign bit is well mixed.
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

SparseFeatures Featurizer::operator()(const PromptContext& ctx, const Action& action) const {
  Accumulator acc(config_.dim, config_.norm);

  std::string type(to_string(action.type));
  if (action.direction) type += "_" + std::string(to_string(*action.direction));
  const std::string screen = ctx.state.app_id + "/" + ctx.state.screen_id;

  const std::string core = descriptor_core(action);
  const auto dwords = unique_words(core);
  const auto gwords = unique_words(ctx.goal);
  const auto entities = goal_entities(ctx.goal);

  std::vector<std::string> mwords;
  const std::size_t tail = std::min<std::size_t>(ctx.memory.size(),
                                                 static_cast<std::size_t>(config_.memory_tail));
  for (std::size_t i = ctx.memory.size() - tail; i < ctx.memory.size(); ++i) {
    for (auto& w : unique_words(ctx.memory[i])) mwords.push_back(std::move(w));
  }
  if (mwords.empty()) mwords.push_back("<start>");

  acc.add("t", type);
  acc.add("ts", type, screen);

  const std::string padded = "^" + core + "$";
  for (int n = config_.min_ngram; n <= config_.max_ngram; ++n) {
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= padded.size(); ++i) {
      acc.add("n", std::string_view(padded).substr(i, static_cast<std::size_t>(n)));
    }
  }

  for (const auto& d : dwords) {
    acc.add("ds", d, screen);
    for (const auto& g : gwords) acc.add("dg", d, g);
    for (const auto& m : mwords) acc.add("dm", d, m);
  }
  for (const auto& g : gwords) acc.add("gs", g, screen, type);
  for (const auto& m : mwords) acc.add("mt", m, type);

  // Goal-entity matching against the target and the visible screen.
  const UiElement* target = action.target ? find_element(ctx.state, *action.target) : nullptr;
  bool screen_match = false;
  for (const auto* e : visible_elements(ctx.state)) {
    if (matches_entity(lower(e->label()), entities)) {
      screen_match = true;
      break;
    }
  }
  acc.add("cm", screen_match ? "1" : "0", type);
  if (target != nullptr) {
    const bool hit = matches_entity(lower(target->label()), entities) ||
                     matches_entity(lower(target->content_desc), entities);
    acc.add("m", hit ? "1" : "0", type);
    acc.add("ms", hit ? "1" : "0", type, screen);
    acc.add("r", std::string(to_string(target->role)), type);
    if (target->flags.editable) {
      const auto name = lower(target->content_desc);
      acc.add("tf", target->text.empty() ? "empty" : "filled", type, name);
      acc.add("tf", target->text.empty() ? "empty" : "filled", type);
    }
    if (target->role == Role::Checkbox) {
      acc.add("tc", target->flags.checked ? "on" : "off", type);
      for (const auto& g : gwords) acc.add("tcg", target->flags.checked ? "on" : "off", g);
    }
  }
  return acc.finish();
}

}  // namespace vagent
