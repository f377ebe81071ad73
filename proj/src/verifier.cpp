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

#include "vagent/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>

#include "vagent/error.hpp"
#include "vagent/math.hpp"
#include "vagent/tokenizer.hpp"

namespace vagent {

namespace {

ScoreVector finish(std::vector<double> raw, std::size_t expected, const std::string& backend) {
  if (raw.size() != expected) {
    throw ScoringError(backend, "backend returned " + std::to_string(raw.size()) + " scores for " +
                                    std::to_string(expected) + " prompts");
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) {
      throw ValidationError("non-finite score from " + backend + " at index " + std::to_string(i));
    }
  }
  ScoreVector out;
  const Eigen::Map<const Eigen::VectorXd> s(raw.data(), static_cast<Eigen::Index>(raw.size()));
  const Eigen::VectorXd p = softmax(s);
  out.normalized.assign(p.data(), p.data() + p.size());
  out.scores = std::move(raw);
  out.backend = backend;
  return out;
}

std::vector<double> call(const ScorerBackend& backend, std::span<const VerificationPrompt> prompts,
                         const std::string& name) {
  try {
    return backend.score_batch(prompts);
  } catch (const ScoringError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScoringError(name, e.what());
  }
}

// Token trie over every prompt seen so far.
class PrefixCache {
 public:
  // Returns the length of the longest cached prefix of `tokens`, then inserts.
  std::size_t insert(const std::vector<std::string_view>& tokens) {
    std::size_t node = 0;
    std::size_t matched = 0;
    bool matching = true;
    for (const auto& t : tokens) {
      auto& kids = nodes_[node];
      auto it = kids.find(std::string(t));
      if (it == kids.end()) {
        matching = false;
        nodes_.emplace_back();
        it = nodes_[node].emplace(std::string(t), nodes_.size() - 1).first;
      } else if (matching) {
        ++matched;
      }
      node = it->second;
    }
    return matched;
  }

 private:
  std::vector<std::map<std::string, std::size_t>> nodes_{1};
};

}  // namespace

ScoreVector score_actions(const ScorerBackend& backend, std::span<const VerificationPrompt> prompts) {
  const std::string name = backend.descriptor();
  if (prompts.empty()) throw ValidationError("score_actions needs at least one prompt");
  return finish(call(backend, prompts, name), prompts.size(), name);
}

int select(const ScoreVector& scores) {
  if (scores.scores.empty()) throw ValidationError("select on an empty score vector");
  const Eigen::Map<const Eigen::VectorXd> s(scores.scores.data(),
                                            static_cast<Eigen::Index>(scores.scores.size()));
  return static_cast<int>(argmax(s));
}

double score_entropy(const ScoreVector& scores) {
  if (scores.normalized.empty()) throw ValidationError("entropy of an empty score vector");
  return entropy(Eigen::Map<const Eigen::VectorXd>(scores.normalized.data(),
                                                   static_cast<Eigen::Index>(scores.normalized.size())));
}

std::vector<int> BatchSchedule::order() const {
  std::vector<int> out{warmup};
  for (const auto& g : groups) out.insert(out.end(), g.prompts.begin(), g.prompts.end());
  return out;
}

BatchSchedule schedule(std::span<const VerificationPrompt> prompts, const ActionSpace& space) {
  if (prompts.size() != space.actions.size()) {
    throw ValidationError("prompts and action space differ in length");
  }
  BatchSchedule s;
  if (prompts.empty()) return s;
  s.warmup = 0;
  for (int i = 1; i < static_cast<int>(prompts.size()); ++i) {
    const ActionType t = space.actions[static_cast<std::size_t>(prompts[static_cast<std::size_t>(i)].action_ref)].type;
    auto it = std::find_if(s.groups.begin(), s.groups.end(),
                           [&](const ScheduleGroup& g) { return g.type == t; });
    if (it == s.groups.end()) {
      s.groups.push_back({t, {}});
      it = s.groups.end() - 1;
    }
    it->prompts.push_back(i);
  }
  return s;
}

BatchSchedule sequential_schedule(std::size_t n) {
  BatchSchedule s;
  if (n == 0) return s;
  ScheduleGroup g{ActionType::Click, {}};
  for (int i = 1; i < static_cast<int>(n); ++i) g.prompts.push_back(i);
  if (!g.prompts.empty()) s.groups.push_back(std::move(g));
  return s;
}

CostReport simulate_cost(const BatchSchedule& schedule, std::span<const VerificationPrompt> prompts,
                         double prefill_rate) {
  CostReport r;
  if (prompts.empty()) return r;
  PrefixCache cache;
  for (int i : schedule.order()) {
    const std::string text = prompts[static_cast<std::size_t>(i)].text();
    const auto tokens = tokenize(text);
    const auto hit = static_cast<std::int64_t>(cache.insert(tokens));
    r.total_tokens += static_cast<std::int64_t>(tokens.size());
    r.cached_tokens += hit;
  }
  r.fresh_tokens = r.total_tokens - r.cached_tokens;
  r.est_latency_s = static_cast<double>(r.fresh_tokens) / prefill_rate;
  return r;
}

CostReport uncached_cost(std::span<const VerificationPrompt> prompts, double prefill_rate) {
  CostReport r;
  for (const auto& p : prompts) r.total_tokens += static_cast<std::int64_t>(count_tokens(p.text()));
  r.fresh_tokens = r.total_tokens;
  r.est_latency_s = static_cast<double>(r.fresh_tokens) / prefill_rate;
  return r;
}

ScoreVector score_scheduled(const ScorerBackend& backend, std::span<const VerificationPrompt> prompts,
                            const BatchSchedule& schedule) {
  const std::string name = backend.descriptor();
  if (prompts.empty()) throw ValidationError("score_scheduled needs at least one prompt");
  std::vector<double> raw(prompts.size(), 0.0);
  std::vector<char> seen(prompts.size(), 0);
  auto run = [&](const std::vector<int>& idx) {
    std::vector<VerificationPrompt> batch;
    batch.reserve(idx.size());
    for (int i : idx) batch.push_back(prompts[static_cast<std::size_t>(i)]);
    const auto got = call(backend, batch, name);
    if (got.size() != idx.size()) {
      throw ScoringError(name, "backend returned " + std::to_string(got.size()) + " scores for " +
                                   std::to_string(idx.size()) + " prompts");
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto i = static_cast<std::size_t>(idx[k]);
      if (seen[i]) throw ValidationError("schedule lists prompt " + std::to_string(i) + " twice");
      seen[i] = 1;
      raw[i] = got[k];
    }
  };
  run({schedule.warmup});
  for (const auto& g : schedule.groups) run(g.prompts);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ValidationError("schedule omits prompt " + std::to_string(i));
  }
  return finish(std::move(raw), prompts.size(), name);
}

UiState wide_screen(int actions) {
  const int rows = actions - static_cast<int>(std::size(kDefaultActions));
  if (rows < 0) throw ValidationError("wide_screen needs at least the default actions");
  UiState s;
  s.app_id = "probe";
  s.screen_id = "list";
  s.root.role = Role::Container;
  s.root.bounds = {0, 0, s.width, s.height};
  const int h = rows > 0 ? std::max(1, s.height / rows) : 0;
  for (int r = 0; r < rows; ++r) {
    UiElement e;
    e.id = r + 1;
    e.role = Role::ListItem;
    e.text = "Entry " + std::to_string(r + 1);
    e.bounds = {0, r * h, s.width, (r + 1) * h};
    e.flags.clickable = true;
    s.root.children.push_back(std::move(e));
  }
  validate_ui(s);
  return s;
}

}  // namespace vagent
