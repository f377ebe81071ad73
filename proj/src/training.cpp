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

#include "vagent/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "vagent/error.hpp"
#include "vagent/math.hpp"
#include "vagent/sim/environment.hpp"

namespace vagent {

using nlohmann::json;

namespace {

constexpr const char* kPairSchema = "vagent.pairs/1";

std::shared_ptr<const PromptContext> context_of(const StepRecord& r, const TaskTrace& trace) {
  auto ctx = std::make_shared<PromptContext>();
  ctx->goal = trace.goal;
  ctx->memory = r.memory_before;
  ctx->state = r.state_before;
  ctx->ui = streamline(r.state_before);
  ctx->step = r.step;
  return ctx;
}

std::uint64_t seeded_hash(std::string_view s, std::uint64_t seed) { return stable_hash(s, seed); }

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------- labels

std::string app_of_task(const std::string& task_id) {
  const auto dot = task_id.find('.');
  return dot == std::string::npos ? task_id : task_id.substr(0, dot);
}

std::vector<LabeledStep> labeled_steps(const TaskTrace& trace, LabelSource source) {
  std::vector<LabeledStep> out;
  for (const auto& r : trace.records) {
    std::optional<int> label;
    if (source == LabelSource::Oracle) {
      label = r.oracle;
    } else if (r.error.empty()) {
      label = r.selected;
    }
    if (!label) continue;
    LabeledStep s;
    s.context = context_of(r, trace);
    s.space = r.space;
    s.label = *label;
    s.task_id = trace.task_id;
    s.step = r.step;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------- pairs

std::string_view to_string(PairKind kind) {
  return kind == PairKind::Process ? "process" : "self_correct";
}

std::optional<PairKind> pair_kind_from_string(std::string_view name) {
  if (name == "process") return PairKind::Process;
  if (name == "self_correct") return PairKind::SelfCorrect;
  return std::nullopt;
}

std::vector<PreferencePair> build_process_pairs(const LabeledStep& step) {
  const auto n = static_cast<int>(step.space.size());
  if (step.label < 0 || step.label >= n) {
    throw DataError(step.task_id + " step " + std::to_string(step.step) + ": label " +
                    std::to_string(step.label) + " outside an action space of " + std::to_string(n));
  }
  std::vector<PreferencePair> out;
  out.reserve(static_cast<std::size_t>(n - 1));
  const Action& pos = step.space.actions[static_cast<std::size_t>(step.label)];
  for (int i = 0; i < n; ++i) {
    if (i == step.label) continue;
    out.push_back({step.context, pos, step.space.actions[static_cast<std::size_t>(i)], PairKind::Process,
                   step.task_id, step.step});
  }
  return out;
}

std::vector<PreferencePair> build_process_pairs(std::span<const LabeledStep> steps) {
  std::vector<PreferencePair> out;
  for (const auto& s : steps) {
    auto p = build_process_pairs(s);
    out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return out;
}

std::optional<Action> reverse_action(const Action& executed) {
  switch (executed.type) {
    case ActionType::Click:
    case ActionType::LongPress: return make_default_action(ActionType::NavigateBack);
    case ActionType::OpenApp: return make_default_action(ActionType::NavigateHome);
    case ActionType::Scroll: {
      if (!executed.direction) return std::nullopt;
      Action a;
      a.type = ActionType::Scroll;
      a.target = executed.target;
      a.direction = opposite(*executed.direction);
      return a;
    }
    case ActionType::TypeText: {
      Action a;
      a.type = ActionType::ClearText;
      a.target = executed.target;
      return a;
    }
    default: return std::nullopt;
  }
}

std::optional<int> find_reverse(const Action& executed, const ActionSpace& space) {
  const auto rev = reverse_action(executed);
  if (!rev) return std::nullopt;
  const int i = space.index_of(*rev);
  if (i < 0) return std::nullopt;
  return i;
}

std::size_t self_correct_target(std::size_t process_pairs, double fraction) {
  if (!(fraction >= 0.0) || fraction >= 1.0) throw ValidationError("self-correct fraction must lie in [0, 1)");
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(process_pairs) / (1.0 - fraction)));
}

std::optional<std::string> branch_content(const Action& action, const sim::SimDevice& device, std::uint64_t salt) {
  const auto& world = device.world();
  switch (action.type) {
    case ActionType::OpenApp: {
      const std::string& own = world.app(device.task().app).name;
      std::vector<std::string> names;
      for (const auto& a : world.apps()) {
        if (!a.launcher && !a.held_out && a.name != own) names.push_back(a.name);
      }
      if (names.empty()) return std::nullopt;
      return names[salt % names.size()];
    }
    case ActionType::TypeText: {
      const auto& words = world.pool("phrases");
      if (words.empty()) return std::nullopt;
      return words[salt % words.size()];
    }
    default: return std::nullopt;
  }
}

std::vector<int> wrong_branches(const sim::SimDevice& device, const ActionSpace& space) {
  std::vector<int> out;
  if (!device.on_path()) return out;
  const Action oracle = device.oracle_action();
  for (std::size_t i = 0; i < space.size(); ++i) {
    Action a = space.actions[i];
    if (a.same_choice(oracle)) continue;
    if (!reverse_action(a)) continue;
    if (requires_completion(a.type)) {
      const auto content = branch_content(a, device, i);
      if (!content) continue;
      a.content = *content;
    }
    sim::SimDevice trial = device;
    try {
      const auto kind = trial.execute(a);
      if (sim::reversible(a.type, kind) && !trial.on_path()) out.push_back(static_cast<int>(i));
    } catch (const ExecutionError&) {
    }
  }
  return out;
}

std::vector<PreferencePair> build_self_correct_pairs(sim::SimDevice& device, std::span<const sim::TaskSpec> tasks,
                                                     const SelfCorrectConfig& config) {
  std::vector<PreferencePair> out;
  if (config.target == 0 || tasks.empty()) return out;

  // Oracle path lengths bound the on-path prefixes of each task.
  std::vector<int> lengths;
  lengths.reserve(tasks.size());
  for (const auto& t : tasks) {
    device.reset(t, config.env_seed);
    lengths.push_back(static_cast<int>(device.oracle_path().size()));
  }

  std::mt19937_64 rng(config.seed);
  std::set<std::tuple<std::size_t, int, int>> used;
  for (int attempt = 0; attempt < config.max_attempts && out.size() < config.target; ++attempt) {
    const std::size_t ti = std::uniform_int_distribution<std::size_t>(0, tasks.size() - 1)(rng);
    if (lengths[ti] == 0) continue;
    const int k = std::uniform_int_distribution<int>(0, lengths[ti] - 1)(rng);
    const auto& task = tasks[ti];

    device.reset(task, config.env_seed);
    sim::DeviceEnvironment env(device);
    sim::OracleScorer oracle(device);
    sim::OracleCompletion completion(device);
    AgentConfig agent_cfg = config.agent;
    agent_cfg.step_budget = std::max(agent_cfg.step_budget, k + 2);
    Agent agent(env, oracle, completion, agent_cfg, task.goal, task.id);
    for (int s = 0; s < k && !agent.done(); ++s) agent.step();
    if (agent.done() || !device.on_path()) continue;

    const StepProposal proposal = agent.propose();
    const auto candidates = wrong_branches(device, proposal.space);
    if (candidates.empty()) continue;
    const int wrong = candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
    if (!used.emplace(ti, k, wrong).second) continue;

    const Action& chosen = proposal.space.actions[static_cast<std::size_t>(wrong)];
    std::optional<std::string> content;
    if (requires_completion(chosen.type)) content = branch_content(chosen, device, static_cast<std::uint64_t>(wrong));
    const StepRecord& rec = agent.commit(proposal, wrong, content);
    if (!rec.error.empty()) continue;

    const StepProposal after = agent.propose();
    const auto pos = find_reverse(chosen, after.space);
    if (!pos) continue;
    const auto& ctx = after.prompts.front().context;
    const Action& pos_action = after.space.actions[static_cast<std::size_t>(*pos)];
    for (std::size_t i = 0; i < after.space.size() && out.size() < config.target; ++i) {
      if (static_cast<int>(i) == *pos) continue;
      out.push_back({ctx, pos_action, after.space.actions[i], PairKind::SelfCorrect, task.id, ctx->step});
    }
  }
  return out;
}

std::string pairs_to_jsonl(std::span<const PreferencePair> pairs) {
  std::ostringstream os;
  std::map<const PromptContext*, int> ids;
  os << json{{"type", "header"}, {"schema", kPairSchema}, {"pairs", pairs.size()}}.dump() << '\n';
  for (const auto& p : pairs) {
    if (!p.context) throw DataError("pair without a context");
    auto [it, fresh] = ids.try_emplace(p.context.get(), static_cast<int>(ids.size()));
    if (fresh) {
      const auto& c = *p.context;
      os << json{{"type", "context"}, {"id", it->second}, {"goal", c.goal}, {"memory", c.memory},
                 {"state", ui_to_json(c.state)}, {"step", c.step}}
                .dump()
         << '\n';
    }
    os << json{{"type", "pair"},  {"context", it->second},         {"pos", action_to_json(p.pos)},
               {"neg", action_to_json(p.neg)}, {"kind", to_string(p.kind)}, {"task", p.task_id},
               {"step", p.step}}
              .dump()
       << '\n';
  }
  return os.str();
}

std::vector<PreferencePair> pairs_from_jsonl(std::string_view text) {
  std::vector<PreferencePair> out;
  std::map<int, std::shared_ptr<const PromptContext>> contexts;
  bool header = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("pair file: ") + e.what(), line_no, static_cast<int>(e.byte));
    }
    try {
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        if (j.at("schema") != kPairSchema) throw DataError("unsupported pair schema " + j.at("schema").dump());
        header = true;
      } else if (!header) {
        throw DataError("pair file: missing header");
      } else if (type == "context") {
        auto ctx = std::make_shared<PromptContext>();
        ctx->goal = j.at("goal").get<std::string>();
        ctx->memory = j.at("memory").get<std::vector<std::string>>();
        ctx->state = ui_from_json(j.at("state"));
        ctx->ui = streamline(ctx->state);
        ctx->step = j.at("step").get<int>();
        if (!contexts.emplace(j.at("id").get<int>(), std::move(ctx)).second) {
          throw DataError("duplicate context id");
        }
      } else if (type == "pair") {
        const auto it = contexts.find(j.at("context").get<int>());
        if (it == contexts.end()) throw DataError("pair references an unknown context");
        const auto kind = pair_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) throw DataError("unknown pair kind " + j.at("kind").dump());
        out.push_back({it->second, action_from_json(j.at("pos")), action_from_json(j.at("neg")), *kind,
                       j.at("task").get<std::string>(), j.at("step").get<int>()});
      } else {
        throw DataError("unknown line type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw DataError("pair file line " + std::to_string(line_no) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError("pair file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header) throw DataError("pair file: missing header");
  return out;
}

void save_pairs(std::span<const PreferencePair> pairs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << pairs_to_jsonl(pairs);
}

std::vector<PreferencePair> load_pairs(const std::string& path) { return pairs_from_jsonl(read_file(path)); }

void check_no_held_out(std::span<const PreferencePair> pairs, const sim::World& world) {
  for (const auto& p : pairs) {
    const auto* app = world.find_app(app_of_task(p.task_id));
    if (app != nullptr && app->held_out) {
      throw DataError("pair from held-out app '" + app->id + "' (" + p.task_id + ")");
    }
  }
}

// ---------------------------------------------------------------- corpus

std::vector<TaskTrace> oracle_traces(sim::SimDevice& device, std::span<const sim::TaskSpec> tasks,
                                     std::uint64_t env_seed, const AgentConfig& config) {
  std::vector<TaskTrace> out;
  out.reserve(tasks.size());
  sim::OracleScorer oracle(device);
  for (const auto& t : tasks) out.push_back(sim::run_episode(device, t, env_seed, oracle, config));
  return out;
}

json TaskSplit::manifest() const {
  auto ids = [](const std::vector<sim::TaskSpec>& v) {
    json a = json::array();
    for (const auto& t : v) a.push_back(t.id);
    return a;
  };
  return {{"schema", "vagent.split/1"}, {"train", ids(train)}, {"eval", ids(eval)}, {"ood", ids(ood)}};
}

TaskSplit split_tasks(std::span<const sim::TaskSpec> tasks, double eval_fraction, std::uint64_t seed) {
  if (!(eval_fraction >= 0.0 && eval_fraction <= 1.0)) throw ValidationError("eval fraction must lie in [0, 1]");
  TaskSplit s;
  for (const auto& t : tasks) {
    if (t.held_out) {
      s.ood.push_back(t);
    } else if (unit(seeded_hash(t.id, seed)) < eval_fraction) {
      s.eval.push_back(t);
    } else {
      s.train.push_back(t);
    }
  }
  return s;
}

// ---------------------------------------------------------------- loss

double loss_grad(const FeatureScorer& scorer, const SparseFeatures& pos, const SparseFeatures& neg, Gradient& grad,
                 double weight) {
  const double sp = scorer.score(pos);
  const double sn = scorer.score(neg);
  const double d = weight * p3_loss_margin_derivative(sp, sn);
  scorer.accumulate(pos, d, grad);
  scorer.accumulate(neg, -d, grad);
  return p3_loss(sp, sn);
}

double loss_grad(const FeatureScorer& scorer, const PreferencePair& pair, Gradient& grad, double weight) {
  const auto& f = scorer.featurizer();
  return loss_grad(scorer, f(*pair.context, pair.pos), f(*pair.context, pair.neg), grad, weight);
}

double pair_loss(const FeatureScorer& scorer, const PreferencePair& pair) {
  const auto& f = scorer.featurizer();
  return p3_loss(scorer.score(f(*pair.context, pair.pos)), scorer.score(f(*pair.context, pair.neg)));
}

double ranking_accuracy(const ScorerBackend& backend, std::span<const LabeledStep> steps) {
  if (steps.empty()) return std::numeric_limits<double>::quiet_NaN();
  double credit = 0.0;
  for (const auto& s : steps) {
    const auto prompts = build_prompts(s.context, s.space);
    const auto scores = backend.score_batch(prompts);
    if (scores.size() != s.space.size()) throw ScoringError(backend.descriptor(), "wrong number of scores");
    const double best = *std::max_element(scores.begin(), scores.end());
    const auto tied = std::count(scores.begin(), scores.end(), best);
    if (scores[static_cast<std::size_t>(s.label)] == best) credit += 1.0 / static_cast<double>(tied);
  }
  return credit / static_cast<double>(steps.size());
}

double chance_accuracy(std::span<const LabeledStep> steps) {
  if (steps.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (const auto& s : steps) sum += 1.0 / static_cast<double>(s.space.size());
  return sum / static_cast<double>(steps.size());
}

// ---------------------------------------------------------------- training

void TrainerConfig::validate() const {
  auto bad = [](const std::string& what) { throw ValidationError("trainer config: " + what); };
  if (!(peak_lr > 0.0) || !std::isfinite(peak_lr)) bad("peak_lr must be positive");
  if (!(floor_lr >= 0.0) || floor_lr > peak_lr) bad("floor_lr must lie in [0, peak_lr]");
  if (warmup_steps < 0) bad("warmup_steps must be non-negative");
  if (epochs < 1) bad("epochs must be at least 1");
  if (batch_size < 1) bad("batch_size must be at least 1");
  if (!(self_correct_fraction >= 0.0) || self_correct_fraction >= 1.0) bad("self_correct_fraction must lie in [0, 1)");
  if (head == HeadType::Mlp && hidden < 1) bad("hidden must be at least 1");
}

double TrainerConfig::lr_at(int step, int total_steps) const {
  if (step < warmup_steps) return peak_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  const int span = std::max(1, total_steps - warmup_steps);
  const double progress = std::min(1.0, static_cast<double>(step - warmup_steps) / span);
  return floor_lr + 0.5 * (peak_lr - floor_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

json TrainerConfig::to_json() const {
  return {{"peak_lr", peak_lr},       {"warmup_steps", warmup_steps},
          {"floor_lr", floor_lr},     {"epochs", epochs},
          {"batch_size", batch_size}, {"self_correct_fraction", self_correct_fraction},
          {"seed", seed},             {"head", head_name(head)},
          {"hidden", hidden}};
}

TrainerConfig TrainerConfig::from_json(const json& j) {
  TrainerConfig c;
  try {
    c.peak_lr = j.value("peak_lr", c.peak_lr);
    c.warmup_steps = j.value("warmup_steps", c.warmup_steps);
    c.floor_lr = j.value("floor_lr", c.floor_lr);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.self_correct_fraction = j.value("self_correct_fraction", c.self_correct_fraction);
    c.seed = j.value("seed", c.seed);
    if (j.contains("head")) c.head = head_from_name(j.at("head").get<std::string>());
    c.hidden = j.value("hidden", c.hidden);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("trainer config: ") + e.what());
  }
  c.validate();
  return c;
}

json TrainingReport::to_json() const {
  json epochs_j = json::array();
  for (const auto& e : epochs) {
    epochs_j.push_back({{"epoch", e.epoch},
                        {"loss", e.loss},
                        {"heldout_top1", std::isnan(e.heldout_top1) ? json(nullptr) : json(e.heldout_top1)},
                        {"gap", e.gap},
                        {"lr", e.lr}});
  }
  return {{"schema", "vagent.training_report/1"},
          {"pairs", pairs},
          {"self_correct_pairs", self_correct_pairs},
          {"heldout_steps", heldout_steps},
          {"initial_loss", initial_loss},
          {"epochs", epochs_j},
          {"final_gap", final_gap}};
}

TrainingReport train(FeatureScorer& scorer, std::span<const PreferencePair> pairs,
                     std::span<const LabeledStep> heldout, const TrainerConfig& config,
                     const std::function<void(const EpochReport&)>& on_epoch) {
  config.validate();
  if (pairs.empty()) throw TrainingError("no training pairs");

  // Featurize every distinct (context, action) once.
  std::vector<SparseFeatures> feats;
  std::map<std::tuple<const PromptContext*, int, std::optional<int>, int>, std::size_t> cache;
  auto feature_index = [&](const PreferencePair& p, const Action& a) {
    const int dir = a.direction ? static_cast<int>(*a.direction) : -1;
    const auto key = std::make_tuple(p.context.get(), static_cast<int>(a.type), a.target, dir);
    auto [it, fresh] = cache.try_emplace(key, feats.size());
    if (fresh) feats.push_back(scorer.featurizer()(*p.context, a));
    return it->second;
  };
  std::vector<std::pair<std::size_t, std::size_t>> idx;
  idx.reserve(pairs.size());
  TrainingReport report;
  report.pairs = pairs.size();
  report.heldout_steps = heldout.size();
  for (const auto& p : pairs) {
    if (!p.context) throw TrainingError("pair without a context");
    idx.emplace_back(feature_index(p, p.pos), feature_index(p, p.neg));
    if (p.kind == PairKind::SelfCorrect) ++report.self_correct_pairs;
  }

  auto evaluate = [&](double& loss, double& gap) {
    loss = 0.0;
    gap = 0.0;
    for (const auto& [a, b] : idx) {
      const double sp = scorer.score(feats[a]);
      const double sn = scorer.score(feats[b]);
      loss += p3_loss(sp, sn);
      gap += sp - sn;
    }
    loss /= static_cast<double>(idx.size());
    gap /= static_cast<double>(idx.size());
  };
  double gap0 = 0.0;
  evaluate(report.initial_loss, gap0);

  const auto n = idx.size();
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const int batches_per_epoch = static_cast<int>((n + batch - 1) / batch);
  const int total_steps = batches_per_epoch * config.epochs;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(config.seed);

  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double lr = 0.0;
    for (std::size_t start = 0; start < n; start += batch, ++step) {
      const std::size_t stop = std::min(n, start + batch);
      const double weight = 1.0 / static_cast<double>(stop - start);
      Gradient grad;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& [a, b] = idx[order[i]];
        const double l = loss_grad(scorer, feats[a], feats[b], grad, weight);
        if (!std::isfinite(l)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step) + " (pair " + std::to_string(order[i]) + ", task " +
                              pairs[order[i]].task_id + ")");
        }
      }
      lr = config.lr_at(step, total_steps);
      scorer.apply(grad, lr);
      if (!scorer.all_finite()) {
        throw TrainingError("non-finite parameter after epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(step) + " at lr " + std::to_string(lr));
      }
    }
    EpochReport e;
    e.epoch = epoch;
    e.lr = lr;
    evaluate(e.loss, e.gap);
    if (!std::isfinite(e.loss)) throw TrainingError("non-finite loss after epoch " + std::to_string(epoch));
    e.heldout_top1 = ranking_accuracy(scorer, heldout);
    report.epochs.push_back(e);
    if (on_epoch) on_epoch(e);
  }
  report.final_gap = report.epochs.back().gap;
  return report;
}

}  // namespace vagent
