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

// vagent: command-line front end. Every subcommand except `serve` is
// deterministic given its seeds and writes JSON/JSONL.

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vagent/agent.hpp"
#include "vagent/annotation.hpp"
#include "vagent/error.hpp"
#include "vagent/prompt.hpp"
#include "vagent/remote.hpp"
#include "vagent/scorer.hpp"
#include "vagent/sim/environment.hpp"
#include "vagent/sim/evaluation.hpp"
#include "vagent/sim/world.hpp"
#include "vagent/training.hpp"
#include "vagent/verifier.hpp"
// After Eigen: <resolv.h> defines a _res macro.
#include "vagent/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vagent;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

// Bad flag values that CLI11 cannot catch on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Above this share of self-correct pairs the scorer learns to press back
// everywhere.
constexpr double kMaxSafeSelfCorrect = 0.1;

struct Globals {
  std::string data_dir;
};

struct TaskFilter {
  std::uint64_t catalog_seed = 1;
  int per_app = 5;
  std::vector<std::string> apps;
  std::vector<std::string> ids;
  bool held_out = false;

  void add(CLI::App* cmd, int default_per_app) {
    per_app = default_per_app;
    cmd->add_option("--catalog-seed", catalog_seed, "Seed of the task catalog")->capture_default_str();
    cmd->add_option("--per-app", per_app, "Task instances per app")->capture_default_str();
    cmd->add_option("--app", apps, "Only these apps (repeatable)");
    cmd->add_option("--task", ids, "Only these task ids (repeatable)");
    cmd->add_flag("--include-held-out", held_out, "Include held-out apps");
  }
};

struct AgentFlags {
  std::string memory = "rule_based";
  int budget = 30;
  std::string prompt_template;
  std::string summarizer;
  bool ungrouped = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--memory", memory, "action_history | rule_based | external")->capture_default_str();
    cmd->add_option("--budget", budget, "Step budget per episode")->capture_default_str();
    cmd->add_option("--prompt-template", prompt_template, "Prompt template file")->check(CLI::ExistingFile);
    cmd->add_option("--summarizer", summarizer, "Summarizer URL for external memory");
    cmd->add_flag("--ungrouped", ungrouped, "Score prompts in one batch instead of cache-friendly groups");
  }
};

sim::World load_world(const Globals& g) {
  return sim::World::load((g.data_dir.empty() ? sim::default_data_dir() : g.data_dir) + "/apps");
}

std::vector<sim::TaskSpec> select_tasks(const sim::World& world, const TaskFilter& f) {
  if (f.per_app < 1) throw UsageError("--per-app must be positive");
  const bool any_held_out = f.held_out || !f.ids.empty() || !f.apps.empty();
  auto all = sim::catalog(world, f.catalog_seed, sim::uniform_counts(world, f.per_app, any_held_out));
  std::vector<sim::TaskSpec> out;
  if (!f.ids.empty()) {
    for (const auto& id : f.ids) out.push_back(sim::find_task(all, id));
  } else {
    const std::set<std::string> apps(f.apps.begin(), f.apps.end());
    for (const auto& a : apps) world.app(a);
    for (auto& t : all) {
      if (!apps.empty() && !apps.contains(t.app)) continue;
      if (apps.empty() && t.held_out && !f.held_out) continue;
      out.push_back(std::move(t));
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (out.empty()) throw DataError("no tasks match the filter");
  return out;
}

// Runtime objects behind AgentConfig's raw pointers.
struct AgentSetup {
  AgentConfig config;
  std::unique_ptr<HttpSummarizer> summarizer;
};

std::unique_ptr<AgentSetup> make_agent(const AgentFlags& f) {
  auto s = std::make_unique<AgentSetup>();
  const auto mode = memory_mode_from_string(f.memory);
  if (!mode) throw UsageError("unknown memory mode '" + f.memory + "'");
  if (f.budget < 1) throw UsageError("--budget must be positive");
  s->config.memory = *mode;
  s->config.step_budget = f.budget;
  s->config.grouped_scoring = !f.ungrouped;
  if (!f.prompt_template.empty()) s->config.prompt = PromptTemplate::load(f.prompt_template);
  if (*mode == MemoryMode::External) {
    if (f.summarizer.empty()) throw UsageError("--memory external needs --summarizer");
    s->summarizer = std::make_unique<HttpSummarizer>(RemoteConfig{f.summarizer});
    s->config.summarizer = s->summarizer.get();
  }
  return s;
}

// oracle | untrained | random:<seed> | model:<path> | noisy:<sd>[:<seed>] | http://host:port
BackendFactory parse_backend(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (spec == "oracle") return {};
  if (spec == "untrained") return shared_backend(std::make_shared<const FeatureScorer>());
  if (kind == "http") return shared_backend(std::make_shared<const HttpScorer>(RemoteConfig{spec}));
  if (kind != "model" && kind != "random" && kind != "noisy") throw UsageError("unknown backend '" + spec + "'");
  if (arg.empty()) throw UsageError("backend '" + spec + "' is missing its parameter");
  if (kind == "model") return shared_backend(std::make_shared<const FeatureScorer>(FeatureScorer::load(arg)));
  try {
    if (kind == "random") {
      return shared_backend(std::make_shared<const FeatureScorer>(FeatureScorer::randomized(std::stoull(arg))));
    }
    const auto c2 = arg.find(':');
    const double sd = std::stod(arg.substr(0, c2));
    const std::uint64_t seed = c2 == std::string::npos ? 0 : std::stoull(arg.substr(c2 + 1));
    return noisy_oracle_backend(seed, sd, {});
  } catch (const std::logic_error&) {
    throw UsageError("bad parameter in backend '" + spec + "'");
  }
}

std::shared_ptr<const ScorerBackend> bind_backend(const BackendFactory& f, const sim::SimDevice& device) {
  if (f) return f(device);
  return std::make_shared<const sim::OracleScorer>(device);
}

std::string file_name(const std::string& id) {
  std::string s = id;
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-' && c != '_') c = '_';
  }
  return s;
}

void write_json(const json& j, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::vector<TaskTrace> load_traces(const std::vector<std::string>& paths) {
  std::vector<std::string> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.path().string().ends_with(".trace.jsonl")) files.push_back(e.path().string());
      }
    } else {
      files.push_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<TaskTrace> out;
  for (const auto& f : files) out.push_back(load_trace(f));
  return out;
}

std::vector<LabeledStep> steps_of(std::span<const TaskTrace> traces, LabelSource source = LabelSource::Oracle) {
  std::vector<LabeledStep> out;
  for (const auto& t : traces) {
    auto s = labeled_steps(t, source);
    out.insert(out.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
  }
  return out;
}

json triage_json(std::span<const StepVerdict> verdicts, std::optional<double> fixed) {
  const std::size_t n = verdicts.size();
  json j = {{"steps", n}};
  if (n == 0) return j;
  std::vector<double> entropy;
  for (const auto& v : verdicts) entropy.push_back(v.entropy);
  const double thr = fixed ? *fixed : compute_threshold(entropy);
  // std::vector<bool> has no contiguous storage to span over.
  const auto flags = std::make_unique<bool[]>(n);
  const auto correct = std::make_unique<bool[]>(n);
  const auto wrong = std::make_unique<bool[]>(n);
  std::size_t flagged = 0;
  for (std::size_t i = 0; i < n; ++i) {
    flags[i] = entropy[i] > thr;
    correct[i] = verdicts[i].correct;
    wrong[i] = !verdicts[i].correct;
    flagged += flags[i];
  }
  const TruthTable t = truth_table({flags.get(), n}, {correct.get(), n});
  const double auc = roc_auc(entropy, {wrong.get(), n});
  j["threshold"] = thr;
  j["threshold_mode"] = fixed ? "fixed" : "median";
  j["flag_rate"] = static_cast<double>(flagged) / static_cast<double>(n);
  j["truth_table"] = t.to_json();
  j["auc"] = std::isfinite(auc) ? json(auc) : json(nullptr);
  return j;
}

// ---------------------------------------------------------------- tasks

int cmd_tasks(const Globals& g, const TaskFilter& f, const std::string& describe) {
  const auto world = load_world(g);
  const auto tasks = select_tasks(world, f);
  if (!describe.empty()) {
    std::cout << sim::task_to_json(sim::find_task(tasks, describe)).dump(2) << "\n";
    return kOk;
  }
  for (const auto& t : tasks) {
    sim::SimDevice dev(world);
    dev.reset(t);
    std::cout << json{{"id", t.id},
                      {"app", t.app},
                      {"template", t.template_id},
                      {"held_out", t.held_out},
                      {"oracle_steps", dev.oracle_path().size()},
                      {"goal", t.goal}}
                     .dump()
              << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- run

struct RunFlags {
  std::string backend = "oracle";
  std::uint64_t seed = 0;
  std::string out = "run";
  int jobs = 1;
  double threshold = 1.0;
  bool median = false;
};

int cmd_run(const Globals& g, const TaskFilter& f, const AgentFlags& af, const RunFlags& rf) {
  if (rf.jobs < 1) throw UsageError("--jobs must be positive");
  const auto world = load_world(g);
  const auto tasks = select_tasks(world, f);
  const auto factory = parse_backend(rf.backend);
  const auto agent = make_agent(af);

  // Workers take tasks in order from a shared counter; results land in the
  // task's slot so output order never depends on timing.
  std::vector<TaskTrace> traces(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    sim::SimDevice device(world);
    const auto backend = bind_backend(factory, device);
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        traces[i] = sim::run_episode(device, tasks[i], rf.seed, *backend, agent->config);
        traces[i].config["backend"] = rf.backend;
        traces[i].config["seed"] = rf.seed;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < rf.jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  fs::create_directories(fs::path(rf.out) / "traces");
  int successes = 0;
  std::size_t steps = 0;
  std::vector<StepVerdict> verdicts;
  json results = json::array();
  for (const auto& t : traces) {
    save_trace(t, (fs::path(rf.out) / "traces" / (file_name(t.task_id) + ".trace.jsonl")).string());
    successes += t.outcome == Outcome::Success;
    steps += t.records.size();
    for (const auto& r : t.records) verdicts.push_back({r.entropy, step_correct(r)});
    results.push_back({{"task", t.task_id}, {"outcome", to_string(t.outcome)}, {"steps", t.records.size()}});
  }
  const double n = static_cast<double>(traces.size());
  json summary = {{"schema", "vagent.run/1"},
                  {"backend", rf.backend},
                  {"seed", rf.seed},
                  {"tasks", traces.size()},
                  {"successes", successes},
                  {"sr", successes / n},
                  {"mean_steps", static_cast<double>(steps) / n},
                  {"agent", agent->config.to_json()},
                  {"triage", triage_json(verdicts, rf.median ? std::nullopt : std::optional(rf.threshold))},
                  {"results", results}};
  summary["flag_rate"] = summary["triage"].value("flag_rate", 0.0);
  write_json(summary, (fs::path(rf.out) / "summary.json").string());
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- dataset

struct DatasetFlags {
  std::string out = "dataset";
  double eval_fraction = 0.2;
  std::uint64_t split_seed = 1;
  std::uint64_t env_seed = 1;
  std::uint64_t seed = 0;
  double sc_fraction = 0.025;
};

void warn_self_correct(double fraction) {
  if (fraction > kMaxSafeSelfCorrect) {
    std::cerr << "warning: self-correct fraction " << fraction << " exceeds " << kMaxSafeSelfCorrect
              << "; the scorer may collapse onto NavigateBack\n";
  }
}

int cmd_dataset(const Globals& g, TaskFilter f, const AgentFlags& af, const DatasetFlags& df) {
  if (df.sc_fraction < 0.0 || df.sc_fraction >= 1.0) throw UsageError("--sc-fraction must lie in [0, 1)");
  warn_self_correct(df.sc_fraction);
  f.held_out = true;
  const auto world = load_world(g);
  const auto tasks = select_tasks(world, f);
  const auto agent = make_agent(af);
  const TaskSplit split = split_tasks(tasks, df.eval_fraction, df.split_seed);
  if (split.train.empty()) throw DataError("the split left no training tasks");

  sim::SimDevice device(world);
  const auto train_traces = oracle_traces(device, split.train, df.env_seed, agent->config);
  const auto steps = steps_of(train_traces);
  auto pairs = build_process_pairs(steps);
  const std::size_t process = pairs.size();
  SelfCorrectConfig sc;
  sc.target = self_correct_target(process, df.sc_fraction);
  sc.seed = df.seed;
  sc.env_seed = df.env_seed;
  sc.agent = agent->config;
  auto sc_pairs = build_self_correct_pairs(device, split.train, sc);
  pairs.insert(pairs.end(), sc_pairs.begin(), sc_pairs.end());
  check_no_held_out(pairs, world);

  const fs::path dir(df.out);
  fs::create_directories(dir / "train");
  fs::create_directories(dir / "eval");
  fs::create_directories(dir / "ood");
  for (const auto& t : train_traces) save_trace(t, (dir / "train" / (file_name(t.task_id) + ".trace.jsonl")).string());
  std::size_t eval_steps = 0;
  for (const auto* part : {&split.eval, &split.ood}) {
    const auto sub = part == &split.eval ? "eval" : "ood";
    for (const auto& t : oracle_traces(device, *part, df.env_seed, agent->config)) {
      if (part == &split.eval) eval_steps += t.records.size();
      save_trace(t, (dir / sub / (file_name(t.task_id) + ".trace.jsonl")).string());
    }
  }
  save_pairs(pairs, (dir / "pairs.jsonl").string());
  write_json(split.manifest(), (dir / "split.json").string());
  const json manifest = {{"schema", "vagent.dataset/1"},
                         {"catalog_seed", f.catalog_seed},
                         {"per_app", f.per_app},
                         {"split_seed", df.split_seed},
                         {"env_seed", df.env_seed},
                         {"seed", df.seed},
                         {"train_tasks", split.train.size()},
                         {"eval_tasks", split.eval.size()},
                         {"ood_tasks", split.ood.size()},
                         {"train_steps", steps.size()},
                         {"eval_steps", eval_steps},
                         {"process_pairs", process},
                         {"self_correct_pairs", sc_pairs.size()},
                         {"self_correct_fraction", df.sc_fraction}};
  write_json(manifest, (dir / "dataset.json").string());
  std::cout << manifest.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- train

struct TrainFlags {
  std::string pairs;
  std::vector<std::string> heldout;
  std::string out = "model.json";
  std::string report;
  TrainerConfig trainer;
  std::string head = "linear";
};

int cmd_train(const Globals& g, TrainFlags tf) {
  tf.trainer.head = head_from_name(tf.head);
  tf.trainer.validate();
  warn_self_correct(tf.trainer.self_correct_fraction);
  const auto world = load_world(g);
  const auto pairs = load_pairs(tf.pairs);
  check_no_held_out(pairs, world);
  const auto sc = static_cast<std::size_t>(
      std::count_if(pairs.begin(), pairs.end(), [](const auto& p) { return p.kind == PairKind::SelfCorrect; }));
  if (!pairs.empty()) warn_self_correct(static_cast<double>(sc) / static_cast<double>(pairs.size()));
  const auto traces = load_traces(tf.heldout);
  const auto heldout = steps_of(traces);

  FeatureScorerConfig sc_cfg;
  sc_cfg.head = tf.trainer.head;
  sc_cfg.hidden = tf.trainer.hidden;
  sc_cfg.seed = tf.trainer.seed;
  FeatureScorer scorer(sc_cfg);
  const TrainingReport report = train(scorer, pairs, heldout, tf.trainer, [](const EpochReport& e) {
    std::cerr << "epoch " << e.epoch << " loss " << e.loss << " heldout_top1 " << e.heldout_top1 << " lr " << e.lr
              << "\n";
  });
  scorer.save(tf.out);

  json j = report.to_json();
  j["trainer"] = tf.trainer.to_json();
  j["model"] = tf.out;
  if (!heldout.empty()) {
    const double trained = report.epochs.back().heldout_top1;
    const double reloaded = ranking_accuracy(FeatureScorer::load(tf.out), heldout);
    j["heldout_top1"] = trained;
    j["reload_top1"] = reloaded;
    j["chance_top1"] = chance_accuracy(heldout);
    if (std::abs(trained - reloaded) > 1e-9) {
      throw Error("reloaded model scores " + std::to_string(reloaded) + " against " + std::to_string(trained));
    }
  }
  if (!tf.report.empty()) write_json(j, tf.report);
  std::cout << j.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- eval

struct EvalFlags {
  std::string backend = "oracle";
  sim::EvalConfig eval;
  std::string out;
  std::string traces_dir;
  double threshold = 1.0;
  bool median = true;
  std::vector<std::string> teacher_forced;
};

int cmd_eval(const Globals& g, const TaskFilter& f, const AgentFlags& af, EvalFlags ef) {
  if (ef.eval.episodes < 1) throw UsageError("--episodes must be positive");
  const auto world = load_world(g);
  const auto factory = parse_backend(ef.backend);
  const std::optional<double> fixed = ef.median ? std::nullopt : std::optional(ef.threshold);
  json j = {{"schema", "vagent.eval/1"}, {"backend", ef.backend}};

  if (!ef.teacher_forced.empty()) {
    // Triage on recorded oracle traces, each step scored in its own state.
    const auto steps = steps_of(load_traces(ef.teacher_forced));
    if (steps.empty()) throw DataError("no labeled steps in the given traces");
    sim::SimDevice device(world);
    const auto backend = bind_backend(factory, device);
    const auto verdicts = score_steps(*backend, steps);
    const auto hits = std::count_if(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.correct; });
    j["mode"] = "teacher_forced";
    j["top1"] = static_cast<double>(hits) / static_cast<double>(verdicts.size());
    j["triage"] = triage_json(verdicts, fixed);
  } else {
    const auto tasks = select_tasks(world, f);
    const auto agent = make_agent(af);
    ef.eval.agent = agent->config;
    sim::SimDevice device(world);
    const auto backend = bind_backend(factory, device);
    std::vector<TaskTrace> traces;
    const sim::EvalSummary s = sim::evaluate(device, tasks, *backend, ef.eval, &traces);
    std::vector<StepVerdict> verdicts;
    for (const auto& t : traces) {
      for (const auto& r : t.records) {
        if (!r.corrected) verdicts.push_back({r.entropy, step_correct(r)});  // skips the injected step
      }
    }
    if (!ef.traces_dir.empty()) {
      fs::create_directories(ef.traces_dir);
      for (std::size_t i = 0; i < traces.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%05zu.", i);
        save_trace(traces[i], (fs::path(ef.traces_dir) / (name + file_name(traces[i].task_id) + ".trace.jsonl"))
                                  .string());
      }
    }
    j["mode"] = ef.eval.inject ? "injected" : "episodes";
    j["summary"] = s.to_json();
    j["triage"] = triage_json(verdicts, fixed);
  }
  write_json(j, ef.out);
  if (!ef.out.empty() && ef.out != "-") std::cout << j.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- annotate

struct AnnotateFlags {
  std::string backend = "noisy:2.0";
  std::string out = "annotations";
  std::uint64_t env_seed = 0;
  double threshold = 1.0;
  std::string mode = "fixed";
  int window = 2;
  int max_interventions = 100;
};

int cmd_annotate(const Globals& g, const TaskFilter& f, const AgentFlags& af, const AnnotateFlags& nf) {
  const auto world = load_world(g);
  const auto tasks = select_tasks(world, f);
  const auto factory = parse_backend(nf.backend);
  const auto agent = make_agent(af);
  const auto mode = threshold_mode_from_string(nf.mode);
  if (!mode) throw UsageError("unknown threshold mode '" + nf.mode + "'");
  SessionConfig cfg;
  cfg.agent = agent->config;
  cfg.mode = *mode;
  cfg.threshold = nf.threshold;
  cfg.window = nf.window;
  cfg.env_seed = nf.env_seed;

  std::vector<std::unique_ptr<AnnotationSession>> sessions;
  std::vector<const AnnotationSession*> finished;
  json rows = json::array();
  int interventions = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "a%04zu", i);
    auto s = std::make_unique<AnnotationSession>(id, world, tasks[i], factory, cfg);
    drive_with_oracle(*s, nf.max_interventions);
    interventions += s->interventions();
    rows.push_back({{"session", s->id()},
                    {"task", tasks[i].id},
                    {"status", to_string(s->status())},
                    {"interventions", s->interventions()},
                    {"steps", s->trace().records.size()}});
    if (s->status() == SessionStatus::Finished && !tasks[i].held_out) finished.push_back(s.get());
    sessions.push_back(std::move(s));
  }
  json j = {{"schema", "vagent.annotate/1"},
            {"backend", nf.backend},
            {"sessions", sessions.size()},
            {"finished", finished.size()},
            {"interventions", interventions},
            {"mean_interventions", static_cast<double>(interventions) / static_cast<double>(sessions.size())},
            {"rows", rows}};
  if (!finished.empty()) {
    j["export"] = write_export(export_sessions(finished, world), nf.out);
  }
  std::cout << j.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- cost

struct CostFlags {
  std::uint64_t env_seed = 0;
  double rate = kDefaultPrefillRate;
  int synthetic = 0;
  std::string out;
};

json cost_row(const std::string& task, int step, std::span<const VerificationPrompt> prompts,
              const ActionSpace& space, double rate) {
  const CostReport plain = uncached_cost(prompts, rate);
  const CostReport grouped = simulate_cost(schedule(prompts, space), prompts, rate);
  const CostReport ungrouped = simulate_cost(sequential_schedule(prompts.size()), prompts, rate);
  auto ratio = [&](const CostReport& c) { return static_cast<double>(plain.fresh_tokens) / c.fresh_tokens; };
  return {{"task", task},
          {"step", step},
          {"actions", prompts.size()},
          {"uncached_tokens", plain.fresh_tokens},
          {"grouped_tokens", grouped.fresh_tokens},
          {"ungrouped_tokens", ungrouped.fresh_tokens},
          {"ratio_grouped", ratio(grouped)},
          {"ratio_ungrouped", ratio(ungrouped)},
          {"latency_uncached_s", plain.est_latency_s},
          {"latency_grouped_s", grouped.est_latency_s}};
}

int cmd_cost(const Globals& g, const TaskFilter& f, const AgentFlags& af, const CostFlags& cf) {
  if (cf.rate <= 0.0) throw UsageError("--rate must be positive");
  const auto world = load_world(g);
  const auto agent = make_agent(af);
  std::vector<json> rows;
  if (cf.synthetic > 0) {
    const UiState s = wide_screen(cf.synthetic);
    const ActionSpace space = extract(s);
    WorkingMemory memory;
    memory.entries = {"Opened the app.", "Scrolled down the list."};
    const auto prompts = build_prompts(s, "Open \"Entry 1\"", memory, space, agent->config.prompt);
    rows.push_back(cost_row("synthetic", 0, prompts, space, cf.rate));
  } else {
    const auto tasks = select_tasks(world, f);
    sim::SimDevice device(world);
    for (const auto& t : oracle_traces(device, tasks, cf.env_seed, agent->config)) {
      for (const auto& s : labeled_steps(t)) {
        const auto prompts = build_prompts(s.context, s.space, agent->config.prompt);
        rows.push_back(cost_row(s.task_id, s.step, prompts, s.space, cf.rate));
      }
    }
  }
  std::int64_t plain = 0, grouped = 0, ungrouped = 0;
  double min_ratio = INFINITY;
  bool grouped_wins = true;
  for (const auto& r : rows) {
    plain += r["uncached_tokens"].get<std::int64_t>();
    grouped += r["grouped_tokens"].get<std::int64_t>();
    ungrouped += r["ungrouped_tokens"].get<std::int64_t>();
    min_ratio = std::min(min_ratio, r["ratio_grouped"].get<double>());
    grouped_wins = grouped_wins && r["ratio_grouped"].get<double>() >= r["ratio_ungrouped"].get<double>();
  }
  const json agg = {{"schema", "vagent.cost/1"},
                    {"steps", rows.size()},
                    {"rate", cf.rate},
                    {"uncached_tokens", plain},
                    {"grouped_tokens", grouped},
                    {"ungrouped_tokens", ungrouped},
                    {"ratio_grouped", static_cast<double>(plain) / static_cast<double>(grouped)},
                    {"ratio_ungrouped", static_cast<double>(plain) / static_cast<double>(ungrouped)},
                    {"min_step_ratio", min_ratio},
                    {"grouped_never_worse", grouped_wins}};
  if (!cf.out.empty()) {
    std::ofstream out(cf.out);
    if (!out) throw DataError("cannot write " + cf.out);
    for (const auto& r : rows) out << r.dump() << "\n";
  }
  std::cout << agg.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- export

int cmd_export(const Globals& g, const std::vector<std::string>& inputs, const std::string& labels,
               const std::string& out) {
  LabelSource source;
  if (labels == "oracle") {
    source = LabelSource::Oracle;
  } else if (labels == "executed") {
    source = LabelSource::Executed;
  } else {
    throw UsageError("--labels must be oracle or executed");
  }
  const auto world = load_world(g);
  const auto traces = load_traces(inputs);
  if (traces.empty()) throw DataError("no traces found");
  const auto steps = steps_of(traces, source);
  const auto pairs = build_process_pairs(steps);
  check_no_held_out(pairs, world);
  fs::create_directories(out);
  save_pairs(pairs, (fs::path(out) / "pairs.jsonl").string());
  json tasks = json::array();
  for (const auto& t : traces) tasks.push_back(t.task_id);
  const json manifest = {{"schema", "vagent.export/1"},
                         {"labels", labels},
                         {"traces", traces.size()},
                         {"steps", steps.size()},
                         {"pairs", pairs.size()},
                         {"tasks", tasks}};
  write_json(manifest, (fs::path(out) / "manifest.json").string());
  std::cout << manifest.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------- serve

struct ServeFlags {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string model;
  std::string export_dir = "exports";
  double threshold = 1.0;
  std::string mode = "fixed";
  int window = 2;
};

int cmd_serve(const Globals& g, TaskFilter f, const AgentFlags& af, const ServeFlags& sf) {
  f.held_out = true;
  const auto world = load_world(g);
  const auto agent = make_agent(af);
  const auto mode = threshold_mode_from_string(sf.mode);
  if (!mode) throw UsageError("unknown threshold mode '" + sf.mode + "'");
  ServiceConfig cfg;
  cfg.tasks = select_tasks(world, f);
  if (!sf.model.empty()) cfg.model = std::make_shared<const FeatureScorer>(FeatureScorer::load(sf.model));
  cfg.session.agent = agent->config;
  cfg.session.mode = *mode;
  cfg.session.threshold = sf.threshold;
  cfg.session.window = sf.window;
  cfg.export_dir = sf.export_dir;

  // Signals go to a dedicated thread so that stop() runs outside a handler.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  AnnotationService service(world, cfg);
  const int port = service.bind(sf.host, sf.port);
  std::cerr << "vagent: serving " << cfg.tasks.size() << " tasks on http://" << sf.host << ":" << port << "\n";
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    service.stop();
  });
  service.serve();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cerr << "vagent: stopped\n";
  return kOk;
}

// ---------------------------------------------------------------- help

json help_json(const CLI::App& app) {
  json j = {{"name", app.get_name()}, {"description", app.get_description()}, {"options", json::array()}};
  for (const CLI::Option* o : app.get_options()) {
    if (o->get_name() == "--help" || o->get_name() == "--help-all") continue;
    json opt = {{"name", o->get_name()},
                {"description", o->get_description()},
                {"required", o->get_required()},
                {"flag", o->get_expected_min() == 0}};
    if (!o->get_default_str().empty()) opt["default"] = o->get_default_str();
    if (!o->get_envname().empty()) opt["env"] = o->get_envname();
    j["options"].push_back(opt);
  }
  json subs = json::array();
  for (const CLI::App* s : app.get_subcommands({})) subs.push_back(help_json(*s));
  if (!subs.empty()) j["subcommands"] = subs;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verifier-driven UI agent: simulate, train, annotate, evaluate."};
  app.name("vagent");
  app.set_config("--config", "", "Read key=value options from a file (TOML/INI; sections name subcommands)");
  Globals g;
  bool help_as_json = false;
  app.add_option("--data-dir", g.data_dir, "Directory holding apps/ and the prompt template")
      ->envname("VAGENT_DATA_DIR");
  app.add_flag("--help-json", help_as_json, "Print every subcommand and option as JSON");
  app.require_subcommand(0, 1);

  TaskFilter filter;
  AgentFlags agent;
  std::string describe;
  auto* tasks = app.add_subcommand("tasks", "List the task catalog as JSONL, or describe one task");
  filter.add(tasks, 5);
  tasks->add_option("--describe", describe, "Print the full definition of one task id");

  RunFlags run;
  auto* run_cmd = app.add_subcommand("run", "Run episodes; write traces and a summary");
  filter.add(run_cmd, 5);
  agent.add(run_cmd);
  run_cmd->add_option("--backend", run.backend, "oracle | untrained | random:<seed> | model:<path> | "
                                                "noisy:<sd>[:<seed>] | http://host:port")
      ->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Device reset seed")->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();
  run_cmd->add_option("--jobs,-j", run.jobs, "Parallel workers")->capture_default_str();
  run_cmd->add_option("--threshold", run.threshold, "Entropy flag threshold (nats)")->capture_default_str();
  run_cmd->add_flag("--median-threshold", run.median, "Flag above the median entropy instead");

  DatasetFlags dataset;
  auto* dataset_cmd = app.add_subcommand("dataset", "Build a split, oracle traces and preference pairs");
  filter.add(dataset_cmd, 70);
  agent.add(dataset_cmd);
  dataset_cmd->add_option("--out", dataset.out, "Output directory")->capture_default_str();
  dataset_cmd->add_option("--eval-fraction", dataset.eval_fraction, "Share of seen-app instances held out")
      ->capture_default_str();
  dataset_cmd->add_option("--split-seed", dataset.split_seed, "Split seed")->capture_default_str();
  dataset_cmd->add_option("--env-seed", dataset.env_seed, "Device reset seed")->capture_default_str();
  dataset_cmd->add_option("--seed", dataset.seed, "Self-correct branch sampler seed")->capture_default_str();
  dataset_cmd->add_option("--sc-fraction", dataset.sc_fraction, "Share of self-correct pairs in the pair file")
      ->capture_default_str();

  TrainFlags tr;
  auto* train_cmd = app.add_subcommand("train", "Train a feature scorer on a pair file");
  train_cmd->add_option("--pairs", tr.pairs, "Pair file (JSONL)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--heldout", tr.heldout, "Trace files or directories for held-out accuracy");
  train_cmd->add_option("--out", tr.out, "Model path")->capture_default_str();
  train_cmd->add_option("--report", tr.report, "Report path");
  train_cmd->add_option("--epochs", tr.trainer.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.trainer.batch_size, "Pairs per batch")->capture_default_str();
  train_cmd->add_option("--lr", tr.trainer.peak_lr, "Peak learning rate")->capture_default_str();
  train_cmd->add_option("--warmup", tr.trainer.warmup_steps, "Warm-up steps")->capture_default_str();
  train_cmd->add_option("--floor-lr", tr.trainer.floor_lr, "Final learning rate")->capture_default_str();
  train_cmd->add_option("--head", tr.head, "linear | mlp")->capture_default_str();
  train_cmd->add_option("--hidden", tr.trainer.hidden, "MLP hidden units")->capture_default_str();
  train_cmd->add_option("--seed", tr.trainer.seed, "Shuffle and init seed")->capture_default_str();
  train_cmd->add_option("--sc-fraction", tr.trainer.self_correct_fraction,
                        "Self-correct fraction the pairs were built with")
      ->capture_default_str();

  EvalFlags ev;
  auto* eval_cmd = app.add_subcommand("eval", "Success rate, recovery and entropy triage");
  filter.add(eval_cmd, 5);
  agent.add(eval_cmd);
  eval_cmd->add_option("--backend", ev.backend, "Scorer backend spec")->capture_default_str();
  eval_cmd->add_option("--episodes", ev.eval.episodes, "Counted episodes")->capture_default_str();
  eval_cmd->add_option("--env-seed", ev.eval.env_seed, "First episode's reset seed")->capture_default_str();
  eval_cmd->add_option("--seed", ev.eval.seed, "Injection sampler seed")->capture_default_str();
  eval_cmd->add_flag("--inject", ev.eval.inject, "Execute a reversible wrong action first");
  eval_cmd->add_option("--threshold", ev.threshold, "Fixed entropy threshold; default is the median")
      ->each([&](const std::string&) { ev.median = false; });
  eval_cmd->add_option("--teacher-forced", ev.teacher_forced,
                       "Score the steps of these oracle traces instead of running episodes");
  eval_cmd->add_option("--traces", ev.traces_dir, "Directory for episode traces");
  eval_cmd->add_option("--out", ev.out, "Report path (stdout when empty)");

  AnnotateFlags an;
  auto* annotate_cmd = app.add_subcommand("annotate", "Headless annotation with oracle corrections");
  filter.add(annotate_cmd, 2);
  agent.add(annotate_cmd);
  annotate_cmd->add_option("--backend", an.backend, "Scorer backend spec")->capture_default_str();
  annotate_cmd->add_option("--out", an.out, "Export directory")->capture_default_str();
  annotate_cmd->add_option("--env-seed", an.env_seed, "Device reset seed")->capture_default_str();
  annotate_cmd->add_option("--threshold", an.threshold, "Fixed threshold (nats)")->capture_default_str();
  annotate_cmd->add_option("--threshold-mode", an.mode, "fixed | rolling")->capture_default_str();
  annotate_cmd->add_option("--window", an.window, "Review window in steps")->capture_default_str();
  annotate_cmd->add_option("--max-interventions", an.max_interventions, "Per session")->capture_default_str();

  CostFlags cost;
  auto* cost_cmd = app.add_subcommand("cost", "Prefix-cache token accounting per step");
  filter.add(cost_cmd, 2);
  agent.add(cost_cmd);
  cost_cmd->add_option("--env-seed", cost.env_seed, "Device reset seed")->capture_default_str();
  cost_cmd->add_option("--rate", cost.rate, "Prefill tokens per second")->capture_default_str();
  cost_cmd->add_option("--synthetic", cost.synthetic, "Probe one synthetic step with this many actions");
  cost_cmd->add_option("--out", cost.out, "Per-step rows (JSONL)");

  std::vector<std::string> export_in;
  std::string export_labels = "oracle", export_out = "export";
  auto* export_cmd = app.add_subcommand("export", "Turn trace files into a pair file");
  export_cmd->add_option("traces", export_in, "Trace files or directories")->required();
  export_cmd->add_option("--labels", export_labels, "oracle | executed")->capture_default_str();
  export_cmd->add_option("--out", export_out, "Output directory")->capture_default_str();

  ServeFlags sv;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the annotation HTTP API");
  filter.add(serve_cmd, 5);
  agent.add(serve_cmd);
  serve_cmd->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", sv.port, "Port; 0 picks a free one")->envname("VAGENT_PORT")->capture_default_str();
  serve_cmd->add_option("--model", sv.model, "Model file for the \"model\" backend")
      ->envname("VAGENT_MODEL")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--export-dir", sv.export_dir, "Export root")->capture_default_str();
  serve_cmd->add_option("--threshold", sv.threshold, "Default fixed threshold")->capture_default_str();
  serve_cmd->add_option("--threshold-mode", sv.mode, "fixed | rolling")->capture_default_str();
  serve_cmd->add_option("--window", sv.window, "Review window in steps")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (help_as_json) {
    std::cout << help_json(app).dump(2) << "\n";
    return kOk;
  }
  try {
    if (*tasks) return cmd_tasks(g, filter, describe);
    if (*run_cmd) return cmd_run(g, filter, agent, run);
    if (*dataset_cmd) return cmd_dataset(g, filter, agent, dataset);
    if (*train_cmd) return cmd_train(g, tr);
    if (*eval_cmd) return cmd_eval(g, filter, agent, ev);
    if (*annotate_cmd) return cmd_annotate(g, filter, agent, an);
    if (*cost_cmd) return cmd_cost(g, filter, agent, cost);
    if (*export_cmd) return cmd_export(g, export_in, export_labels, export_out);
    if (*serve_cmd) return cmd_serve(g, filter, agent, sv);
    std::cerr << app.help();
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "vagent: " << e.what() << "\n";
    return kUsage;
  } catch (const vagent::ParseError& e) {
    std::cerr << "vagent: " << e.what() << "\n";
    return kData;
  } catch (const ValidationError& e) {
    std::cerr << "vagent: " << e.what() << "\n";
    return kData;
  } catch (const DataError& e) {
    std::cerr << "vagent: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "vagent: " << e.what() << "\n";
    return kRuntime;
  }
}
