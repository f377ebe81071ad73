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

#include "vagent/scorer.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "vagent/error.hpp"

namespace vagent {

namespace {

constexpr const char* kModelSchema = "vagent.model/1";

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

template <typename V>
std::vector<double> to_vec(const V& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

template <typename V>
void from_vec(const nlohmann::json& j, V& v, Eigen::Index expected) {
  const auto xs = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(xs.size()) != expected) {
    throw DataError("model vector has " + std::to_string(xs.size()) + " entries, expected " +
                    std::to_string(expected));
  }
  for (Eigen::Index i = 0; i < expected; ++i) v(i) = xs[static_cast<std::size_t>(i)];
}

}  // namespace

std::string head_name(HeadType h) { return h == HeadType::Linear ? "linear" : "mlp"; }

HeadType head_from_name(const std::string& s) {
  if (s == "linear") return HeadType::Linear;
  if (s == "mlp") return HeadType::Mlp;
  throw DataError("unknown head type '" + s + "'");
}

FeatureScorer::FeatureScorer(FeatureScorerConfig config)
    : config_(config), featurizer_(config.features) {
  if (config_.features.dim <= 0) throw ValidationError("feature dim must be positive");
  if (!(config_.features.norm > 0.0) || !std::isfinite(config_.features.norm)) {
    throw ValidationError("feature norm must be positive");
  }
  if (config_.head == HeadType::Linear) {
    head_ = LinearHead<double>(config_.features.dim);
  } else {
    if (config_.hidden <= 0) throw ValidationError("hidden width must be positive");
    head_ = MlpHead<double>(config_.features.dim, config_.hidden, config_.seed, config_.init_scale);
  }
}

FeatureScorer FeatureScorer::randomized(std::uint64_t seed, double scale, FeatureScorerConfig config) {
  config.head = HeadType::Linear;
  FeatureScorer s(config);
  std::mt19937_64 rng(seed);
  auto& w = s.linear()->weights();
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = (2.0 * unit_uniform(rng) - 1.0) * scale;
  return s;
}

double FeatureScorer::score(const SparseFeatures& x) const {
  return std::visit([&](const auto& h) { return h.score(x); }, head_);
}

void FeatureScorer::accumulate(const SparseFeatures& x, double coef, Gradient& grad) const {
  std::visit([&](const auto& h) { h.accumulate(x, coef, grad); }, head_);
}

void FeatureScorer::apply(const Gradient& grad, double step) {
  std::visit([&](auto& h) { h.apply(grad, step); }, head_);
}

double& FeatureScorer::param(const ParamRef& p) {
  return std::visit([&](auto& h) -> double& { return h.param(p); }, head_);
}

bool FeatureScorer::all_finite() const {
  return std::visit([](const auto& h) { return h.all_finite(); }, head_);
}

std::vector<double> FeatureScorer::score_batch(std::span<const VerificationPrompt> prompts) const {
  std::vector<double> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) out.push_back(score(featurizer_(p)));
  return out;
}

std::string FeatureScorer::descriptor() const {
  std::ostringstream os;
  os << "feature-" << head_name(config_.head) << "(D=" << config_.features.dim;
  if (config_.head == HeadType::Mlp) os << ",H=" << config_.hidden;
  os << ")";
  return os.str();
}

nlohmann::json FeatureScorer::to_json() const {
  nlohmann::json j;
  j["schema"] = kModelSchema;
  j["head"] = head_name(config_.head);
  j["dim"] = config_.features.dim;
  j["min_ngram"] = config_.features.min_ngram;
  j["max_ngram"] = config_.features.max_ngram;
  j["memory_tail"] = config_.features.memory_tail;
  j["norm"] = config_.features.norm;
  if (const auto* lin = linear()) {
    nlohmann::json w = nlohmann::json::array();
    const auto& weights = lin->weights();
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (weights(i) != 0.0) w.push_back({i, weights(i)});
    }
    j["weights"] = std::move(w);
    j["bias"] = lin->bias();
  } else {
    const auto& m = *mlp();
    j["hidden"] = config_.hidden;
    j["seed"] = config_.seed;
    j["init_scale"] = config_.init_scale;
    nlohmann::json cols = nlohmann::json::array();
    for (Eigen::Index c : m.touched_columns()) {
      cols.push_back({c, to_vec(Eigen::VectorXd(m.input_weights().col(c)))});
    }
    j["columns"] = std::move(cols);
    j["hidden_bias"] = to_vec(m.hidden_bias());
    j["output_weights"] = to_vec(m.output_weights());
    j["output_bias"] = m.output_bias();
  }
  return j;
}

FeatureScorer FeatureScorer::from_json(const nlohmann::json& j) {
  try {
    if (j.value("schema", std::string()) != kModelSchema) {
      throw DataError("model schema mismatch: expected " + std::string(kModelSchema));
    }
    FeatureScorerConfig cfg;
    cfg.head = head_from_name(j.at("head").get<std::string>());
    cfg.features.dim = j.at("dim").get<int>();
    cfg.features.min_ngram = j.at("min_ngram").get<int>();
    cfg.features.max_ngram = j.at("max_ngram").get<int>();
    cfg.features.memory_tail = j.at("memory_tail").get<int>();
    cfg.features.norm = j.at("norm").get<double>();
    if (cfg.head == HeadType::Mlp) {
      cfg.hidden = j.at("hidden").get<int>();
      cfg.seed = j.at("seed").get<std::uint64_t>();
      cfg.init_scale = j.at("init_scale").get<double>();
    }
    FeatureScorer s(cfg);
    if (auto* lin = s.linear()) {
      for (const auto& e : j.at("weights")) {
        const auto i = e.at(0).get<Eigen::Index>();
        if (i < 0 || i >= cfg.features.dim) throw DataError("weight index out of range");
        lin->weights()(i) = e.at(1).get<double>();
      }
      lin->bias() = j.at("bias").get<double>();
    } else {
      auto& m = *s.mlp();
      for (const auto& e : j.at("columns")) {
        const auto c = e.at(0).get<Eigen::Index>();
        if (c < 0 || c >= cfg.features.dim) throw DataError("column index out of range");
        Eigen::VectorXd v(cfg.hidden);
        from_vec(e.at(1), v, cfg.hidden);
        m.input_weights().col(c) = v;
        m.mark_touched(c);
      }
      from_vec(j.at("hidden_bias"), m.hidden_bias(), cfg.hidden);
      from_vec(j.at("output_weights"), m.output_weights(), cfg.hidden);
      m.output_bias() = j.at("output_bias").get<double>();
    }
    if (!s.all_finite()) throw DataError("model contains non-finite parameters");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

void FeatureScorer::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << to_json().dump() << '\n';
}

FeatureScorer FeatureScorer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return from_json(j);
}

std::vector<double> NoisyScorer::score_batch(std::span<const VerificationPrompt> prompts) const {
  if (prompts.empty()) return {};
  const int step = prompts.front().context->step;
  if (!noisy_step_(step)) return inner_.score_batch(prompts);
  std::vector<double> out;
  out.reserve(prompts.size());
  for (const auto& p : prompts) {
    std::mt19937_64 rng(seed_ ^ (static_cast<std::uint64_t>(step) * 0x9e3779b97f4a7c15ULL) ^
                        (static_cast<std::uint64_t>(p.action_ref) * 0xbf58476d1ce4e5b9ULL));
    std::normal_distribution<double> n(0.0, noise_sd_);
    out.push_back(n(rng));
  }
  return out;
}

}  // namespace vagent
