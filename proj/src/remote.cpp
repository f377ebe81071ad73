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

#include "vagent/remote.hpp"

#include <httplib.h>

#include "vagent/error.hpp"

namespace vagent {

using nlohmann::json;

namespace {

void check_url(const std::string& url) {
  if (url.rfind("http://", 0) != 0) throw ValidationError("remote backend URL must start with http://: " + url);
}

// POSTs `body` to `path` and returns the parsed JSON reply; `fail` builds the
// exception to throw.
template <typename Fail>
json post(const RemoteConfig& cfg, const std::string& path, const json& body, Fail fail) {
  httplib::Client client(cfg.base_url);
  const auto secs = static_cast<time_t>(cfg.timeout_s);
  const auto usecs = static_cast<time_t>((cfg.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  const auto res = client.Post(path, body.dump(), "application/json");
  if (!res) fail("POST " + path + ": " + httplib::to_string(res.error()));
  if (res->status != 200) fail("POST " + path + ": HTTP " + std::to_string(res->status));
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    fail("POST " + path + ": malformed reply: " + e.what());
  }
  return {};
}

}  // namespace

HttpScorer::HttpScorer(RemoteConfig config) : config_(std::move(config)) { check_url(config_.base_url); }

std::vector<double> HttpScorer::score_batch(std::span<const VerificationPrompt> prompts) const {
  const auto fail = [this](const std::string& what) -> void { throw ScoringError(descriptor(), what); };
  json texts = json::array();
  for (const auto& p : prompts) texts.push_back(p.text());
  const json reply = post(config_, "/score", {{"prompts", std::move(texts)}}, fail);
  if (!reply.contains("scores") || !reply["scores"].is_array()) fail("reply has no scores array");
  std::vector<double> out;
  for (const auto& s : reply["scores"]) {
    if (!s.is_number()) fail("non-numeric score");
    out.push_back(s.get<double>());
  }
  return out;
}

HttpCompletion::HttpCompletion(RemoteConfig config) : config_(std::move(config)) { check_url(config_.base_url); }

std::string HttpCompletion::complete(const Action& action, const UiState& state, const WorkingMemory& memory,
                                     std::string_view goal) {
  const auto fail = [](const std::string& what) -> void { throw CompletionError(what); };
  const json body = {{"kind", to_string(action.type)},
                     {"action", action.descriptor},
                     {"goal", goal},
                     {"state_streamline", streamline(state)},
                     {"memory", memory.entries}};
  const json reply = post(config_, "/complete", body, fail);
  if (!reply.contains("content") || !reply["content"].is_string()) fail("reply has no content string");
  return reply["content"].get<std::string>();
}

HttpSummarizer::HttpSummarizer(RemoteConfig config) : config_(std::move(config)) { check_url(config_.base_url); }

std::string HttpSummarizer::summarize(std::string_view goal, std::string_view state_streamline,
                                      const WorkingMemory& memory, std::string_view executed_action) {
  const auto fail = [](const std::string& what) -> void { throw Error(what); };
  const json body = {{"goal", goal},
                     {"state_streamline", state_streamline},
                     {"memory", memory.entries},
                     {"action", executed_action}};
  const json reply = post(config_, "/summarize", body, fail);
  if (!reply.contains("summary") || !reply["summary"].is_string()) fail("reply has no summary string");
  return reply["summary"].get<std::string>();
}

}  // namespace vagent
