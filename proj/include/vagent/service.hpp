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

#ifndef VAGENT_SERVICE_HPP_
#define VAGENT_SERVICE_HPP_

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "vagent/annotation.hpp"
#include "vagent/scorer.hpp"
#include "vagent/sim/device.hpp"

namespace vagent {

inline constexpr const char* kServiceVersion = "0.1.0";

struct ServiceConfig {
  std::vector<sim::TaskSpec> tasks;            // sessions may be opened on these
  std::shared_ptr<const ScorerBackend> model;  // backend "model"; optional
  SessionConfig session;                       // defaults for new sessions
  std::string export_dir = "exports";
};

// HTTP front end of the annotation sessions:
//
//   GET  /health
//   GET  /sessions
//   POST /sessions                  {task_id, backend, seed, threshold?, threshold_mode?, noise_steps?, noise_sd?}
//   GET  /sessions/{id}
//   POST /sessions/{id}/correction  {step, action_index, content?}
//   POST /sessions/{id}/approve     {step}
//   GET  /sessions/{id}/trace       (JSONL)
//   POST /export                    {session_ids}
//
// Backends: "oracle", "model", "untrained", "noisy" (oracle with noise).
// Mutations of one session are serialized; reads run concurrently.
class AnnotationService {
 public:
  AnnotationService(const sim::World& world, ServiceConfig config);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  // Binds to host:port (0 picks a free port) and returns the bound port.
  // Throws Error when binding fails.
  int bind(const std::string& host, int port);
  // Serves until stop(); blocks the caller.
  void serve();
  // Stops accepting, lets in-flight requests finish.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vagent

#endif  // VAGENT_SERVICE_HPP_
