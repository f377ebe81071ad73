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

#include "vagent/service.hpp"

#include <httplib.h>

#include <atomic>
#include <cstdio>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "vagent/error.hpp"

namespace vagent {

using nlohmann::json;

namespace {

struct NotFound : Error {
  using Error::Error;
};

struct Entry {
  std::shared_mutex mutex;
  std::unique_ptr<AnnotationSession> session;
};

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, int status, const std::string& what) {
  reply(res, status, {{"schema", "vagent.error/1"}, {"error", what}, {"status", status}});
}

// Runs a handler and maps library errors onto HTTP statuses.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const json::exception& e) {
      fail(res, 400, std::string("bad request: ") + e.what());
    } catch (const NotFound& e) {
      fail(res, 404, e.what());
    } catch (const ValidationError& e) {
      fail(res, 409, e.what());
    } catch (const DataError& e) {
      fail(res, 422, e.what());
    } catch (const std::exception& e) {
      fail(res, 500, e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  json j = json::parse(req.body.empty() ? std::string("{}") : req.body);
  if (!j.is_object()) throw json::type_error::create(302, "request body must be a JSON object", nullptr);
  return j;
}

}  // namespace

struct AnnotationService::Impl {
  const sim::World* world;
  ServiceConfig config;
  httplib::Server server;
  std::shared_mutex registry_mutex;
  std::map<std::string, std::shared_ptr<Entry>> sessions;
  std::atomic<int> next_session{1};
  std::atomic<int> next_export{1};
  std::mutex export_mutex;

  std::shared_ptr<Entry> find(const std::string& id) {
    std::shared_lock lock(registry_mutex);
    const auto it = sessions.find(id);
    if (it == sessions.end()) throw NotFound("no session '" + id + "'");
    return it->second;
  }

  BackendFactory backend_for(const json& body, std::uint64_t seed) {
    const std::string name = body.value("backend", "model");
    if (name == "oracle") return {};
    if (name == "untrained") return shared_backend(std::make_shared<const FeatureScorer>());
    if (name == "model") {
      if (!config.model) throw DataError("no model is loaded; start the service with --model");
      return shared_backend(config.model);
    }
    if (name == "noisy") {
      return noisy_oracle_backend(seed, body.value("noise_sd", 1.0), body.value("noise_steps", std::vector<int>{}));
    }
    throw DataError("unknown backend '" + name + "'");
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const std::string task_id = body.at("task_id").get<std::string>();
    const auto seed = body.value("seed", std::uint64_t{0});
    const sim::TaskSpec& task = sim::find_task(config.tasks, task_id);
    SessionConfig cfg = config.session;
    cfg.env_seed = seed;
    if (body.contains("threshold")) cfg.threshold = body.at("threshold").get<double>();
    if (body.contains("threshold_mode")) {
      const auto mode = threshold_mode_from_string(body.at("threshold_mode").get<std::string>());
      if (!mode) throw DataError("unknown threshold mode " + body.at("threshold_mode").dump());
      cfg.mode = *mode;
    }
    if (body.contains("step_budget")) cfg.agent.step_budget = body.at("step_budget").get<int>();

    char id[32];
    std::snprintf(id, sizeof id, "s%06d", next_session++);
    auto entry = std::make_shared<Entry>();
    entry->session = std::make_unique<AnnotationSession>(id, *world, task, backend_for(body, seed), cfg);
    std::unique_lock session_lock(entry->mutex);
    {
      std::unique_lock lock(registry_mutex);
      sessions.emplace(id, entry);
    }
    entry->session->run();
    json out = entry->session->view();
    out["schema"] = "vagent.session/1";
    reply(res, 201, out);
  }

  void list(httplib::Response& res) {
    std::vector<std::shared_ptr<Entry>> entries;
    {
      std::shared_lock lock(registry_mutex);
      for (const auto& [id, e] : sessions) entries.push_back(e);
    }
    json items = json::array();
    for (const auto& e : entries) {
      std::shared_lock lock(e->mutex);
      const auto& s = *e->session;
      items.push_back({{"session_id", s.id()},
                       {"task_id", s.task().id},
                       {"status", to_string(s.status())},
                       {"pending", s.pending() ? json(*s.pending()) : json(nullptr)},
                       {"interventions", s.interventions()},
                       {"flags", std::count_if(s.reports().begin(), s.reports().end(),
                                               [](const EntropyReport& r) { return r.flagged; })}});
    }
    reply(res, 200, {{"schema", "vagent.sessions/1"}, {"sessions", std::move(items)}});
  }

  void show(const std::string& id, httplib::Response& res) {
    auto e = find(id);
    std::shared_lock lock(e->mutex);
    reply(res, 200, e->session->view());
  }

  void correct(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    auto e = find(id);
    std::unique_lock lock(e->mutex);
    std::optional<std::string> content;
    if (body.contains("content") && !body.at("content").is_null()) content = body.at("content").get<std::string>();
    e->session->correct(body.at("step").get<int>(), body.at("action_index").get<int>(), content);
    reply(res, 200, e->session->view());
  }

  void approve(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    auto e = find(id);
    std::unique_lock lock(e->mutex);
    e->session->approve(body.at("step").get<int>());
    reply(res, 200, e->session->view());
  }

  void trace(const std::string& id, httplib::Response& res) {
    auto e = find(id);
    std::shared_lock lock(e->mutex);
    res.status = 200;
    res.set_content(trace_to_jsonl(e->session->trace()), "application/x-ndjson");
  }

  void do_export(const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    const auto ids = body.at("session_ids").get<std::vector<std::string>>();
    if (ids.empty()) throw DataError("nothing to export");
    std::vector<std::shared_ptr<Entry>> entries;
    for (const auto& id : ids) entries.push_back(find(id));
    // Snapshot: hold every session's read lock while exporting.
    std::vector<std::shared_lock<std::shared_mutex>> locks;
    std::vector<const AnnotationSession*> sessions_view;
    for (const auto& e : entries) {
      locks.emplace_back(e->mutex);
      sessions_view.push_back(e->session.get());
    }
    const ExportResult result = export_sessions(sessions_view, *world);
    std::lock_guard guard(export_mutex);
    char name[32];
    std::snprintf(name, sizeof name, "export-%04d", next_export++);
    const std::string dir = config.export_dir + "/" + name;
    json manifest = write_export(result, dir);
    manifest["dir"] = dir;
    reply(res, 200, manifest);
  }

  void health(httplib::Response& res) {
    std::size_t n = 0;
    {
      std::shared_lock lock(registry_mutex);
      n = sessions.size();
    }
    reply(res, 200,
          {{"schema", "vagent.health/1"},
           {"service", "vagent-annotation"},
           {"version", kServiceVersion},
           {"model", config.model ? json(config.model->descriptor()) : json(nullptr)},
           {"sessions", n}});
  }

  void mount() {
    server.Get("/health", guarded([this](const httplib::Request&, httplib::Response& res) { health(res); }));
    server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) { list(res); }));
    server.Post("/sessions",
                guarded([this](const httplib::Request& req, httplib::Response& res) { create(req, res); }));
    server.Get(R"(/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 show(req.matches[1], res);
               }));
    server.Post(R"(/sessions/([^/]+)/correction)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  correct(req.matches[1], req, res);
                }));
    server.Post(R"(/sessions/([^/]+)/approve)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  approve(req.matches[1], req, res);
                }));
    server.Get(R"(/sessions/([^/]+)/trace)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 trace(req.matches[1], res);
               }));
    server.Post("/export",
                guarded([this](const httplib::Request& req, httplib::Response& res) { do_export(req, res); }));
  }
};

AnnotationService::AnnotationService(const sim::World& world, ServiceConfig config)
    : impl_(std::make_unique<Impl>()) {
  impl_->world = &world;
  impl_->config = std::move(config);
  impl_->mount();
}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : impl_->server.bind_to_port(host, port)
                                                                           ? port
                                                                           : -1;
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void AnnotationService::serve() { impl_->server.listen_after_bind(); }

void AnnotationService::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace vagent
