// Copyright 2026 The RDS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "rds/service.hpp"

#include <httplib.h>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>

#include "rds/dataset.hpp"
#include "rds/errors.hpp"

namespace rds {

using nlohmann::json;

namespace {

struct DemoRecord {
  Demonstration demo;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

}  // namespace

// A published session state. Never modified after publication.
struct SessionState {
  std::uint64_t revision = 0;
  ReshapedSystem system;
  // Controller points present before any demonstration (a loaded model);
  // replays start from these.
  GpModel base_controller;
  std::vector<DemoRecord> demos;
  RolloutConfig config;
  std::string units;
};

struct SessionStore::Session {
  std::string id;
  std::mutex write_mutex;
  mutable std::mutex state_mutex;
  std::shared_ptr<const SessionState> current;

  std::shared_ptr<const SessionState> load() const {
    std::lock_guard lock(state_mutex);
    return current;
  }
  void publish(std::shared_ptr<const SessionState> next) {
    std::lock_guard lock(state_mutex);
    current = std::move(next);
  }
};

namespace {

[[noreturn]] void translate_current() {
  try {
    throw;
  } catch (const ServiceError&) {
    throw;
  } catch (const ParseError& e) {
    throw ServiceError(400, e.what());
  } catch (const json::exception& e) {
    throw ServiceError(400, std::string("schema: ") + e.what());
  } catch (const NumericalError& e) {
    throw ServiceError(500, e.what());
  } catch (const FitError& e) {
    throw ServiceError(500, e.what());
  } catch (const InputError& e) {
    throw ServiceError(400, e.what());
  } catch (const ContractError& e) {
    throw ServiceError(400, e.what());
  }
}

void require_object(const json& body) {
  if (!body.is_object()) throw ServiceError(400, "request body must be a JSON object");
}

ClockParams parse_clock(const json& j) {
  if (!j.is_object()) throw ServiceError(400, "'clock' must be an object");
  ClockParams clock;
  clock.t_f = j.at("tf").get<double>();
  if (j.contains("alpha")) clock.alpha = j["alpha"].get<double>();
  clock.validate();
  return clock;
}

Hyperparameters parse_hyper(const json& j) {
  Hyperparameters hyper = j.get<Hyperparameters>();
  hyper.validate();
  return hyper;
}

double parse_cbar(const json& j) {
  const double cbar = j.get<double>();
  if (!(cbar >= 0.0) || !std::isfinite(cbar)) throw ServiceError(400, "'cbar' must be a finite non-negative number");
  return cbar;
}

Eigen::VectorXd parse_point(const json& j, Eigen::Index dimension, const char* what) {
  const Eigen::VectorXd x = vector_from_json(j);
  if (x.size() != dimension)
    throw ServiceError(422, std::string(what) + " has dimension " + std::to_string(x.size()) + ", session has " +
                                std::to_string(dimension));
  if (!x.allFinite()) throw ServiceError(400, std::string(what) + " is not finite");
  return x;
}

void check_expected_revision(const json& body, std::uint64_t revision) {
  if (!body.contains("expected_revision")) return;
  const auto expected = body["expected_revision"].get<std::uint64_t>();
  if (expected != revision)
    throw ServiceError(409, "session is at revision " + std::to_string(revision) + ", request expected " +
                                std::to_string(expected));
}

json demo_summary(const DemoRecord& r) {
  return {{"name", r.demo.name()}, {"samples", r.demo.size()}, {"accepted", r.accepted}, {"rejected", r.rejected}};
}

// Replays every demonstration on a controller seeded from `base`.
void replay(SessionState& st) {
  st.system.set_controller(GpModel::from_data(st.base_controller.inputs(), st.base_controller.outputs(),
                                              st.system.hyper()));
  for (auto& r : st.demos) {
    const LearnReport rep = learn_increment(st.system, r.demo);
    r.accepted = rep.accepted;
    r.rejected = rep.rejected;
  }
}

json state_json(const std::string& id, const SessionState& st) {
  json demos = json::array();
  std::size_t accepted = 0;
  for (const auto& r : st.demos) {
    demos.push_back(demo_summary(r));
    accepted += r.accepted;
  }
  const ReshapedSystem& rs = st.system;
  return {{"id", id},
          {"revision", st.revision},
          {"dimension", rs.dimension()},
          {"goal", vector_to_json(rs.goal())},
          {"original", system_to_json(*rs.original())},
          {"clock", {{"tf", rs.clock().t_f}, {"alpha", rs.clock().alpha}}},
          {"cbar", rs.cbar()},
          {"hyper", rs.hyper()},
          {"config", st.config},
          {"units", st.units},
          {"convergence", rs.convergence_claim() == ConvergenceClaim::kGuaranteed ? "guaranteed" : "unverified"},
          {"controller", gp_to_json(*rs.controller())},
          {"demos", std::move(demos)},
          {"accepted", accepted}};
}

}  // namespace

SessionStore::SessionStore(std::filesystem::path snapshot_dir)
    : snapshot_dir_(std::move(snapshot_dir)), id_salt_(std::random_device{}()) {
  id_salt_ = (id_salt_ << 32) ^ std::random_device{}();
}

SessionStore::~SessionStore() = default;

std::string SessionStore::next_id() {
  // splitmix64 over a salted counter: unique per store, not guessable across runs.
  std::uint64_t z = id_salt_ + 0x9e3779b97f4a7c15ULL * ++id_counter_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(z));
  return buf;
}

std::shared_ptr<SessionStore::Session> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
  return it->second;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

json SessionStore::create(const json& body) {
  try {
    require_object(body);
    std::optional<ReshapedSystem> rs;
    if (body.contains("model")) {
      rs.emplace(reshaped_from_json(body["model"]));
    } else {
      SystemPtr original = system_from_json(body.at("original"));
      const ClockParams clock = parse_clock(body.at("clock"));
      const double cbar = parse_cbar(body.at("cbar"));
      const Hyperparameters hyper = body.contains("hyper") ? parse_hyper(body["hyper"]) : Hyperparameters{};
      rs.emplace(std::move(original), hyper, clock, cbar);
    }
    const RolloutConfig config = body.contains("config") ? body["config"].get<RolloutConfig>() : RolloutConfig{};
    std::string units = body.contains("units") ? body["units"].get<std::string>() : std::string{};

    GpModel base = *rs->controller();
    auto st = std::make_shared<SessionState>(SessionState{0, std::move(*rs), std::move(base), {}, config,
                                                          std::move(units)});
    auto session = std::make_shared<Session>();
    session->current = st;

    std::lock_guard lock(sessions_mutex_);
    session->id = next_id();
    sessions_.emplace(session->id, session);
    return {{"id", session->id}, {"revision", st->revision}};
  } catch (...) {
    translate_current();
  }
}

json SessionStore::add_demonstration(const std::string& id, const json& body) {
  auto session = find(id);
  try {
    require_object(body);
    std::lock_guard write(session->write_mutex);
    const auto current = session->load();
    check_expected_revision(body, current->revision);

    const std::string name = "demo-" + std::to_string(current->demos.size() + 1);
    Demonstration demo = demonstration_from_json(body, name);
    if (demo.empty()) throw ServiceError(400, "demonstration has no samples");
    if (demo.dimension() != current->system.dimension())
      throw ServiceError(422, "demonstration has dimension " + std::to_string(demo.dimension()) + ", session has " +
                                  std::to_string(current->system.dimension()));

    auto next = std::make_shared<SessionState>(*current);
    const LearnReport rep = learn_increment(next->system, demo);
    next->demos.push_back({std::move(demo), rep.accepted, rep.rejected});
    next->revision = current->revision + 1;
    session->publish(next);
    return {{"accepted", rep.accepted},
            {"rejected", rep.rejected},
            {"revision", next->revision},
            {"controller_size", next->system.controller()->size()}};
  } catch (...) {
    translate_current();
  }
}

json SessionStore::update(const std::string& id, const json& body) {
  auto session = find(id);
  try {
    require_object(body);
    std::lock_guard write(session->write_mutex);
    const auto current = session->load();
    check_expected_revision(body, current->revision);

    const ReshapedSystem& rs = current->system;
    const ClockParams clock = body.contains("clock") ? parse_clock(body["clock"]) : rs.clock();
    const double cbar = body.contains("cbar") ? parse_cbar(body["cbar"]) : rs.cbar();
    const Hyperparameters hyper = body.contains("hyper") ? parse_hyper(body["hyper"]) : rs.hyper();
    const RolloutConfig config = body.contains("config") ? body["config"].get<RolloutConfig>() : current->config;
    std::string units = body.contains("units") ? body["units"].get<std::string>() : current->units;

    const bool relearn = !(clock == rs.clock()) || cbar != rs.cbar() || !(hyper == rs.hyper());
    const bool changed = relearn || json(config) != json(current->config) || units != current->units;

    json demos = json::array();
    if (!changed) {
      for (const auto& r : current->demos) demos.push_back(demo_summary(r));
      return {{"revision", current->revision}, {"changed", false}, {"demos", std::move(demos)}};
    }

    auto next = std::make_shared<SessionState>(SessionState{
        current->revision + 1, ReshapedSystem(rs.original(), hyper, clock, cbar), current->base_controller,
        current->demos, config, std::move(units)});
    if (relearn) replay(*next);
    else next->system.set_controller(*rs.controller());
    session->publish(next);
    for (const auto& r : next->demos) demos.push_back(demo_summary(r));
    return {{"revision", next->revision}, {"changed", true}, {"demos", std::move(demos)}};
  } catch (...) {
    translate_current();
  }
}

json SessionStore::reset_controller(const std::string& id, const json& body) {
  auto session = find(id);
  try {
    require_object(body);
    std::lock_guard write(session->write_mutex);
    const auto current = session->load();
    check_expected_revision(body, current->revision);
    auto next = std::make_shared<SessionState>(*current);
    next->system.reset_controller();
    next->base_controller = *next->system.controller();
    next->demos.clear();
    next->revision = current->revision + 1;
    session->publish(next);
    return {{"revision", next->revision}};
  } catch (...) {
    translate_current();
  }
}

json SessionStore::remove(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  if (sessions_.erase(id) == 0) throw ServiceError(404, "unknown session '" + id + "'");
  return {{"id", id}, {"deleted", true}};
}

json SessionStore::field(const std::string& id, double s, const Box& bounds, const std::vector<int>& resolution) const {
  const auto st = find(id)->load();
  try {
    if (!(s >= 0.0 && s <= 1.0)) throw ServiceError(400, "'s' must lie in [0, 1]");
    if (bounds.lower.size() != st->system.dimension())
      throw ServiceError(422, "bounds have dimension " + std::to_string(bounds.lower.size()) + ", session has " +
                                  std::to_string(st->system.dimension()));
    if (st->system.dimension() != 2 && st->system.dimension() != 3)
      throw ServiceError(422, "field grids exist for 2-D and 3-D sessions only");
    json j = grid_to_json(vector_field_grid(st->system, s, bounds, resolution));
    j["s"] = s;
    j["revision"] = st->revision;
    return j;
  } catch (...) {
    translate_current();
  }
}

json SessionStore::rollout(const std::string& id, const json& body) const {
  const auto st = find(id)->load();
  try {
    require_object(body);
    const Eigen::VectorXd start = parse_point(body.at("start"), st->system.dimension(), "start");
    const RolloutConfig cfg = body.contains("config") ? body["config"].get<RolloutConfig>() : st->config;
    for (const auto& p : cfg.perturbations) {
      if (const auto* set = std::get_if<SetState>(&p)) parse_point(vector_to_json(set->x), st->system.dimension(),
                                                                   "set_states position");
    }
    const Trajectory traj = rds::rollout(st->system, start, cfg);
    if (traj.terminated_by == Termination::kNumericalFailure) {
      std::ostringstream os;
      os << "rollout produced a non-finite state after t = " << traj.back().t;
      throw ServiceError(500, os.str());
    }
    json j = trajectory_to_json(traj);
    json stalls = json::array();
    for (const auto& s : detect_stall(traj, st->system.goal(), cfg.goal_tolerance, cfg.stall_speed))
      stalls.push_back(stall_to_json(s));
    j["stalls"] = std::move(stalls);
    j["revision"] = st->revision;
    return j;
  } catch (...) {
    translate_current();
  }
}

json SessionStore::state(const std::string& id) const {
  const auto session = find(id);
  return state_json(session->id, *session->load());
}

json SessionStore::save(const std::string& id) const {
  const auto session = find(id);
  const auto st = session->load();
  json j = state_json(session->id, *st);
  j["model"] = reshaped_to_json(st->system);
  json demos = json::array();
  for (const auto& r : st->demos) demos.push_back(demonstration_to_json(r.demo));
  j["demonstrations"] = std::move(demos);

  std::error_code ec;
  std::filesystem::create_directories(snapshot_dir_, ec);
  const auto path = snapshot_dir_ / (session->id + ".json");
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) throw ServiceError(500, "cannot write snapshot " + path.string());
  return {{"path", path.string()}, {"revision", st->revision}};
}

namespace {

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    double v = 0.0;
    const char* first = text.data() + pos;
    const char* last = text.data() + comma;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
      throw ServiceError(400, std::string("malformed ") + what + " '" + text + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

}  // namespace

Box parse_bounds(const std::string& text) {
  const auto v = parse_numbers(text, "bounds");
  if (v.size() % 2 != 0 || v.empty()) throw ServiceError(400, "bounds need lo,hi pairs per axis");
  const auto n = static_cast<Eigen::Index>(v.size() / 2);
  Box box{Eigen::VectorXd(n), Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    box.lower[i] = v[2 * i];
    box.upper[i] = v[2 * i + 1];
    if (!(box.lower[i] < box.upper[i])) throw ServiceError(400, "bounds need lo < hi on every axis");
  }
  return box;
}

std::vector<int> parse_resolution(const std::string& text, std::size_t dimension) {
  const auto v = parse_numbers(text, "res");
  std::vector<int> res;
  for (double r : v) {
    if (r != std::floor(r) || r < 2 || r > 1000) throw ServiceError(400, "res entries must be integers in [2, 1000]");
    res.push_back(static_cast<int>(r));
  }
  if (res.size() == 1) res.assign(dimension, res.front());
  if (res.size() != dimension) throw ServiceError(422, "res has the wrong number of axes");
  return res;
}

namespace {

// Grid bounds when the query gives none: demonstrations plus goal, padded.
Box default_bounds(const json& state) {
  const Eigen::VectorXd goal = vector_from_json(state.at("goal"));
  Eigen::VectorXd lo = goal, hi = goal;
  for (const auto& x : state.at("controller").at("inputs")) {
    const Eigen::VectorXd p = vector_from_json(x);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Eigen::VectorXd pad = ((hi - lo) * 0.2).cwiseMax(1.0);
  return {lo - pad, hi + pad};
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ServiceError(400, std::string("invalid JSON: ") + e.what());
  }
}

template <class Handler>
httplib::Server::Handler wrap(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      res.status = 200;
      res.set_content(handler(req, res).dump(), "application/json");
    } catch (const ServiceError& e) {
      res.status = e.status();
      res.set_content(json{{"error", e.what()}, {"status", e.status()}}.dump(), "application/json");
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, SessionStore& store) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, PATCH, DELETE, OPTIONS"}});
  server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(json{{"error", what}, {"status", 500}}.dump(), "application/json");
  });

  server.Get("/health", wrap([&store](const httplib::Request&, httplib::Response&) {
               return json{{"status", "ok"}, {"sessions", store.size()}};
             }));
  server.Post("/sessions", wrap([&store](const httplib::Request& req, httplib::Response& res) {
                json j = store.create(parse_body(req));
                res.status = 201;
                return j;
              }));
  server.Get(R"(/sessions/([^/]+))", wrap([&store](const httplib::Request& req, httplib::Response&) {
               return store.state(req.matches[1]);
             }));
  server.Patch(R"(/sessions/([^/]+))", wrap([&store](const httplib::Request& req, httplib::Response&) {
                 return store.update(req.matches[1], parse_body(req));
               }));
  server.Delete(R"(/sessions/([^/]+))", wrap([&store](const httplib::Request& req, httplib::Response&) {
                  return store.remove(req.matches[1]);
                }));
  server.Post(R"(/sessions/([^/]+)/demonstrations)",
              wrap([&store](const httplib::Request& req, httplib::Response&) {
                return store.add_demonstration(req.matches[1], parse_body(req));
              }));
  server.Delete(R"(/sessions/([^/]+)/controller)", wrap([&store](const httplib::Request& req, httplib::Response&) {
                  return store.reset_controller(req.matches[1], parse_body(req));
                }));
  server.Post(R"(/sessions/([^/]+)/rollout)", wrap([&store](const httplib::Request& req, httplib::Response&) {
                return store.rollout(req.matches[1], parse_body(req));
              }));
  server.Post(R"(/sessions/([^/]+)/save)", wrap([&store](const httplib::Request& req, httplib::Response&) {
                return store.save(req.matches[1]);
              }));
  server.Get(R"(/sessions/([^/]+)/field)", wrap([&store](const httplib::Request& req, httplib::Response&) {
               const std::string id = req.matches[1];
               double s = 1.0;
               // "smin" is accepted as an alias of "s".
               for (const char* key : {"s", "smin"}) {
                 if (!req.has_param(key)) continue;
                 const auto v = parse_numbers(req.get_param_value(key), "s");
                 if (v.size() != 1) throw ServiceError(400, "'s' takes one number");
                 s = v.front();
                 break;
               }
               Box bounds;
               std::size_t dimension = 0;
               if (req.has_param("bounds")) {
                 bounds = parse_bounds(req.get_param_value("bounds"));
                 dimension = static_cast<std::size_t>(bounds.lower.size());
               } else {
                 const json st = store.state(id);
                 bounds = default_bounds(st);
                 dimension = st.at("dimension").get<std::size_t>();
               }
               const auto res = parse_resolution(req.has_param("res") ? req.get_param_value("res") : "20", dimension);
               return store.field(id, s, bounds, res);
             }));
}

int port_from_env(int fallback) {
  const char* env = std::getenv("RDS_PORT");
  if (env == nullptr || *env == '\0') return fallback;
  int port = 0;
  const char* end = env + std::strlen(env);
  const auto [ptr, ec] = std::from_chars(env, end, port);
  if (ec != std::errc() || ptr != end || port <= 0 || port > 65535) return fallback;
  return port;
}

bool serve(SessionStore& store, const std::string& host, int port) {
  httplib::Server server;
  register_routes(server, store);
  return server.listen(host, port);
}

}  // namespace rds
