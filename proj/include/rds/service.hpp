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
#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "rds/sim.hpp"

namespace httplib {
class Server;
}

namespace rds {

inline constexpr int kDefaultPort = 8080;

/// Failure of a session operation, carrying the HTTP status to answer with.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// Session-scoped incremental learning behind the HTTP routes. Every method
/// takes and returns JSON bodies; errors surface as ServiceError.
///
/// Each session publishes immutable states. Mutations of one session are
/// serialized and bump its revision; reads work on the latest published
/// state without waiting for a mutation in progress.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path snapshot_dir = ".");
  ~SessionStore();

  // {original, clock:{tf, alpha?}, cbar, hyper?, config?, units?} or
  // {model: <serialized reshaped system>, config?, units?}.
  nlohmann::json create(const nlohmann::json& body);
  // {samples, name?, expected_revision?}
  nlohmann::json add_demonstration(const std::string& id, const nlohmann::json& body);
  // {clock?, cbar?, hyper?, config?, expected_revision?}; replays every stored
  // demonstration when the learning parameters change.
  nlohmann::json update(const std::string& id, const nlohmann::json& body);
  nlohmann::json reset_controller(const std::string& id, const nlohmann::json& body = nlohmann::json::object());
  nlohmann::json remove(const std::string& id);

  nlohmann::json field(const std::string& id, double s, const Box& bounds, const std::vector<int>& resolution) const;
  // {start, config?}
  nlohmann::json rollout(const std::string& id, const nlohmann::json& body) const;
  nlohmann::json state(const std::string& id) const;
  // Writes <snapshot_dir>/<id>.json.
  nlohmann::json save(const std::string& id) const;

  std::size_t size() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string next_id();

  std::filesystem::path snapshot_dir_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t id_salt_;
  std::uint64_t id_counter_ = 0;
};

/// Query parsing for GET /sessions/{id}/field. `bounds` is
/// "lo1,hi1,lo2,hi2[,lo3,hi3]"; `res` is one count or one per axis.
Box parse_bounds(const std::string& text);
std::vector<int> parse_resolution(const std::string& text, std::size_t dimension);

void register_routes(httplib::Server& server, SessionStore& store);

/// RDS_PORT when set and valid, otherwise `fallback`.
int port_from_env(int fallback = kDefaultPort);

/// Blocks serving on host:port until the server stops. Returns false when the
/// socket cannot be bound.
bool serve(SessionStore& store, const std::string& host, int port);

}  // namespace rds
