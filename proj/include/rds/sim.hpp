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

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <json.hpp>
#include <string_view>
#include <variant>
#include <vector>

#include "rds/dynamical_system.hpp"
#include "rds/reshaper.hpp"

namespace rds {

inline constexpr double kDefaultTimeStep = 0.005;

enum class Integrator { kEuler, kRk4 };

// Freeze the state for `duration` seconds; time and clock keep running.
struct Hold {
  double t_start = 0.0;
  double duration = 0.0;
};

// Teleport the state at time t.
struct SetState {
  double t = 0.0;
  Eigen::VectorXd x;
};

using Perturbation = std::variant<Hold, SetState>;

struct RolloutConfig {
  double dt = kDefaultTimeStep;
  double max_time = 10.0;
  double goal_tolerance = 1e-3;
  Integrator integrator = Integrator::kRk4;
  std::vector<Perturbation> perturbations;
  // Optional stall escape: once the field speed drops below stall_speed away
  // from the goal, push towards the goal with this speed until t_f. 0
  // disables it.
  double escape_speed = 0.0;
  double stall_speed = 1e-3;

  void validate() const;
};

/// 1e-3 times the bounding-box diagonal of the demonstration.
double default_goal_tolerance(const Demonstration& demo);

struct TrajectorySample {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd xdot;
  double s = 1.0;
};

enum class Termination { kGoalReached, kMaxTime, kStallEscaped, kNumericalFailure };

std::string_view to_string(Termination t);

struct Trajectory {
  std::vector<TrajectorySample> samples;
  Termination terminated_by = Termination::kMaxTime;

  const TrajectorySample& back() const { return samples.back(); }
  std::vector<Eigen::VectorXd> positions() const;
};

/// Integrates x' = f(x) + s u(x) with s advanced in closed form. The clock
/// starts at s = 1 on every call. A rollout that had to apply the stall
/// escape and then reached the goal reports kStallEscaped.
Trajectory rollout(const ReshapedSystem& rs, const Eigen::VectorXd& x0, const RolloutConfig& cfg);

/// Plain rollout of an autonomous system (no clock; s is recorded as 0).
Trajectory rollout(const DynamicalSystem& ds, const Eigen::VectorXd& x0, const RolloutConfig& cfg);

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct FieldSample {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
};

struct FieldGrid {
  Box bounds;
  std::vector<int> resolution;
  std::vector<FieldSample> samples;  // row-major: the last axis varies fastest
};

FieldGrid vector_field_grid(const ReshapedSystem& rs, double s, const Box& bounds, const std::vector<int>& resolution);

struct Stall {
  double t_enter = 0.0;
  double t_exit = 0.0;
  Eigen::VectorXd x_stall;  // mean position over the interval
};

/// Maximal runs of samples with ||x'|| < speed_eps while ||x - goal|| >
/// goal_tolerance, kept when they last at least `window` seconds.
std::vector<Stall> detect_stall(const Trajectory& traj, const Eigen::VectorXd& goal, double goal_tolerance,
                                double speed_eps, double window = 0.1);

struct LyapunovCheck {
  std::size_t violations = 0;
  Eigen::VectorXd worst_x;
  double worst_vdot = 0.0;  // largest V' seen
};

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;

/// Samples V' = grad V . f at uniform random points of `region`, with the
/// gradient taken by central differences, and counts V' >= 0 away from the
/// goal.
LyapunovCheck lyapunov_decrease_check(const DynamicalSystem& ds, const ScalarFunction& lyapunov, std::size_t samples,
                                      const Box& region, std::uint64_t seed = 1);

void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
nlohmann::json trajectory_to_json(const Trajectory& traj);
nlohmann::json grid_to_json(const FieldGrid& grid);
nlohmann::json stall_to_json(const Stall& stall);

void to_json(nlohmann::json& j, const RolloutConfig& cfg);
void from_json(const nlohmann::json& j, RolloutConfig& cfg);

}  // namespace rds
