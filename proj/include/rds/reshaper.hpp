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
#include <json.hpp>
#include <memory>
#include <mutex>
#include <vector>

#include "rds/demonstration.hpp"
#include "rds/dynamical_system.hpp"
#include "rds/gp.hpp"

namespace rds {

inline constexpr double kDefaultClockGain = 10.0;
// Default switch-off time as a multiple of the demonstration duration.
inline constexpr double kDefaultSwitchFactor = 1.25;

/// Clock s' = alpha (target - s) with target 1 up to t_f and 0 afterwards.
struct ClockParams {
  double t_f = 1.0;
  double alpha = kDefaultClockGain;

  void validate() const;
  static ClockParams for_duration(double demo_duration, double alpha = kDefaultClockGain);
  bool operator==(const ClockParams&) const = default;
};

double clock_target(double t, const ClockParams& clock);

/// Advances s from time t to t + dt with the closed-form solution, splitting
/// the step at t_f when it straddles the switch.
double clock_step(double s, double t, const ClockParams& clock, double dt);

struct TrainingPair {
  Eigen::VectorXd input;
  Eigen::VectorXd output;  // demonstrated velocity minus original field
};

std::vector<TrainingPair> extract_training_pairs(const Demonstration& demo, const DynamicalSystem& original);

enum class ConvergenceClaim {
  kGuaranteed,  // original declared globally stable
  kUnverified,  // original carries no stability declaration
};

struct LearnReport {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<double> costs;
};

/// f(x) + s u(x) with u the GP posterior mean over control targets.
///
/// Single writer, many readers: readers take a snapshot of the controller and
/// never see a half-applied update; writers are serialized internally.
class ReshapedSystem {
 public:
  ReshapedSystem(SystemPtr original, Hyperparameters hyper, ClockParams clock, double cbar);
  ReshapedSystem(SystemPtr original, GpModel controller, ClockParams clock, double cbar);
  ReshapedSystem(const ReshapedSystem& other);
  ReshapedSystem& operator=(const ReshapedSystem& other);

  const SystemPtr& original() const { return original_; }
  const ClockParams& clock() const { return clock_; }
  double cbar() const { return cbar_; }
  Eigen::Index dimension() const { return original_->dimension(); }
  const State& goal() const { return original_->goal(); }
  Hyperparameters hyper() const { return controller()->hyper(); }

  std::shared_ptr<const GpModel> controller() const;
  void set_controller(GpModel model);
  void reset_controller();

  ConvergenceClaim convergence_claim() const;

  Eigen::VectorXd control(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  friend LearnReport learn_increment(ReshapedSystem& rs, const Demonstration& demo);

  SystemPtr original_;
  ClockParams clock_;
  double cbar_;
  mutable std::mutex read_mutex_;
  std::mutex write_mutex_;
  std::shared_ptr<const GpModel> controller_;
};

Eigen::VectorXd reshaped_field(const ReshapedSystem& rs, const Eigen::Ref<const Eigen::VectorXd>& x, double s);

/// Walks the samples in time order and offers each control target to the
/// controller with threshold rs.cbar(); an accepted point is visible to the
/// cost of the next sample.
LearnReport learn_increment(ReshapedSystem& rs, const Demonstration& demo);

/// The reshaped field with the clock frozen at s, as a standalone system over
/// a snapshot of the current controller.
SystemPtr frozen_field(const ReshapedSystem& rs, double s);

/// {original, controller, clock:{tf, alpha}, cbar}
nlohmann::json reshaped_to_json(const ReshapedSystem& rs);
ReshapedSystem reshaped_from_json(const nlohmann::json& j);

}  // namespace rds
