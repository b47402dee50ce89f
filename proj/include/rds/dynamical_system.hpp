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
#include <functional>
#include <json.hpp>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rds/gp.hpp"

namespace rds {

using State = Eigen::VectorXd;

enum class SystemKind { kLinearGain, kHandcraftedNonlinear, kGpLearned, kComposed, kSecondOrderWrapper };

// kGloballyStable is a declaration made at construction, not something
// verified numerically.
enum class Stability { kGloballyStable, kUnknown };

std::string_view to_string(SystemKind kind);
std::string_view to_string(Stability stability);

/// Throws ContractError on dimension mismatch, InputError on NaN/Inf.
void check_state(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index dimension);

/// Autonomous first-order system x' = f(x) with a declared goal point.
/// Instances are immutable and safe to evaluate from several threads.
class DynamicalSystem {
 public:
  virtual ~DynamicalSystem() = default;

  Eigen::Index dimension() const { return goal_.size(); }
  const State& goal() const { return goal_; }
  Stability stability() const { return stability_; }
  virtual SystemKind kind() const = 0;

  Eigen::VectorXd evaluate(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_state(x, dimension());
    return evaluate_unchecked(x);
  }

  // Kind-specific parameter block of the JSON form.
  virtual nlohmann::json parameters() const = 0;

 protected:
  DynamicalSystem(State goal, Stability stability);
  virtual Eigen::VectorXd evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;

 private:
  State goal_;
  Stability stability_;
};

using SystemPtr = std::shared_ptr<const DynamicalSystem>;

// x' = gain * (goal - x)
class LinearGainSystem final : public DynamicalSystem {
 public:
  LinearGainSystem(double gain, State goal);
  double gain() const { return gain_; }
  SystemKind kind() const override { return SystemKind::kLinearGain; }
  nlohmann::json parameters() const override;

 private:
  Eigen::VectorXd evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  double gain_;
};

/// A hand-written field. Systems built through make_cubic_system() serialize;
/// arbitrary callables do not.
class NonlinearSystem final : public DynamicalSystem {
 public:
  using Field = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  NonlinearSystem(std::string name, Field field, State goal, Stability stability,
                  nlohmann::json params = nullptr);
  const std::string& name() const { return name_; }
  SystemKind kind() const override { return SystemKind::kHandcraftedNonlinear; }
  nlohmann::json parameters() const override;

 private:
  Eigen::VectorXd evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  std::string name_;
  Field field_;
  nlohmann::json params_;
};

/// Velocity field regressed directly from data (zero-mean prior). Carries no
/// equilibrium guarantee.
class GpLearnedSystem final : public DynamicalSystem {
 public:
  GpLearnedSystem(GpModel model, State goal);
  const GpModel& model() const { return model_; }
  SystemKind kind() const override { return SystemKind::kGpLearned; }
  nlohmann::json parameters() const override;

 private:
  Eigen::VectorXd evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  GpModel model_;
};

/// First-order form of x1'' = stiffness (goal - x1) - damping x1' over the
/// stacked state (x1, x2 = x1').
class SecondOrderSystem final : public DynamicalSystem {
 public:
  SecondOrderSystem(double stiffness, double damping, const State& position_goal);
  double stiffness() const { return stiffness_; }
  double damping() const { return damping_; }
  Eigen::Index position_dimension() const { return dimension() / 2; }
  SystemKind kind() const override { return SystemKind::kSecondOrderWrapper; }
  nlohmann::json parameters() const override;

 private:
  Eigen::VectorXd evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  double stiffness_;
  double damping_;
};

// Scalar weight as a function of time; an empty gate is always open.
using Gate = std::function<double(double)>;

struct Addend {
  SystemPtr field;
  Gate gate;
};

/// base(x) + sum_i gate_i(t) * u_i(x). The autonomous evaluate() treats every
/// gate as open.
class ComposedSystem final : public DynamicalSystem {
 public:
  ComposedSystem(SystemPtr base, std::vector<Addend> addends, Stability stability);
  const SystemPtr& base() const { return base_; }
  const std::vector<Addend>& addends() const { return addends_; }
  SystemKind kind() const override { return SystemKind::kComposed; }
  nlohmann::json parameters() const override;

  Eigen::VectorXd evaluate_at(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const;

 private:
  Eigen::VectorXd evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  SystemPtr base_;
  std::vector<Addend> addends_;
};

std::shared_ptr<const LinearGainSystem> make_linear_system(double gain, const State& goal);

// x' = -gain (x - goal) - cubic_gain (x - goal)^3, elementwise.
std::shared_ptr<const NonlinearSystem> make_cubic_system(double gain, double cubic_gain, const State& goal);

std::shared_ptr<const SecondOrderSystem> wrap_second_order(double stiffness, double damping, const State& position_goal);

std::shared_ptr<const GpLearnedSystem> make_gp_system(GpModel model, const State& goal);

/// Without an explicit declaration the result inherits the base stability
/// only when there are no addends.
std::shared_ptr<const ComposedSystem> compose(SystemPtr base, std::vector<Addend> addends);
std::shared_ptr<const ComposedSystem> compose(SystemPtr base, std::vector<Addend> addends, Stability declared);

/// {kind, dimension, goal, stability, parameters}
nlohmann::json system_to_json(const DynamicalSystem& ds);
SystemPtr system_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace rds
