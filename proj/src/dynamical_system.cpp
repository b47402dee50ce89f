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
#include "rds/dynamical_system.hpp"

#include <cmath>
#include <utility>

#include "rds/errors.hpp"

namespace rds {

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::kLinearGain:
      return "linear-gain";
    case SystemKind::kHandcraftedNonlinear:
      return "handcrafted-nonlinear";
    case SystemKind::kGpLearned:
      return "gp-learned";
    case SystemKind::kComposed:
      return "composed";
    case SystemKind::kSecondOrderWrapper:
      return "second-order-wrapper";
  }
  return "unknown";
}

std::string_view to_string(Stability stability) {
  return stability == Stability::kGloballyStable ? "gas" : "unstable-unknown";
}

namespace {

Stability parse_stability(const std::string& s) {
  if (s == "gas") return Stability::kGloballyStable;
  if (s == "unstable-unknown") return Stability::kUnknown;
  throw ContractError("unknown stability flag '" + s + "'");
}

}  // namespace

void check_state(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Index dimension) {
  if (x.size() != dimension)
    throw ContractError("state has dimension " + std::to_string(x.size()) + ", expected " +
                        std::to_string(dimension));
  if (!x.allFinite()) throw InputError("state contains non-finite values");
}

DynamicalSystem::DynamicalSystem(State goal, Stability stability) : goal_(std::move(goal)), stability_(stability) {
  if (goal_.size() < 1) throw ContractError("system dimension must be >= 1");
  if (!goal_.allFinite()) throw InputError("goal contains non-finite values");
}

LinearGainSystem::LinearGainSystem(double gain, State goal)
    : DynamicalSystem(std::move(goal), Stability::kGloballyStable), gain_(gain) {
  if (!(gain > 0.0) || !std::isfinite(gain)) throw ContractError("linear gain must be positive");
}

Eigen::VectorXd LinearGainSystem::evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return gain_ * (goal() - x);
}

nlohmann::json LinearGainSystem::parameters() const { return {{"gain", gain_}}; }

NonlinearSystem::NonlinearSystem(std::string name, Field field, State goal, Stability stability,
                                 nlohmann::json params)
    : DynamicalSystem(std::move(goal), stability),
      name_(std::move(name)),
      field_(std::move(field)),
      params_(std::move(params)) {
  if (!field_) throw ContractError("nonlinear system needs a field");
}

Eigen::VectorXd NonlinearSystem::evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd v = field_(x);
  if (v.size() != dimension()) throw ContractError("field '" + name_ + "' returned the wrong dimension");
  return v;
}

nlohmann::json NonlinearSystem::parameters() const {
  if (params_.is_null()) throw ContractError("system '" + name_ + "' is defined by code and cannot be serialized");
  nlohmann::json p = params_;
  p["name"] = name_;
  return p;
}

GpLearnedSystem::GpLearnedSystem(GpModel model, State goal)
    : DynamicalSystem(std::move(goal), Stability::kUnknown), model_(std::move(model)) {
  if (model_.input_dim() != dimension() || model_.output_dim() != dimension())
    throw ContractError("gp-learned system: model dimensions do not match the goal");
}

Eigen::VectorXd GpLearnedSystem::evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return model_.predict_mean(x);
}

nlohmann::json GpLearnedSystem::parameters() const { return {{"model", gp_to_json(model_)}}; }

namespace {

State stacked_goal(const State& position_goal) {
  State g = State::Zero(2 * position_goal.size());
  g.head(position_goal.size()) = position_goal;
  return g;
}

}  // namespace

SecondOrderSystem::SecondOrderSystem(double stiffness, double damping, const State& position_goal)
    : DynamicalSystem(stacked_goal(position_goal), Stability::kGloballyStable),
      stiffness_(stiffness),
      damping_(damping) {
  if (!(stiffness > 0.0) || !(damping > 0.0)) throw ContractError("stiffness and damping must be positive");
}

Eigen::VectorXd SecondOrderSystem::evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::Index n = position_dimension();
  Eigen::VectorXd dx(2 * n);
  dx.head(n) = x.tail(n);
  dx.tail(n) = stiffness_ * (goal().head(n) - x.head(n)) - damping_ * x.tail(n);
  return dx;
}

nlohmann::json SecondOrderSystem::parameters() const { return {{"stiffness", stiffness_}, {"damping", damping_}}; }

ComposedSystem::ComposedSystem(SystemPtr base, std::vector<Addend> addends, Stability stability)
    : DynamicalSystem(base ? base->goal() : State(), stability), base_(std::move(base)), addends_(std::move(addends)) {
  for (const auto& a : addends_) {
    if (!a.field) throw ContractError("compose: null addend");
    if (a.field->dimension() != dimension()) throw ContractError("compose: addend dimension mismatch");
  }
}

Eigen::VectorXd ComposedSystem::evaluate_unchecked(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd v = base_->evaluate(x);
  for (const auto& a : addends_) v += a.field->evaluate(x);
  return v;
}

Eigen::VectorXd ComposedSystem::evaluate_at(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const {
  check_state(x, dimension());
  Eigen::VectorXd v = base_->evaluate(x);
  for (const auto& a : addends_) {
    const double w = a.gate ? a.gate(t) : 1.0;
    if (w != 0.0) v += w * a.field->evaluate(x);
  }
  return v;
}

nlohmann::json ComposedSystem::parameters() const {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& a : addends_) {
    if (a.gate) throw ContractError("composed system with time gates cannot be serialized");
    list.push_back(system_to_json(*a.field));
  }
  return {{"base", system_to_json(*base_)}, {"addends", std::move(list)}};
}

std::shared_ptr<const LinearGainSystem> make_linear_system(double gain, const State& goal) {
  return std::make_shared<const LinearGainSystem>(gain, goal);
}

std::shared_ptr<const NonlinearSystem> make_cubic_system(double gain, double cubic_gain, const State& goal) {
  if (!(gain > 0.0) || !(cubic_gain >= 0.0)) throw ContractError("cubic system needs gain > 0, cubic_gain >= 0");
  const State g = goal;
  auto field = [gain, cubic_gain, g](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::ArrayXd e = (x - g).array();
    return (-gain * e - cubic_gain * e.cube()).matrix();
  };
  return std::make_shared<const NonlinearSystem>("cubic", field, goal, Stability::kGloballyStable,
                                                 nlohmann::json{{"gain", gain}, {"cubic_gain", cubic_gain}});
}

std::shared_ptr<const SecondOrderSystem> wrap_second_order(double stiffness, double damping,
                                                           const State& position_goal) {
  return std::make_shared<const SecondOrderSystem>(stiffness, damping, position_goal);
}

std::shared_ptr<const GpLearnedSystem> make_gp_system(GpModel model, const State& goal) {
  return std::make_shared<const GpLearnedSystem>(std::move(model), goal);
}

std::shared_ptr<const ComposedSystem> compose(SystemPtr base, std::vector<Addend> addends) {
  if (!base) throw ContractError("compose: null base");
  const Stability s = addends.empty() ? base->stability() : Stability::kUnknown;
  return std::make_shared<const ComposedSystem>(std::move(base), std::move(addends), s);
}

std::shared_ptr<const ComposedSystem> compose(SystemPtr base, std::vector<Addend> addends, Stability declared) {
  if (!base) throw ContractError("compose: null base");
  return std::make_shared<const ComposedSystem>(std::move(base), std::move(addends), declared);
}

nlohmann::json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ContractError("expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ContractError("expected a numeric array");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

nlohmann::json system_to_json(const DynamicalSystem& ds) {
  return nlohmann::json{{"kind", to_string(ds.kind())},
                        {"dimension", ds.dimension()},
                        {"goal", vector_to_json(ds.goal())},
                        {"stability", to_string(ds.stability())},
                        {"parameters", ds.parameters()}};
}

SystemPtr system_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  const State goal = vector_from_json(j.at("goal"));
  if (j.contains("dimension") && j["dimension"].get<Eigen::Index>() != goal.size())
    throw ContractError("system JSON: dimension does not match goal");
  const auto& p = j.contains("parameters") ? j["parameters"] : nlohmann::json::object();

  if (kind == "linear-gain") return make_linear_system(p.at("gain").get<double>(), goal);
  if (kind == "second-order-wrapper") {
    if (goal.size() % 2 != 0) throw ContractError("second-order system needs an even dimension");
    return wrap_second_order(p.at("stiffness").get<double>(), p.at("damping").get<double>(),
                             goal.head(goal.size() / 2));
  }
  if (kind == "gp-learned") return make_gp_system(gp_from_json(p.at("model")), goal);
  if (kind == "handcrafted-nonlinear") {
    const auto name = p.at("name").get<std::string>();
    if (name == "cubic") return make_cubic_system(p.at("gain").get<double>(), p.at("cubic_gain").get<double>(), goal);
    throw ContractError("unknown handcrafted system '" + name + "'");
  }
  if (kind == "composed") {
    std::vector<Addend> addends;
    for (const auto& a : p.at("addends")) addends.push_back({system_from_json(a), {}});
    const Stability s = j.contains("stability") ? parse_stability(j["stability"].get<std::string>())
                                                : Stability::kUnknown;
    return compose(system_from_json(p.at("base")), std::move(addends), s);
  }
  throw ContractError("unknown system kind '" + kind + "'");
}

}  // namespace rds
