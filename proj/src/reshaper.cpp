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
#include "rds/reshaper.hpp"

#include <cmath>
#include <utility>

#include "rds/errors.hpp"

namespace rds {

void ClockParams::validate() const {
  if (!(t_f > 0.0) || !std::isfinite(t_f)) throw ContractError("clock: t_f must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ContractError("clock: alpha must be positive");
}

ClockParams ClockParams::for_duration(double demo_duration, double alpha) {
  ClockParams c{kDefaultSwitchFactor * demo_duration, alpha};
  c.validate();
  return c;
}

double clock_target(double t, const ClockParams& clock) { return t <= clock.t_f ? 1.0 : 0.0; }

double clock_step(double s, double t, const ClockParams& clock, double dt) {
  if (!(dt > 0.0)) throw ContractError("clock_step: dt must be positive");
  auto exact = [&](double s0, double target, double h) { return target + (s0 - target) * std::exp(-clock.alpha * h); };
  if (t < clock.t_f && t + dt > clock.t_f) {
    const double head = clock.t_f - t;
    return exact(exact(s, 1.0, head), 0.0, dt - head);
  }
  // A step starting exactly at t_f already sees the switched target.
  return exact(s, t < clock.t_f ? 1.0 : 0.0, dt);
}

std::vector<TrainingPair> extract_training_pairs(const Demonstration& demo, const DynamicalSystem& original) {
  if (!demo.empty() && demo.dimension() != original.dimension())
    throw ContractError("demonstration dimension does not match the original system");
  std::vector<TrainingPair> pairs;
  pairs.reserve(demo.size());
  for (const auto& s : demo.samples()) pairs.push_back({s.position, s.velocity - original.evaluate(s.position)});
  return pairs;
}

ReshapedSystem::ReshapedSystem(SystemPtr original, Hyperparameters hyper, ClockParams clock, double cbar)
    : ReshapedSystem(original, GpModel(original ? original->dimension() : 1, original ? original->dimension() : 1, hyper),
                     clock, cbar) {}

ReshapedSystem::ReshapedSystem(SystemPtr original, GpModel controller, ClockParams clock, double cbar)
    : original_(std::move(original)), clock_(clock), cbar_(cbar) {
  if (!original_) throw ContractError("reshaped system needs an original system");
  clock_.validate();
  if (!(cbar >= 0.0) || !std::isfinite(cbar)) throw ContractError("cbar must be non-negative");
  if (controller.input_dim() != original_->dimension() || controller.output_dim() != original_->dimension())
    throw ContractError("controller dimension does not match the original system");
  controller_ = std::make_shared<const GpModel>(std::move(controller));
}

ReshapedSystem::ReshapedSystem(const ReshapedSystem& other)
    : original_(other.original_), clock_(other.clock_), cbar_(other.cbar_), controller_(other.controller()) {}

ReshapedSystem& ReshapedSystem::operator=(const ReshapedSystem& other) {
  if (this == &other) return *this;
  auto snapshot = other.controller();
  std::scoped_lock lock(write_mutex_);
  original_ = other.original_;
  clock_ = other.clock_;
  cbar_ = other.cbar_;
  std::scoped_lock read(read_mutex_);
  controller_ = std::move(snapshot);
  return *this;
}

std::shared_ptr<const GpModel> ReshapedSystem::controller() const {
  std::scoped_lock lock(read_mutex_);
  return controller_;
}

void ReshapedSystem::set_controller(GpModel model) {
  if (model.input_dim() != dimension() || model.output_dim() != dimension())
    throw ContractError("controller dimension does not match the original system");
  auto next = std::make_shared<const GpModel>(std::move(model));
  std::scoped_lock lock(write_mutex_);
  std::scoped_lock read(read_mutex_);
  controller_ = std::move(next);
}

void ReshapedSystem::reset_controller() { set_controller(GpModel(dimension(), dimension(), hyper())); }

ConvergenceClaim ReshapedSystem::convergence_claim() const {
  return original_->stability() == Stability::kGloballyStable ? ConvergenceClaim::kGuaranteed
                                                              : ConvergenceClaim::kUnverified;
}

Eigen::VectorXd ReshapedSystem::control(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return controller()->predict_mean(x);
}

Eigen::VectorXd reshaped_field(const ReshapedSystem& rs, const Eigen::Ref<const Eigen::VectorXd>& x, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw ContractError("reshaped_field: s must lie in [0, 1]");
  Eigen::VectorXd v = rs.original()->evaluate(x);
  if (s != 0.0) v += s * rs.control(x);
  return v;
}

LearnReport learn_increment(ReshapedSystem& rs, const Demonstration& demo) {
  const auto pairs = extract_training_pairs(demo, *rs.original());
  std::scoped_lock lock(rs.write_mutex_);
  GpModel model = *rs.controller();
  LearnReport report;
  report.costs.reserve(pairs.size());
  for (const auto& p : pairs) {
    const AddResult r = model.incremental_add(p.input, p.output, rs.cbar_);
    report.costs.push_back(r.cost);
    ++(r.added ? report.accepted : report.rejected);
  }
  auto next = std::make_shared<const GpModel>(std::move(model));
  std::scoped_lock read(rs.read_mutex_);
  rs.controller_ = std::move(next);
  return report;
}

SystemPtr frozen_field(const ReshapedSystem& rs, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw ContractError("frozen_field: s must lie in [0, 1]");
  auto original = rs.original();
  auto controller = rs.controller();
  auto field = [original, controller, s](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd v = original->evaluate(x);
    if (s != 0.0) v += s * controller->predict_mean(x);
    return v;
  };
  return std::make_shared<const NonlinearSystem>("reshaped", field, original->goal(), Stability::kUnknown);
}

nlohmann::json reshaped_to_json(const ReshapedSystem& rs) {
  return nlohmann::json{{"original", system_to_json(*rs.original())},
                        {"controller", gp_to_json(*rs.controller())},
                        {"clock", {{"tf", rs.clock().t_f}, {"alpha", rs.clock().alpha}}},
                        {"cbar", rs.cbar()}};
}

ReshapedSystem reshaped_from_json(const nlohmann::json& j) {
  const auto& c = j.at("clock");
  ClockParams clock{c.at("tf").get<double>(), c.contains("alpha") ? c["alpha"].get<double>() : kDefaultClockGain};
  return ReshapedSystem(system_from_json(j.at("original")), gp_from_json(j.at("controller")), clock,
                        j.at("cbar").get<double>());
}

}  // namespace rds
