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
#include "rds/sim.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "rds/errors.hpp"

namespace rds {

namespace {

constexpr double kTimeEps = 1e-9;

using FieldFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&, double)>;  // (x, s)
using ClockFn = std::function<double(double, double, double)>;                    // (s, t, dt)

bool held_at(const std::vector<Perturbation>& events, double t) {
  for (const auto& e : events) {
    if (const auto* h = std::get_if<Hold>(&e)) {
      if (t >= h->t_start - kTimeEps && t < h->t_start + h->duration - kTimeEps) return true;
    }
  }
  return false;
}

Trajectory integrate(const FieldFn& field, const ClockFn& advance_clock, double s0, double t_switch,
                     const State& goal, const Eigen::VectorXd& x0, const RolloutConfig& cfg) {
  cfg.validate();
  check_state(x0, goal.size());
  for (const auto& e : cfg.perturbations) {
    if (const auto* set = std::get_if<SetState>(&e)) check_state(set->x, goal.size());
  }

  Trajectory traj;
  std::vector<bool> applied(cfg.perturbations.size(), false);
  const auto steps = static_cast<long>(std::ceil(cfg.max_time / cfg.dt - kTimeEps));
  traj.samples.reserve(static_cast<std::size_t>(std::min(steps + 1, 1L << 20)));

  Eigen::VectorXd x = x0;
  double s = s0;
  bool escaped = false;

  auto record = [&](double t) {
    const Eigen::VectorXd v = held_at(cfg.perturbations, t) ? Eigen::VectorXd::Zero(x.size()) : field(x, s);
    traj.samples.push_back({t, x, v, s});
  };
  auto at_goal = [&] { return (x - goal).norm() < cfg.goal_tolerance; };

  auto apply_set_states = [&](double t) {
    for (std::size_t i = 0; i < cfg.perturbations.size(); ++i) {
      if (const auto* set = std::get_if<SetState>(&cfg.perturbations[i]); set && !applied[i] && set->t <= t + kTimeEps) {
        x = set->x;
        applied[i] = true;
      }
    }
  };

  try {
    apply_set_states(0.0);
    record(0.0);
  } catch (const InputError&) {
    traj.terminated_by = Termination::kNumericalFailure;
    return traj;
  }
  if (at_goal()) {
    traj.terminated_by = Termination::kGoalReached;
    return traj;
  }

  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;

    Eigen::VectorXd next = x;
    try {
      if (!held_at(cfg.perturbations, t)) {
        // Once a stall is seen the push stays on until t_f; switching it off
        // as soon as the field speed recovers would just chatter at the
        // stall_speed boundary.
        Eigen::VectorXd push = Eigen::VectorXd::Zero(x.size());
        if (cfg.escape_speed > 0.0 && t <= t_switch) {
          const Eigen::VectorXd to_goal = goal - x;
          if (to_goal.norm() > cfg.goal_tolerance) {
            if (!escaped && field(x, s).norm() < cfg.stall_speed) escaped = true;
            if (escaped) push = cfg.escape_speed * to_goal.normalized();
          }
        }
        const double h = cfg.dt;
        if (cfg.integrator == Integrator::kEuler) {
          next = x + h * (field(x, s) + push);
        } else {
          const double s_mid = advance_clock(s, t, 0.5 * h);
          const double s_end = advance_clock(s, t, h);
          const Eigen::VectorXd k1 = field(x, s) + push;
          const Eigen::VectorXd k2 = field(x + 0.5 * h * k1, s_mid) + push;
          const Eigen::VectorXd k3 = field(x + 0.5 * h * k2, s_mid) + push;
          const Eigen::VectorXd k4 = field(x + h * k3, s_end) + push;
          next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
      }
    } catch (const InputError&) {
      traj.terminated_by = Termination::kNumericalFailure;
      return traj;
    }
    if (!next.allFinite()) {
      traj.terminated_by = Termination::kNumericalFailure;
      return traj;
    }

    x = next;
    s = advance_clock(s, t, cfg.dt);
    try {
      const double t_next = static_cast<double>(k + 1) * cfg.dt;
      apply_set_states(t_next);
      record(t_next);
    } catch (const InputError&) {
      traj.terminated_by = Termination::kNumericalFailure;
      return traj;
    }
    if (at_goal()) {
      traj.terminated_by = escaped ? Termination::kStallEscaped : Termination::kGoalReached;
      return traj;
    }
  }
  traj.terminated_by = Termination::kMaxTime;
  return traj;
}

}  // namespace

void RolloutConfig::validate() const {
  if (!(dt > 0.0)) throw ContractError("rollout: dt must be positive");
  if (!(max_time >= dt)) throw ContractError("rollout: max_time must be at least dt");
  if (!(goal_tolerance > 0.0)) throw ContractError("rollout: goal_tolerance must be positive");
  if (escape_speed < 0.0 || stall_speed < 0.0) throw ContractError("rollout: escape parameters must be non-negative");
  for (const auto& e : perturbations) {
    if (const auto* h = std::get_if<Hold>(&e); h && !(h->duration >= 0.0))
      throw ContractError("rollout: hold duration must be non-negative");
  }
}

double default_goal_tolerance(const Demonstration& demo) {
  const double span = demo.span();
  if (!(span > 0.0)) throw ContractError("default_goal_tolerance: demonstration has zero extent");
  return 1e-3 * span;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kGoalReached:
      return "goal_reached";
    case Termination::kMaxTime:
      return "max_time";
    case Termination::kStallEscaped:
      return "stall_escaped";
    case Termination::kNumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

std::vector<Eigen::VectorXd> Trajectory::positions() const {
  std::vector<Eigen::VectorXd> p;
  p.reserve(samples.size());
  for (const auto& s : samples) p.push_back(s.x);
  return p;
}

Trajectory rollout(const ReshapedSystem& rs, const Eigen::VectorXd& x0, const RolloutConfig& cfg) {
  auto original = rs.original();
  auto controller = rs.controller();
  const ClockParams clock = rs.clock();
  FieldFn field = [original, controller](const Eigen::VectorXd& x, double s) -> Eigen::VectorXd {
    Eigen::VectorXd v = original->evaluate(x);
    if (s != 0.0) v += s * controller->predict_mean(x);
    return v;
  };
  ClockFn advance = [clock](double s, double t, double dt) { return clock_step(s, t, clock, dt); };
  return integrate(field, advance, 1.0, clock.t_f, rs.goal(), x0, cfg);
}

Trajectory rollout(const DynamicalSystem& ds, const Eigen::VectorXd& x0, const RolloutConfig& cfg) {
  FieldFn field = [&ds](const Eigen::VectorXd& x, double) { return ds.evaluate(x); };
  ClockFn advance = [](double, double, double) { return 0.0; };
  return integrate(field, advance, 0.0, -1.0, ds.goal(), x0, cfg);
}

FieldGrid vector_field_grid(const ReshapedSystem& rs, double s, const Box& bounds, const std::vector<int>& resolution) {
  const Eigen::Index n = rs.dimension();
  if (n != 2 && n != 3) throw ContractError("vector_field_grid: only 2-D and 3-D systems can be gridded");
  if (bounds.lower.size() != n || bounds.upper.size() != n || static_cast<Eigen::Index>(resolution.size()) != n)
    throw ContractError("vector_field_grid: bounds/resolution dimension mismatch");
  for (int r : resolution) {
    if (r < 2) throw ContractError("vector_field_grid: resolution must be >= 2 per axis");
  }
  if (!bounds.lower.allFinite() || !bounds.upper.allFinite()) throw InputError("vector_field_grid: non-finite bounds");

  FieldGrid grid{bounds, resolution, {}};
  std::size_t total = 1;
  for (int r : resolution) total *= static_cast<std::size_t>(r);
  grid.samples.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (Eigen::Index a = n - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(rem % static_cast<std::size_t>(resolution[a]));
      rem /= static_cast<std::size_t>(resolution[a]);
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      const double f = static_cast<double>(idx[a]) / static_cast<double>(resolution[a] - 1);
      x(a) = bounds.lower(a) + f * (bounds.upper(a) - bounds.lower(a));
    }
    grid.samples.push_back({x, reshaped_field(rs, x, s)});
  }
  return grid;
}

std::vector<Stall> detect_stall(const Trajectory& traj, const Eigen::VectorXd& goal, double goal_tolerance,
                                double speed_eps, double window) {
  if (traj.samples.size() < 2) throw ContractError("detect_stall: need at least two samples");
  std::vector<Stall> stalls;
  std::size_t begin = 0;
  bool in_run = false;
  auto close = [&](std::size_t end) {  // [begin, end)
    const double t0 = traj.samples[begin].t;
    const double t1 = traj.samples[end - 1].t;
    if (t1 - t0 + kTimeEps < window) return;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(goal.size());
    for (std::size_t i = begin; i < end; ++i) mean += traj.samples[i].x;
    mean /= static_cast<double>(end - begin);
    stalls.push_back({t0, t1, mean});
  };
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& smp = traj.samples[i];
    const bool stalled = smp.xdot.norm() < speed_eps && (smp.x - goal).norm() > goal_tolerance;
    if (stalled && !in_run) {
      begin = i;
      in_run = true;
    } else if (!stalled && in_run) {
      close(i);
      in_run = false;
    }
  }
  if (in_run) close(traj.samples.size());
  return stalls;
}

LyapunovCheck lyapunov_decrease_check(const DynamicalSystem& ds, const ScalarFunction& lyapunov, std::size_t samples,
                                      const Box& region, std::uint64_t seed) {
  const Eigen::Index n = ds.dimension();
  if (region.lower.size() != n || region.upper.size() != n) throw ContractError("lyapunov check: region dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  LyapunovCheck out;
  out.worst_vdot = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = region.lower(i) + unit(rng) * (region.upper(i) - region.lower(i));
    if ((x - ds.goal()).norm() < 1e-9) continue;
    Eigen::VectorXd grad(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      grad(i) = (lyapunov(xp) - lyapunov(xm)) / (2.0 * h);
    }
    const double vdot = grad.dot(ds.evaluate(x));
    if (vdot >= 0.0) ++out.violations;
    if (vdot > out.worst_vdot) {
      out.worst_vdot = vdot;
      out.worst_x = x;
    }
  }
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Eigen::Index n = traj.samples.empty() ? 0 : traj.samples.front().x.size();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",v" << i;
  out << ",s\n";
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& smp : traj.samples) {
    out << smp.t;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << smp.x(i);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << smp.xdot(i);
    out << ',' << smp.s << '\n';
  }
  out.precision(old);
}

nlohmann::json trajectory_to_json(const Trajectory& traj) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& smp : traj.samples)
    samples.push_back({{"t", smp.t}, {"x", vector_to_json(smp.x)}, {"v", vector_to_json(smp.xdot)}, {"s", smp.s}});
  return {{"terminated_by", to_string(traj.terminated_by)}, {"samples", std::move(samples)}};
}

nlohmann::json grid_to_json(const FieldGrid& grid) {
  nlohmann::json vectors = nlohmann::json::array();
  for (const auto& smp : grid.samples) vectors.push_back({{"x", vector_to_json(smp.x)}, {"v", vector_to_json(smp.v)}});
  return {{"bounds", {{"lower", vector_to_json(grid.bounds.lower)}, {"upper", vector_to_json(grid.bounds.upper)}}},
          {"resolution", grid.resolution},
          {"vectors", std::move(vectors)}};
}

nlohmann::json stall_to_json(const Stall& stall) {
  return {{"t_enter", stall.t_enter}, {"t_exit", stall.t_exit}, {"x", vector_to_json(stall.x_stall)}};
}

void to_json(nlohmann::json& j, const RolloutConfig& cfg) {
  nlohmann::json holds = nlohmann::json::array();
  nlohmann::json sets = nlohmann::json::array();
  for (const auto& e : cfg.perturbations) {
    if (const auto* h = std::get_if<Hold>(&e)) holds.push_back({{"t", h->t_start}, {"duration", h->duration}});
    if (const auto* s = std::get_if<SetState>(&e)) sets.push_back({{"t", s->t}, {"x", vector_to_json(s->x)}});
  }
  j = {{"dt", cfg.dt},
       {"max_time", cfg.max_time},
       {"goal_tolerance", cfg.goal_tolerance},
       {"integrator", cfg.integrator == Integrator::kRk4 ? "rk4" : "euler"},
       {"holds", std::move(holds)},
       {"set_states", std::move(sets)},
       {"escape_speed", cfg.escape_speed},
       {"stall_speed", cfg.stall_speed}};
}

void from_json(const nlohmann::json& j, RolloutConfig& cfg) {
  cfg = RolloutConfig{};
  if (!j.is_object()) throw ContractError("rollout config must be an object");
  if (j.contains("dt")) cfg.dt = j["dt"].get<double>();
  if (j.contains("max_time")) cfg.max_time = j["max_time"].get<double>();
  if (j.contains("goal_tolerance")) cfg.goal_tolerance = j["goal_tolerance"].get<double>();
  if (j.contains("integrator")) {
    const auto name = j["integrator"].get<std::string>();
    if (name == "rk4") {
      cfg.integrator = Integrator::kRk4;
    } else if (name == "euler") {
      cfg.integrator = Integrator::kEuler;
    } else {
      throw ContractError("unknown integrator '" + name + "'");
    }
  }
  if (j.contains("holds")) {
    for (const auto& h : j["holds"]) cfg.perturbations.emplace_back(Hold{h.at("t").get<double>(), h.at("duration").get<double>()});
  }
  if (j.contains("set_states")) {
    for (const auto& s : j["set_states"])
      cfg.perturbations.emplace_back(SetState{s.at("t").get<double>(), vector_from_json(s.at("x"))});
  }
  if (j.contains("escape_speed")) cfg.escape_speed = j["escape_speed"].get<double>();
  if (j.contains("stall_speed")) cfg.stall_speed = j["stall_speed"].get<double>();
  cfg.validate();
}

}  // namespace rds
