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
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

#include "rds/errors.hpp"
#include "rds/sim.hpp"
#include "support.hpp"

namespace rds {
namespace {

using testing::vec;

Eigen::VectorXd random_state(std::mt19937_64& rng, Eigen::Index n, double scale = 2.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = u(rng);
  return x;
}

TEST(LinearGain, EvaluatesGainTimesGoalOffset) {
  const auto f = make_linear_system(3.0, Eigen::VectorXd::Zero(2));
  const Eigen::VectorXd v = f->evaluate(vec({1.0, 2.0}));
  EXPECT_DOUBLE_EQ(v[0], -3.0);
  EXPECT_DOUBLE_EQ(v[1], -6.0);
}

TEST(LinearGain, JointSpaceExampleInDegrees) {
  // Units pass through untouched, so degrees in give degrees per second out.
  const Eigen::VectorXd goal = vec({-60, 30, 30, -70, 25, 85});
  const Eigen::VectorXd start = vec({35, 55, 15, -65, -15, 50});
  const Eigen::VectorXd v = make_linear_system(3.0, goal)->evaluate(start);
  const Eigen::VectorXd expected = vec({-285, -75, 45, -15, 120, 105});
  EXPECT_LT((v - expected).norm(), 1e-12);
}

TEST(Equilibrium, DeclaredGoalsAreZeroesOfTheField) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd g = random_state(rng, 3);
    EXPECT_LT(make_linear_system(0.5 + trial, g)->evaluate(g).norm(), 1e-12);
    EXPECT_LT(make_cubic_system(1.0, 2.0, g)->evaluate(g).norm(), 1e-12);
    const auto second = wrap_second_order(2.0, 2.0 * std::sqrt(2.0), g);
    EXPECT_LT(second->evaluate(second->goal()).norm(), 1e-12);
  }
}

TEST(Evaluate, RejectsWrongDimension) {
  const auto f = make_linear_system(3.0, Eigen::VectorXd::Zero(2));
  EXPECT_THROW(f->evaluate(vec({1.0, 2.0, 3.0})), ContractError);
}

TEST(Evaluate, RejectsNonFiniteState) {
  const auto f = make_linear_system(3.0, Eigen::VectorXd::Zero(2));
  EXPECT_THROW(f->evaluate(vec({1.0, std::nan("")})), InputError);
  EXPECT_THROW(f->evaluate(vec({INFINITY, 0.0})), InputError);
}

TEST(Evaluate, OneDimensionalSystemsWork) {
  const auto f = make_linear_system(2.0, vec({1.0}));
  EXPECT_DOUBLE_EQ(f->evaluate(vec({0.0}))[0], 2.0);
}

TEST(Construction, RejectsNonPositiveGains) {
  EXPECT_THROW(make_linear_system(0.0, vec({0.0})), ContractError);
  EXPECT_THROW(make_linear_system(-1.0, vec({0.0})), ContractError);
  EXPECT_THROW(wrap_second_order(0.0, 1.0, vec({0.0})), ContractError);
  EXPECT_THROW(wrap_second_order(1.0, -1.0, vec({0.0})), ContractError);
}

TEST(Compose, EmptySumBehavesLikeBase) {
  std::mt19937_64 rng(11);
  const auto f = make_cubic_system(1.5, 0.5, vec({0.2, -0.4}));
  const auto c = compose(f, {});
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = random_state(rng, 2);
    EXPECT_EQ(c->evaluate(x), f->evaluate(x));
  }
  EXPECT_EQ(c->stability(), Stability::kGloballyStable);
}

TEST(Compose, NegatedAddendCancelsField) {
  std::mt19937_64 rng(12);
  const auto f = make_linear_system(3.0, vec({1.0, -1.0}));
  auto minus_f = std::make_shared<NonlinearSystem>(
      "minus-f", [f](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -f->evaluate(x); }, f->goal(),
      Stability::kUnknown);
  const auto c = compose(f, {{minus_f, {}}});
  for (int i = 0; i < 100; ++i) EXPECT_LT(c->evaluate(random_state(rng, 2)).norm(), 1e-12);
}

TEST(Compose, AddendOrderDoesNotMatter) {
  std::mt19937_64 rng(13);
  const auto f = make_linear_system(3.0, Eigen::VectorXd::Zero(2));
  const auto u1 = make_cubic_system(1.0, 1.0, vec({0.5, 0.5}));
  const auto u2 = make_linear_system(0.7, vec({-1.0, 2.0}));
  const auto a = compose(f, {{u1, {}}, {u2, {}}});
  const auto b = compose(f, {{u2, {}}, {u1, {}}});
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = random_state(rng, 2);
    EXPECT_LT((a->evaluate(x) - b->evaluate(x)).norm(), 1e-12);
  }
}

TEST(Compose, IsPointwiseAdditive) {
  std::mt19937_64 rng(14);
  const auto f = make_linear_system(3.0, Eigen::VectorXd::Zero(3));
  const auto u = make_cubic_system(0.3, 2.0, vec({1.0, 0.0, -1.0}));
  const auto c = compose(f, {{u, {}}});
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd x = random_state(rng, 3);
    const Eigen::VectorXd expected = f->evaluate(x) + u->evaluate(x);
    EXPECT_LE((c->evaluate(x) - expected).norm(), 1e-15 * (1.0 + expected.norm()));
  }
}

TEST(Compose, GatesScaleAddendsInTime) {
  const auto f = make_linear_system(3.0, Eigen::VectorXd::Zero(2));
  const auto u = make_linear_system(1.0, vec({1.0, 1.0}));
  const auto c = compose(f, {{u, [](double t) { return t < 1.0 ? 1.0 : 0.25; }}});
  const Eigen::VectorXd x = vec({0.3, -0.2});
  EXPECT_LT((c->evaluate_at(x, 0.5) - (f->evaluate(x) + u->evaluate(x))).norm(), 1e-15);
  EXPECT_LT((c->evaluate_at(x, 2.0) - (f->evaluate(x) + 0.25 * u->evaluate(x))).norm(), 1e-15);
}

TEST(Compose, RejectsDimensionMismatch) {
  const auto f = make_linear_system(3.0, Eigen::VectorXd::Zero(2));
  const auto u = make_linear_system(3.0, Eigen::VectorXd::Zero(3));
  EXPECT_THROW(compose(f, {{u, {}}}), ContractError);
}

TEST(Compose, StabilityIsUnknownUnlessDeclared) {
  const auto f = make_linear_system(3.0, Eigen::VectorXd::Zero(2));
  const auto u = make_linear_system(1.0, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(compose(f, {{u, {}}})->stability(), Stability::kUnknown);
  EXPECT_EQ(compose(f, {{u, {}}}, Stability::kGloballyStable)->stability(), Stability::kGloballyStable);
}

TEST(SecondOrder, CriticallyDampedExample) {
  const auto ds = wrap_second_order(2.0, 2.0 * std::sqrt(2.0), vec({0.0}));
  EXPECT_EQ(ds->dimension(), 2);
  EXPECT_LT(ds->evaluate(vec({0.0, 0.0})).norm(), 1e-15);
  const Eigen::VectorXd v = ds->evaluate(vec({1.0, 0.0}));
  EXPECT_DOUBLE_EQ(v[0], 0.0);
  EXPECT_DOUBLE_EQ(v[1], -2.0);
}

TEST(SecondOrder, GoalStacksZeroVelocity) {
  const auto ds = wrap_second_order(1.0, 1.0, vec({1.0, 2.0, 3.0}));
  EXPECT_EQ(ds->goal(), vec({1.0, 2.0, 3.0, 0.0, 0.0, 0.0}));
  EXPECT_EQ(ds->stability(), Stability::kGloballyStable);
}

TEST(SecondOrder, RolloutMatchesCriticallyDampedSolution) {
  // x'' = 2 (g - x) - 2 sqrt(2) x' has the double root -sqrt(2):
  // e(t) = (e0 + (v0 + sqrt(2) e0) t) exp(-sqrt(2) t).
  const double deg = std::numbers::pi / 180.0;
  const Eigen::VectorXd start = vec({35, 55, 15, -65, -15, 50, 90}) * deg;
  const Eigen::VectorXd goal = vec({-60, 30, 30, -70, -15, 85, 15}) * deg;
  const auto ds = wrap_second_order(2.0, 2.0 * std::sqrt(2.0), goal);
  Eigen::VectorXd x0(14);
  x0 << start, Eigen::VectorXd::Zero(7);

  RolloutConfig cfg;
  cfg.max_time = 3.0;
  cfg.goal_tolerance = 1e-12;
  const Trajectory traj = rollout(*ds, x0, cfg);
  const double t = traj.back().t;
  const double r = std::sqrt(2.0);
  const Eigen::VectorXd e0 = start - goal;
  const Eigen::VectorXd expected = goal + (e0 + r * e0 * t) * std::exp(-r * t);
  EXPECT_NEAR(t, 3.0, 1e-9);
  EXPECT_LT((traj.back().x.head(7) - expected).cwiseAbs().maxCoeff(), 1e-8);

  cfg.max_time = 30.0;
  cfg.goal_tolerance = 1e-6;
  EXPECT_EQ(rollout(*ds, x0, cfg).terminated_by, Termination::kGoalReached);
}

TEST(Lyapunov, QuadraticDecreasesAlongLinearField) {
  std::mt19937_64 rng(21);
  for (double gain : {0.1, 1.0, 3.0, 10.0}) {
    const Eigen::VectorXd g = random_state(rng, 3);
    const auto f = make_linear_system(gain, g);
    for (int i = 0; i < 1000; ++i) {
      const Eigen::VectorXd x = random_state(rng, 3, 5.0);
      if ((x - g).norm() < 1e-9) continue;
      EXPECT_LT(2.0 * (x - g).dot(f->evaluate(x)), 0.0);
    }
  }
}

TEST(GpLearned, CarriesNoStabilityClaim) {
  Eigen::MatrixXd X(2, 2), Y(2, 2);
  X << 0, 0, 1, 1;
  Y << 1, 0, 0, 1;
  const auto ds = make_gp_system(GpModel::from_data(X, Y, Hyperparameters{}), Eigen::VectorXd::Zero(2));
  EXPECT_EQ(ds->stability(), Stability::kUnknown);
  EXPECT_EQ(ds->kind(), SystemKind::kGpLearned);
  const Eigen::VectorXd v = ds->evaluate(vec({0.0, 0.0}));
  EXPECT_LT((v - ds->model().predict_mean(vec({0.0, 0.0}))).norm(), 1e-15);
}

void expect_same_field(const DynamicalSystem& a, const DynamicalSystem& b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ASSERT_EQ(a.dimension(), b.dimension());
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = random_state(rng, a.dimension());
    EXPECT_LT((a.evaluate(x) - b.evaluate(x)).norm(), 1e-12);
  }
}

TEST(Serialization, RoundTripsEveryKind) {
  Eigen::MatrixXd X(3, 2), Y(3, 2);
  X << 0, 0, 1, 0, 0, 1;
  Y << 1, 2, 3, 4, 5, 6;
  const std::vector<SystemPtr> systems = {
      make_linear_system(3.0, vec({1.0, 2.0})),
      make_cubic_system(1.0, 0.5, vec({0.0, -1.0})),
      wrap_second_order(2.0, 1.5, vec({0.5})),
      make_gp_system(GpModel::from_data(X, Y, Hyperparameters{0.5, 0.2, 0.01}), vec({0.0, 0.0})),
      compose(make_linear_system(3.0, vec({0.0, 0.0})), {{make_cubic_system(1.0, 1.0, vec({1.0, 1.0})), {}}},
              Stability::kGloballyStable),
  };
  for (std::size_t i = 0; i < systems.size(); ++i) {
    const nlohmann::json j = system_to_json(*systems[i]);
    const SystemPtr back = system_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back->kind(), systems[i]->kind());
    EXPECT_EQ(back->stability(), systems[i]->stability());
    EXPECT_EQ(back->goal(), systems[i]->goal());
    EXPECT_EQ(system_to_json(*back), j);
    expect_same_field(*back, *systems[i], 100 + i);
  }
}

TEST(Serialization, DocumentCarriesKindDimensionGoal) {
  const nlohmann::json j = system_to_json(*make_linear_system(3.0, vec({1.0, 2.0})));
  EXPECT_EQ(j.at("kind"), "linear-gain");
  EXPECT_EQ(j.at("dimension"), 2);
  EXPECT_EQ(j.at("goal"), nlohmann::json({1.0, 2.0}));
  EXPECT_EQ(j.at("stability"), "gas");
  EXPECT_EQ(j.at("parameters").at("gain"), 3.0);
}

TEST(Serialization, CodeDefinedSystemsRefuse) {
  const NonlinearSystem ds("inline", [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); }, vec({0.0}),
                           Stability::kUnknown);
  EXPECT_THROW(system_to_json(ds), ContractError);
  const auto gated = compose(make_linear_system(1.0, vec({0.0})),
                             {{make_linear_system(1.0, vec({1.0})), [](double) { return 0.5; }}});
  EXPECT_THROW(system_to_json(*gated), ContractError);
}

TEST(Serialization, RejectsUnknownKind) {
  EXPECT_THROW(system_from_json({{"kind", "mystery"}, {"goal", {0.0}}}), ContractError);
  EXPECT_THROW(system_from_json({{"kind", "linear-gain"}, {"goal", {0.0}}, {"dimension", 2},
                                 {"parameters", {{"gain", 1.0}}}}),
               ContractError);
}

TEST(Concurrency, ParallelEvaluationIsDeterministic) {
  const auto f = make_cubic_system(1.0, 2.0, vec({0.1, 0.2, 0.3}));
  std::mt19937_64 rng(5);
  std::vector<Eigen::VectorXd> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(random_state(rng, 3));
  std::vector<Eigen::VectorXd> serial;
  for (const auto& x : xs) serial.push_back(f->evaluate(x));

  std::vector<std::vector<Eigen::VectorXd>> results(4);
  std::vector<std::thread> threads;
  for (int k = 0; k < 4; ++k)
    threads.emplace_back([&, k] {
      for (const auto& x : xs) results[k].push_back(f->evaluate(x));
    });
  for (auto& t : threads) t.join();
  for (const auto& r : results) EXPECT_EQ(r, serial);
}

}  // namespace
}  // namespace rds
