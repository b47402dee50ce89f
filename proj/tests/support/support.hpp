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
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rds/demonstration.hpp"
#include "rds/dynamical_system.hpp"
#include "rds/gp.hpp"
#include "rds/reshaper.hpp"

namespace rds::testing {

/// Natural cubic spline through (t_k, y_k), one independent spline per
/// coordinate.
class NaturalSpline {
 public:
  NaturalSpline(std::vector<double> t, std::vector<Eigen::VectorXd> y);

  Eigen::VectorXd value(double t) const;
  Eigen::VectorXd derivative(double t) const;
  double t_begin() const { return t_.front(); }
  double t_end() const { return t_.back(); }

 private:
  std::size_t segment(double t) const;

  std::vector<double> t_;
  std::vector<Eigen::VectorXd> y_;
  std::vector<Eigen::VectorXd> m_;  // second derivatives at the knots
};

// Dense reference GP: builds K + (sn2 + jitter) I explicitly and solves with
// a full pivoting LU.
Eigen::VectorXd dense_gp_mean(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Hyperparameters& h,
                              const Eigen::VectorXd& x);
double dense_gp_variance(const Eigen::MatrixXd& X, const Hyperparameters& h, const Eigen::VectorXd& x);
double dense_log_likelihood(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Hyperparameters& h);

using Curve = std::function<Eigen::VectorXd(double)>;

/// n samples of position/velocity curves at uniform times over [t0, t1].
Demonstration sample_curve(const Curve& position, const Curve& velocity, double t0, double t1, int n,
                           const std::string& name = "demo");

Demonstration spline_demo(const NaturalSpline& spline, int n, const std::string& name = "spline");

/// S-shaped 2-D path through fixed knots ending at the origin, 2 s long.
NaturalSpline s_curve();

/// Spline through `knots` random points of [-1, 1]^2 with the last knot at
/// the origin, duration uniform in [1, 2] s.
NaturalSpline random_curve(std::mt19937_64& rng, int knots = 4);

/// Straight line from `from` to `to` over `duration` with a 1 - cos speed
/// profile: zero velocity at both ends.
Demonstration smooth_line(const Eigen::VectorXd& from, const Eigen::VectorXd& to, double duration, int n);

/// Samples of a fine RK4 solution of `ds` from x0, every `dt` seconds.
Demonstration system_demo(const DynamicalSystem& ds, const Eigen::VectorXd& x0, int n, double dt);

/// f = -3x in 2-D reshaped by a demonstration that leaves the goal and comes
/// to rest at (0.6, 0.6): the learned control cancels f there while s = 1.
ReshapedSystem resting_point_model(double t_f = 2.0);

/// Six-joint reaching scenario in radians: f = 3 (goal - x) from the start
/// posture, and a 100-sample straight-line demonstration moving every joint
/// at +20 deg/s over [0.25, 1.25] s from where f alone is at t = 0.25.
struct JointScenario {
  Eigen::VectorXd start;
  Eigen::VectorXd goal;
  Demonstration demo;
};
JointScenario joint_scenario();

/// Fresh empty directory under the system temp dir.
std::filesystem::path fresh_dir(const std::string& tag);

Eigen::VectorXd vec(std::initializer_list<double> v);

}  // namespace rds::testing
