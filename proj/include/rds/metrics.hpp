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
#include <span>
#include <string>
#include <vector>

#include "rds/demonstration.hpp"
#include "rds/dynamical_system.hpp"

namespace rds {

using Path = std::vector<Eigen::VectorXd>;

/// `count` points at equal arc length along the polyline, endpoints kept.
Path resample_equidistant(std::span<const Eigen::VectorXd> path, std::size_t count);

/// Area of the (possibly non-planar, possibly crossed) quadrilateral
/// a0 a1 b1 b0, the smaller of its two diagonal triangulations. 2-D and 3-D.
double tetragon_area(const Eigen::VectorXd& a0, const Eigen::VectorXd& a1, const Eigen::VectorXd& b1,
                     const Eigen::VectorXd& b0);

/// Sum of tetragon areas between consecutive segments of two equal-length
/// paths.
double swept_error_area(std::span<const Eigen::VectorXd> reproduced, std::span<const Eigen::VectorXd> demonstrated);

/// Resamples `reproduced` to the demonstration length, then SEA.
double reproduction_sea(std::span<const Eigen::VectorXd> reproduced, std::span<const Eigen::VectorXd> demonstrated);

using VelocityField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// sqrt(mean_t ||v_d^t - field(x_d^t)||^2)
double velocity_rmse(const Demonstration& demo, const VelocityField& field);
double velocity_rmse(const Demonstration& demo, const DynamicalSystem& ds);

struct QuantileSummary {
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
};

/// Linearly interpolated quantile at probability p of unsorted values.
double quantile(std::vector<double> values, double p);
QuantileSummary quantile_summary(const std::vector<double>& values);

struct MotionMetrics {
  std::string name;
  double sea = 0.0;
  double v_rmse = 0.0;
  bool has_sea = true;
};

struct MetricReport {
  std::string method;
  std::vector<MotionMetrics> motions;
  QuantileSummary sea;
  QuantileSummary v_rmse;
  bool has_sea = true;

  static MetricReport summarize(std::string method, std::vector<MotionMetrics> motions);
};

nlohmann::json report_to_json(const MetricReport& report);

/// Plain-text table with median / 10% / 90% columns per metric.
std::string report_table(const std::vector<MetricReport>& reports, const std::string& sea_unit = "",
                         const std::string& vel_unit = "");

}  // namespace rds
