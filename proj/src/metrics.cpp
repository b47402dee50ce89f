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
#include "rds/metrics.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rds/errors.hpp"

namespace rds {

Path resample_equidistant(std::span<const Eigen::VectorXd> path, std::size_t count) {
  if (count < 2) throw ContractError("resample_equidistant: need at least two output points");
  if (path.size() < 2) throw InputError("resample_equidistant: need at least two input points");

  std::vector<double> cumulative(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].size() != path[0].size()) throw ContractError("resample_equidistant: mixed dimensions");
    cumulative[i] = cumulative[i - 1] + (path[i] - path[i - 1]).norm();
  }
  const double total = cumulative.back();
  if (!(total > 0.0)) throw InputError("resample_equidistant: path has zero length");

  Path out;
  out.reserve(count);
  std::size_t seg = 1;
  for (std::size_t k = 0; k < count; ++k) {
    if (k + 1 == count) {
      out.push_back(path.back());
      break;
    }
    const double target = total * static_cast<double>(k) / static_cast<double>(count - 1);
    while (seg + 1 < path.size() && cumulative[seg] < target) ++seg;
    const double len = cumulative[seg] - cumulative[seg - 1];
    const double f = len > 0.0 ? std::clamp((target - cumulative[seg - 1]) / len, 0.0, 1.0) : 0.0;
    out.push_back(path[seg - 1] + f * (path[seg] - path[seg - 1]));
  }
  return out;
}

namespace {

Eigen::Vector3d lift(const Eigen::VectorXd& p) {
  Eigen::Vector3d q = Eigen::Vector3d::Zero();
  q.head(p.size()) = p;
  return q;
}

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

double tetragon_area(const Eigen::VectorXd& a0, const Eigen::VectorXd& a1, const Eigen::VectorXd& b1,
                     const Eigen::VectorXd& b0) {
  const Eigen::Index n = a0.size();
  if (n < 2 || n > 3) throw ContractError("swept area is only defined for 2-D and 3-D paths");
  if (a1.size() != n || b1.size() != n || b0.size() != n) throw ContractError("tetragon_area: mixed dimensions");
  const Eigen::Vector3d p0 = lift(a0), p1 = lift(a1), q1 = lift(b1), q0 = lift(b0);
  const double split_a0_b1 = triangle_area(p0, p1, q1) + triangle_area(p0, q1, q0);
  const double split_a1_b0 = triangle_area(p1, q1, q0) + triangle_area(p1, q0, p0);
  return std::min(split_a0_b1, split_a1_b0);
}

double swept_error_area(std::span<const Eigen::VectorXd> reproduced, std::span<const Eigen::VectorXd> demonstrated) {
  if (reproduced.size() != demonstrated.size()) throw ContractError("swept_error_area: length mismatch");
  double sea = 0.0;
  for (std::size_t t = 0; t + 1 < reproduced.size(); ++t)
    sea += tetragon_area(reproduced[t], reproduced[t + 1], demonstrated[t + 1], demonstrated[t]);
  return sea;
}

double reproduction_sea(std::span<const Eigen::VectorXd> reproduced, std::span<const Eigen::VectorXd> demonstrated) {
  const Path r = resample_equidistant(reproduced, demonstrated.size());
  return swept_error_area(r, demonstrated);
}

double velocity_rmse(const Demonstration& demo, const VelocityField& field) {
  if (demo.empty()) throw ContractError("velocity_rmse: empty demonstration");
  double sum = 0.0;
  for (const auto& s : demo.samples()) {
    const Eigen::VectorXd v = field(s.position);
    if (v.size() != s.velocity.size()) throw ContractError("velocity_rmse: dimension mismatch");
    sum += (s.velocity - v).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(demo.size()));
}

double velocity_rmse(const Demonstration& demo, const DynamicalSystem& ds) {
  if (!demo.empty() && demo.dimension() != ds.dimension()) throw ContractError("velocity_rmse: dimension mismatch");
  return velocity_rmse(demo, [&ds](const Eigen::VectorXd& x) { return ds.evaluate(x); });
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw ContractError("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

QuantileSummary quantile_summary(const std::vector<double>& values) {
  return {quantile(values, 0.5), quantile(values, 0.1), quantile(values, 0.9)};
}

MetricReport MetricReport::summarize(std::string method, std::vector<MotionMetrics> motions) {
  if (motions.empty()) throw ContractError("MetricReport: no motions");
  MetricReport r;
  r.method = std::move(method);
  std::vector<double> sea, vel;
  for (const auto& m : motions) {
    if (m.has_sea) sea.push_back(m.sea);
    vel.push_back(m.v_rmse);
  }
  r.has_sea = sea.size() == motions.size();
  if (r.has_sea) r.sea = quantile_summary(sea);
  r.v_rmse = quantile_summary(vel);
  r.motions = std::move(motions);
  return r;
}

namespace {

nlohmann::json summary_json(const QuantileSummary& q) {
  return {{"median", q.median}, {"q10", q.q10}, {"q90", q.q90}};
}

std::string triple(const QuantileSummary& q) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.2f / %.2f / %.2f", q.median, q.q10, q.q90);
  return buf;
}

}  // namespace

nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json motions = nlohmann::json::array();
  for (const auto& m : report.motions) {
    nlohmann::json e = {{"name", m.name}, {"v_rmse", m.v_rmse}};
    if (m.has_sea) e["sea"] = m.sea;
    motions.push_back(std::move(e));
  }
  nlohmann::json j = {{"method", report.method}, {"motions", std::move(motions)}, {"v_rmse", summary_json(report.v_rmse)}};
  if (report.has_sea) j["sea"] = summary_json(report.sea);
  return j;
}

std::string report_table(const std::vector<MetricReport>& reports, const std::string& sea_unit,
                         const std::string& vel_unit) {
  const std::string sea_head = "SEA" + (sea_unit.empty() ? "" : " [" + sea_unit + "]");
  const std::string vel_head = "V_rmse" + (vel_unit.empty() ? "" : " [" + vel_unit + "]");
  const std::string sub = "(M_e / Q10 / Q90)";

  std::vector<std::array<std::string, 3>> rows;
  rows.push_back({"Method", sea_head, vel_head});
  rows.push_back({"", sub, sub});
  for (const auto& r : reports) rows.push_back({r.method, r.has_sea ? triple(r.sea) : "n/a", triple(r.v_rmse)});

  std::array<std::size_t, 3> width{};
  for (const auto& row : rows)
    for (std::size_t c = 0; c < 3; ++c) width[c] = std::max(width[c], row[c].size());

  std::ostringstream os;
  auto line = [&](const std::array<std::string, 3>& row) {
    os << "| ";
    for (std::size_t c = 0; c < 3; ++c) {
      os << row[c] << std::string(width[c] - row[c].size(), ' ') << (c < 2 ? " | " : " |");
    }
    os << '\n';
  };
  auto rule = [&] {
    os << '+';
    for (std::size_t c = 0; c < 3; ++c) os << std::string(width[c] + 2, '-') << '+';
    os << '\n';
  };
  rule();
  line(rows[0]);
  line(rows[1]);
  rule();
  for (std::size_t i = 2; i < rows.size(); ++i) line(rows[i]);
  rule();
  return os.str();
}

}  // namespace rds
