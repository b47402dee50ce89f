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
#include "rds/demonstration.hpp"

#include <algorithm>
#include <cmath>

#include "rds/errors.hpp"

namespace rds {

Demonstration::Demonstration(std::vector<DemoSample> samples, std::string name)
    : samples_(std::move(samples)), name_(std::move(name)) {
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const auto& s = samples_[i];
    if (s.position.size() < 1) throw ContractError("demonstration: empty position at sample " + std::to_string(i));
    if (s.position.size() != samples_.front().position.size() || s.velocity.size() != s.position.size())
      throw ContractError("demonstration: inconsistent dimension at sample " + std::to_string(i));
    if (!std::isfinite(s.t) || !s.position.allFinite() || !s.velocity.allFinite())
      throw InputError("demonstration: non-finite value at sample " + std::to_string(i));
    if (i > 0 && !(s.t > samples_[i - 1].t))
      throw ContractError("demonstration: timestamps must strictly increase (sample " + std::to_string(i) + ")");
  }
}

std::vector<Eigen::VectorXd> Demonstration::positions() const {
  std::vector<Eigen::VectorXd> p;
  p.reserve(samples_.size());
  for (const auto& s : samples_) p.push_back(s.position);
  return p;
}

double Demonstration::max_speed() const {
  double m = 0.0;
  for (const auto& s : samples_) m = std::max(m, s.velocity.norm());
  return m;
}

namespace {

Eigen::VectorXd extent(const std::vector<DemoSample>& samples) {
  if (samples.empty()) return {};
  Eigen::VectorXd lo = samples.front().position, hi = lo;
  for (const auto& s : samples) {
    lo = lo.cwiseMin(s.position);
    hi = hi.cwiseMax(s.position);
  }
  return hi - lo;
}

}  // namespace

double Demonstration::span() const { return samples_.empty() ? 0.0 : extent(samples_).norm(); }

double Demonstration::bounding_box_measure() const { return samples_.empty() ? 0.0 : extent(samples_).prod(); }

std::vector<Eigen::VectorXd> estimate_velocities(const std::vector<double>& t,
                                                 const std::vector<Eigen::VectorXd>& x) {
  if (t.size() != x.size()) throw ContractError("estimate_velocities: size mismatch");
  const std::size_t n = t.size();
  std::vector<Eigen::VectorXd> v(n);
  if (n == 0) return v;
  if (n == 1) {
    v[0] = Eigen::VectorXd::Zero(x[0].size());
    return v;
  }
  v[0] = (x[1] - x[0]) / (t[1] - t[0]);
  v[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = t[i] - t[i - 1];
    const double h2 = t[i + 1] - t[i];
    v[i] = -h2 / (h1 * (h1 + h2)) * x[i - 1] + (h2 - h1) / (h1 * h2) * x[i] + h1 / (h2 * (h1 + h2)) * x[i + 1];
  }
  return v;
}

}  // namespace rds
