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
#include <string>
#include <vector>

namespace rds {

struct DemoSample {
  double t = 0.0;
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;

  bool operator==(const DemoSample& o) const {
    return t == o.t && position.size() == o.position.size() && velocity.size() == o.velocity.size() &&
           position == o.position && velocity == o.velocity;
  }
};

/// Time-stamped desired positions and velocities. Timestamps strictly
/// increase; every sample shares one dimension.
class Demonstration {
 public:
  Demonstration() = default;
  explicit Demonstration(std::vector<DemoSample> samples, std::string name = {});

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  Eigen::Index dimension() const { return samples_.empty() ? 0 : samples_.front().position.size(); }
  const std::vector<DemoSample>& samples() const { return samples_; }
  const DemoSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::string& name() const { return name_; }

  double duration() const { return samples_.empty() ? 0.0 : samples_.back().t - samples_.front().t; }
  // Fewer than two samples: valid, but nothing to follow.
  bool is_degenerate() const { return samples_.size() < 2; }

  std::vector<Eigen::VectorXd> positions() const;
  double max_speed() const;
  // Diagonal of the axis-aligned bounding box of the positions.
  double span() const;
  // Product of the bounding-box extents (2-D area, 3-D volume, ...).
  double bounding_box_measure() const;

  bool operator==(const Demonstration&) const = default;

 private:
  std::vector<DemoSample> samples_;
  std::string name_;
};

/// Three-point central differences on the actual (possibly non-uniform)
/// spacing; one-sided at the endpoints.
std::vector<Eigen::VectorXd> estimate_velocities(const std::vector<double>& t,
                                                 const std::vector<Eigen::VectorXd>& positions);

}  // namespace rds
