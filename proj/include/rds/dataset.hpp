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
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "rds/demonstration.hpp"

namespace rds {

// CSV: header `t,x1,..,xn[,v1,..,vn]` then one numeric row per sample.
// JSON: {"name", "goal"?, "samples": [{"t", "x": [...], "v"?: [...]}]}.
// Missing velocities are estimated by finite differences.
enum class DemoFormat { kCsv, kJson };

DemoFormat format_for_path(const std::filesystem::path& path);

Demonstration load_demonstration(std::istream& in, DemoFormat format, const std::string& name = {});
Demonstration load_demonstration(const std::filesystem::path& path);

Demonstration demonstration_from_json(const nlohmann::json& j, const std::string& name = {});
nlohmann::json demonstration_to_json(const Demonstration& demo);

void save_demonstration(std::ostream& out, const Demonstration& demo, DemoFormat format);
void save_demonstration(const std::filesystem::path& path, const Demonstration& demo);

/// Uniform index stride; first and last samples always kept.
Demonstration subsample(const Demonstration& demo, std::size_t target_count);

/// Drops the final k samples. A single-sample result is returned but flagged
/// on stderr.
Demonstration truncate_near_goal(const Demonstration& demo, std::size_t k);

/// One motion: a directory of demonstration files plus optional motion.json
/// ({"name", "goal", "units"}). Files are taken in lexical order.
struct Motion {
  std::string name;
  std::optional<Eigen::VectorXd> goal;
  std::string units;
  std::vector<Demonstration> demos;
};

std::vector<std::filesystem::path> demonstration_files(const std::filesystem::path& dir);
Motion load_motion(const std::filesystem::path& dir);
// Every subdirectory holding at least one demonstration file, lexically.
std::vector<Motion> load_dataset(const std::filesystem::path& dir);

}  // namespace rds
