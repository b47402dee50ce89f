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
#include "rds/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "rds/dynamical_system.hpp"
#include "rds/errors.hpp"

namespace rds {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end)
    throw ParseError(ParseError::Kind::kMalformed, line, "not a number: '" + std::string(field) + "'");
  if (!std::isfinite(v)) throw ParseError(ParseError::Kind::kMalformed, line, "non-finite value");
  return v;
}

// Header columns must read t, x1..xn, optionally v1..vn.
std::pair<Eigen::Index, bool> parse_header(std::string_view line) {
  const auto cols = split(line);
  auto bad = [] { return ParseError(ParseError::Kind::kMalformed, 1, "header must be t,x1..xn[,v1..vn]"); };
  if (cols.size() < 2 || cols[0] != "t") throw bad();
  std::size_t n = 0;
  while (1 + n < cols.size() && cols[1 + n] == "x" + std::to_string(n + 1)) ++n;
  if (n == 0) throw bad();
  if (cols.size() == 1 + n) return {static_cast<Eigen::Index>(n), false};
  if (cols.size() != 1 + 2 * n) throw bad();
  for (std::size_t i = 0; i < n; ++i) {
    if (cols[1 + n + i] != "v" + std::to_string(i + 1)) throw bad();
  }
  return {static_cast<Eigen::Index>(n), true};
}

Demonstration assemble(std::vector<double> t, std::vector<Eigen::VectorXd> x, std::vector<Eigen::VectorXd> v,
                       bool has_velocity, std::string name) {
  if (t.empty()) throw ParseError(ParseError::Kind::kSchema, 0, "demonstration has no samples");
  if (!has_velocity) v = estimate_velocities(t, x);
  std::vector<DemoSample> samples(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) samples[i] = {t[i], std::move(x[i]), std::move(v[i])};
  return Demonstration(std::move(samples), std::move(name));
}

Demonstration load_csv(std::istream& in, const std::string& name) {
  std::string raw;
  std::size_t line_no = 0;
  Eigen::Index n = 0;
  bool has_velocity = false;
  bool header_seen = false;
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x, v;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line_no != 1) throw ParseError(ParseError::Kind::kMalformed, line_no, "header must be the first line");
      std::tie(n, has_velocity) = parse_header(line);
      header_seen = true;
      continue;
    }
    const auto fields = split(line);
    const std::size_t expected = 1 + static_cast<std::size_t>(has_velocity ? 2 * n : n);
    if (fields.size() != expected)
      throw ParseError(ParseError::Kind::kDimensionMismatch, line_no,
                       "expected " + std::to_string(expected) + " fields, got " + std::to_string(fields.size()));
    const double ti = parse_number(fields[0], line_no);
    if (!t.empty() && !(ti > t.back()))
      throw ParseError(ParseError::Kind::kNonMonotoneTime, line_no, "timestamps must strictly increase");
    Eigen::VectorXd xi(n), vi(n);
    for (Eigen::Index k = 0; k < n; ++k) xi(k) = parse_number(fields[1 + k], line_no);
    if (has_velocity) {
      for (Eigen::Index k = 0; k < n; ++k) vi(k) = parse_number(fields[1 + n + k], line_no);
      v.push_back(vi);
    }
    t.push_back(ti);
    x.push_back(std::move(xi));
  }
  if (!header_seen) throw ParseError(ParseError::Kind::kMalformed, 0, "empty file");
  return assemble(std::move(t), std::move(x), std::move(v), has_velocity, name);
}

}  // namespace

DemoFormat format_for_path(const fs::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return DemoFormat::kCsv;
  if (ext == ".json") return DemoFormat::kJson;
  throw InputError("unsupported demonstration file extension '" + ext + "'");
}

Demonstration demonstration_from_json(const nlohmann::json& j, const std::string& name) {
  using Kind = ParseError::Kind;
  if (!j.is_object() || !j.contains("samples") || !j["samples"].is_array())
    throw ParseError(Kind::kSchema, 0, "demonstration JSON needs a 'samples' array");
  const std::string demo_name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : name;
  const auto& arr = j["samples"];
  std::vector<double> t;
  std::vector<Eigen::VectorXd> x, v;
  bool has_velocity = !arr.empty() && arr[0].contains("v");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& s = arr[i];
    const std::string where = "sample " + std::to_string(i) + ": ";
    if (!s.is_object() || !s.contains("t") || !s.contains("x") || !s["t"].is_number())
      throw ParseError(Kind::kSchema, 0, where + "needs 't' and 'x'");
    Eigen::VectorXd xi;
    try {
      xi = vector_from_json(s["x"]);
    } catch (const ContractError&) {
      throw ParseError(Kind::kSchema, 0, where + "'x' must be a numeric array");
    }
    if (xi.size() == 0 || (!x.empty() && xi.size() != x.front().size()))
      throw ParseError(Kind::kDimensionMismatch, 0, where + "inconsistent dimension");
    if (s.contains("v") != has_velocity) throw ParseError(Kind::kSchema, 0, where + "'v' must be given for all samples or none");
    const double ti = s["t"].get<double>();
    if (!std::isfinite(ti) || !xi.allFinite()) throw ParseError(Kind::kMalformed, 0, where + "non-finite value");
    if (!t.empty() && !(ti > t.back())) throw ParseError(Kind::kNonMonotoneTime, 0, where + "timestamps must strictly increase");
    if (has_velocity) {
      Eigen::VectorXd vi;
      try {
        vi = vector_from_json(s["v"]);
      } catch (const ContractError&) {
        throw ParseError(Kind::kSchema, 0, where + "'v' must be a numeric array");
      }
      if (vi.size() != xi.size()) throw ParseError(Kind::kDimensionMismatch, 0, where + "velocity dimension");
      if (!vi.allFinite()) throw ParseError(Kind::kMalformed, 0, where + "non-finite value");
      v.push_back(std::move(vi));
    }
    t.push_back(ti);
    x.push_back(std::move(xi));
  }
  return assemble(std::move(t), std::move(x), std::move(v), has_velocity, demo_name);
}

nlohmann::json demonstration_to_json(const Demonstration& demo) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : demo.samples())
    samples.push_back({{"t", s.t}, {"x", vector_to_json(s.position)}, {"v", vector_to_json(s.velocity)}});
  return {{"name", demo.name()}, {"samples", std::move(samples)}};
}

Demonstration load_demonstration(std::istream& in, DemoFormat format, const std::string& name) {
  if (format == DemoFormat::kCsv) return load_csv(in, name);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(ParseError::Kind::kMalformed, 0, e.what());
  }
  return demonstration_from_json(j, name);
}

Demonstration load_demonstration(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return load_demonstration(in, format_for_path(path), path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(e.kind(), e.line(), path.string() + ": " + e.what());
  }
}

void save_demonstration(std::ostream& out, const Demonstration& demo, DemoFormat format) {
  if (format == DemoFormat::kJson) {
    out << demonstration_to_json(demo).dump(2) << '\n';
    return;
  }
  const Eigen::Index n = demo.dimension();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",v" << i;
  out << '\n';
  const auto old = out.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& s : demo.samples()) {
    out << s.t;
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << s.position(i);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << s.velocity(i);
    out << '\n';
  }
  out.precision(old);
}

void save_demonstration(const fs::path& path, const Demonstration& demo) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  save_demonstration(out, demo, format_for_path(path));
}

Demonstration subsample(const Demonstration& demo, std::size_t target_count) {
  const std::size_t n = demo.size();
  if (target_count < 2 || target_count > n)
    throw ContractError("subsample: target count must lie in [2, " + std::to_string(n) + "]");
  std::vector<DemoSample> out;
  out.reserve(target_count);
  const std::size_t span = n - 1, parts = target_count - 1;
  for (std::size_t k = 0; k < target_count; ++k) out.push_back(demo[(k * span + parts / 2) / parts]);
  return Demonstration(std::move(out), demo.name());
}

Demonstration truncate_near_goal(const Demonstration& demo, std::size_t k) {
  if (k >= demo.size()) throw ContractError("truncate_near_goal: cannot drop all samples");
  std::vector<DemoSample> kept(demo.samples().begin(), demo.samples().end() - static_cast<std::ptrdiff_t>(k));
  if (kept.size() == 1) std::clog << "warning: truncation of '" << demo.name() << "' leaves a single sample\n";
  return Demonstration(std::move(kept), demo.name());
}

std::vector<fs::path> demonstration_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto& p = entry.path();
    if (p.filename() == "motion.json") continue;
    if (p.extension() == ".csv" || p.extension() == ".json") files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  return files;
}

Motion load_motion(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  Motion m;
  m.name = dir.filename().string();
  const fs::path meta = dir / "motion.json";
  if (fs::exists(meta)) {
    std::ifstream in(meta);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(ParseError::Kind::kMalformed, 0, meta.string() + ": " + e.what());
    }
    if (j.contains("name")) m.name = j["name"].get<std::string>();
    if (j.contains("goal")) m.goal = vector_from_json(j["goal"]);
    if (j.contains("units")) m.units = j["units"].get<std::string>();
  }
  for (const auto& f : demonstration_files(dir)) m.demos.push_back(load_demonstration(f));
  if (m.demos.empty()) throw InputError("motion directory has no demonstrations: " + dir.string());
  for (const auto& d : m.demos) {
    if (d.dimension() != m.demos.front().dimension())
      throw ParseError(ParseError::Kind::kDimensionMismatch, 0, dir.string() + ": demonstrations differ in dimension");
  }
  if (m.goal && m.goal->size() != m.demos.front().dimension())
    throw ParseError(ParseError::Kind::kDimensionMismatch, 0, meta.string() + ": goal dimension");
  return m;
}

std::vector<Motion> load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory() && !demonstration_files(entry.path()).empty()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Motion> motions;
  for (const auto& d : dirs) motions.push_back(load_motion(d));
  return motions;
}

}  // namespace rds
