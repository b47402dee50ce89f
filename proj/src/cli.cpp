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
#include "rds/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "rds/dataset.hpp"
#include "rds/errors.hpp"
#include "rds/metrics.hpp"
#include "rds/service.hpp"
#include "rds/sim.hpp"

namespace rds {

namespace {

using nlohmann::json;

std::vector<double> split_numbers(const std::string& text, char sep, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = std::min(text.find(sep, pos), text.size());
    double v = 0.0;
    const char* last = text.data() + next;
    const auto [ptr, ec] = std::from_chars(text.data() + pos, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v))
      throw ContractError("malformed " + what + " '" + text + "'");
    out.push_back(v);
    pos = next + 1;
  }
  return out;
}

Eigen::VectorXd parse_vector(const std::string& text, const std::string& what) {
  const auto v = split_numbers(text, ',', what);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Kind::kMalformed, 0, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(ParseError::Kind::kMalformed, 0, path.string() + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw ParseError(ParseError::Kind::kMalformed, 0, "cannot write " + path.string());
}

// "linear" or "linear:GAIN" around `goal`, otherwise a system JSON file.
SystemPtr parse_original(const std::string& desc, const Eigen::VectorXd& goal) {
  if (desc == "linear" || desc.rfind("linear:", 0) == 0) {
    double gain = 3.0;
    if (desc.size() > 7) gain = split_numbers(desc.substr(7), ',', "linear gain").at(0);
    return make_linear_system(gain, goal);
  }
  return system_from_json(read_json_file(desc));
}

Hyperparameters parse_hyper(const std::string& text) {
  const auto v = split_numbers(text, ',', "--hyper");
  if (v.size() != 3) throw ContractError("--hyper takes sk2,l,sn2");
  Hyperparameters h{v[0], v[1], v[2]};
  h.validate();
  return h;
}

// Stacks training pairs into the row-per-point layout used by the GP.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> stack(const std::vector<TrainingPair>& pairs) {
  Eigen::MatrixXd X(pairs.size(), pairs.empty() ? 0 : pairs.front().input.size());
  Eigen::MatrixXd Y(pairs.size(), pairs.empty() ? 0 : pairs.front().output.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = pairs[i].input.transpose();
    Y.row(static_cast<Eigen::Index>(i)) = pairs[i].output.transpose();
  }
  return {X, Y};
}

// Starting point for the evidence search, scaled to the data.
Hyperparameters data_scaled_guess(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  const double var = std::max((Y.rowwise() - Y.colwise().mean()).squaredNorm() / std::max<double>(1.0, Y.size()), 1e-6);
  const double extent = (X.colwise().maxCoeff() - X.colwise().minCoeff()).norm();
  const double l = std::max(extent * extent / 100.0, 1e-6);
  return {var, l, 1e-2 * var};
}

Hyperparameters fit_on(const std::vector<TrainingPair>& pairs, int budget) {
  const auto [X, Y] = stack(pairs);
  FitOptions options;
  options.budget = budget;
  return fit_hyperparameters(X, Y, data_scaled_guess(X, Y), options);
}

std::string format_vector(const Eigen::VectorXd& v) {
  std::ostringstream os;
  os << std::setprecision(6) << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

std::string format_hyper(const Hyperparameters& h) {
  std::ostringstream os;
  os << std::setprecision(6) << "sk2=" << h.signal_variance << " l=" << h.length_scale << " sn2=" << h.noise_variance;
  return os.str();
}

Demonstration preprocess(const Demonstration& demo, std::size_t subsample_to, std::size_t truncate) {
  Demonstration d = demo;
  if (subsample_to > 0 && d.size() > subsample_to) d = subsample(d, subsample_to);
  if (truncate > 0) d = truncate_near_goal(d, truncate);
  return d;
}

struct LearnOptions {
  std::string original = "linear:3";
  std::string goal;
  std::string demos;
  double cbar = 0.0;
  std::optional<double> t_f;
  double alpha = kDefaultClockGain;
  std::string hyper;
  bool fit_hyper = false;
  int fit_budget = 50;
  std::size_t subsample_to = 0;
  std::size_t truncate = 0;
  std::string out;
};

int run_learn(const LearnOptions& o, std::ostream& out) {
  Motion motion = load_motion(o.demos);
  if (motion.demos.empty()) throw ParseError(ParseError::Kind::kSchema, 0, "no demonstrations in " + o.demos);
  std::vector<Demonstration> demos;
  for (const auto& d : motion.demos) demos.push_back(preprocess(d, o.subsample_to, o.truncate));

  const Eigen::Index n = demos.front().dimension();
  Eigen::VectorXd goal = Eigen::VectorXd::Zero(n);
  if (!o.goal.empty()) goal = parse_vector(o.goal, "--goal");
  else if (motion.goal) goal = *motion.goal;
  SystemPtr original = parse_original(o.original, goal);
  if (original->dimension() != n)
    throw ContractError("original system has dimension " + std::to_string(original->dimension()) +
                        ", demonstrations have " + std::to_string(n));

  double duration = 0.0;
  for (const auto& d : demos) duration = std::max(duration, d.duration());
  const ClockParams clock = o.t_f ? ClockParams{*o.t_f, o.alpha} : ClockParams::for_duration(duration, o.alpha);
  clock.validate();

  Hyperparameters hyper;
  if (o.fit_hyper) {
    std::vector<TrainingPair> pairs;
    for (const auto& d : demos) {
      auto p = extract_training_pairs(d, *original);
      pairs.insert(pairs.end(), p.begin(), p.end());
    }
    hyper = fit_on(pairs, o.fit_budget);
  } else if (!o.hyper.empty()) {
    hyper = parse_hyper(o.hyper);
  }

  ReshapedSystem rs(original, hyper, clock, o.cbar);
  std::size_t accepted = 0, total = 0;
  out << "hyperparameters: " << format_hyper(hyper) << '\n';
  for (const auto& d : demos) {
    const LearnReport rep = learn_increment(rs, d);
    out << d.name() << ": accepted " << rep.accepted << ", rejected " << rep.rejected << " of " << d.size() << '\n';
    accepted += rep.accepted;
    total += d.size();
  }
  out << "total: accepted " << accepted << " of " << total << '\n';
  write_text(o.out, reshaped_to_json(rs).dump(2) + "\n");
  return kExitOk;
}

struct RolloutOptions {
  std::string model;
  std::string start;
  double dt = kDefaultTimeStep;
  double max_time = 10.0;
  double goal_tolerance = 1e-3;
  std::string integrator = "rk4";
  std::vector<std::string> holds;
  double escape_speed = 0.0;
  double stall_speed = 1e-3;
  std::string out;
};

int run_rollout(const RolloutOptions& o, std::ostream& out) {
  const ReshapedSystem rs = reshaped_from_json(read_json_file(o.model));
  const Eigen::VectorXd start = parse_vector(o.start, "--start");
  if (start.size() != rs.dimension())
    throw ContractError("--start has dimension " + std::to_string(start.size()) + ", model has " +
                        std::to_string(rs.dimension()));

  RolloutConfig cfg;
  cfg.dt = o.dt;
  cfg.max_time = o.max_time;
  cfg.goal_tolerance = o.goal_tolerance;
  cfg.integrator = o.integrator == "euler" ? Integrator::kEuler : Integrator::kRk4;
  cfg.escape_speed = o.escape_speed;
  cfg.stall_speed = o.stall_speed;
  for (const auto& h : o.holds) {
    const auto v = split_numbers(h, ':', "--hold");
    if (v.size() != 2) throw ContractError("--hold takes t:duration");
    cfg.perturbations.emplace_back(Hold{v[0], v[1]});
  }
  cfg.validate();

  const Trajectory traj = rollout(rs, start, cfg);
  if (!o.out.empty()) {
    if (std::filesystem::path(o.out).extension() == ".json") {
      write_text(o.out, trajectory_to_json(traj).dump(2) + "\n");
    } else {
      std::ostringstream csv;
      write_trajectory_csv(csv, traj);
      write_text(o.out, csv.str());
    }
  }
  out << "terminated_by: " << to_string(traj.terminated_by) << '\n';
  out << "final: t=" << traj.back().t << " x=" << format_vector(traj.back().x) << '\n';
  for (const auto& s : detect_stall(traj, rs.goal(), cfg.goal_tolerance, cfg.stall_speed))
    out << "stall: t=[" << s.t_enter << ", " << s.t_exit << "] x=" << format_vector(s.x_stall) << '\n';
  if (traj.terminated_by == Termination::kNumericalFailure)
    throw NumericalError("rollout produced a non-finite state after t = " + std::to_string(traj.back().t));
  return kExitOk;
}

struct BenchOptions {
  std::string dataset;
  std::string original = "linear";
  double gain = 3.0;
  std::string metrics = "sea,vrmse";
  std::size_t demos_per_motion = 3;
  std::size_t subsample_to = 100;
  std::size_t truncate = 10;
  bool fit_hyper = false;
  int fit_budget = 50;
  std::string hyper;
  double cbar = 0.0;
  double alpha = kDefaultClockGain;
  double dt = kDefaultTimeStep;
  std::string out;
  std::string json_out;
};

MotionMetrics bench_motion(const Motion& motion, const BenchOptions& o, bool want_sea) {
  std::vector<Demonstration> full, train;
  const std::size_t count = o.demos_per_motion == 0 ? motion.demos.size()
                                                    : std::min(o.demos_per_motion, motion.demos.size());
  for (std::size_t i = 0; i < count; ++i) {
    full.push_back(preprocess(motion.demos[i], o.subsample_to, 0));
    train.push_back(preprocess(motion.demos[i], o.subsample_to, o.truncate));
  }
  const Eigen::Index n = full.front().dimension();
  const Eigen::VectorXd goal = motion.goal ? *motion.goal : Eigen::VectorXd::Zero(n);

  SystemPtr original;
  if (o.original == "gp") {
    std::vector<TrainingPair> pairs;
    for (const auto& d : train)
      for (const auto& s : d.samples()) pairs.push_back({s.position, s.velocity});
    const Hyperparameters h = o.fit_hyper ? fit_on(pairs, o.fit_budget) : Hyperparameters{};
    const auto [X, Y] = stack(pairs);
    original = make_gp_system(GpModel::from_data(X, Y, h), goal);
  } else {
    original = make_linear_system(o.gain, goal);
  }

  std::vector<TrainingPair> pairs;
  double duration = 0.0;
  for (const auto& d : train) {
    auto p = extract_training_pairs(d, *original);
    pairs.insert(pairs.end(), p.begin(), p.end());
    duration = std::max(duration, d.duration());
  }
  Hyperparameters hyper;
  if (o.fit_hyper) hyper = fit_on(pairs, o.fit_budget);
  else if (!o.hyper.empty()) hyper = parse_hyper(o.hyper);

  ReshapedSystem rs(original, hyper, ClockParams::for_duration(duration, o.alpha), o.cbar);
  for (const auto& d : train) learn_increment(rs, d);

  MotionMetrics m;
  m.name = motion.name;
  m.has_sea = want_sea && (n == 2 || n == 3);
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (m.has_sea) {
      RolloutConfig cfg;
      cfg.dt = o.dt;
      cfg.max_time = rs.clock().t_f + 10.0;
      cfg.goal_tolerance = default_goal_tolerance(full[i]);
      const Trajectory traj = rollout(rs, full[i].samples().front().position, cfg);
      m.sea += reproduction_sea(traj.positions(), full[i].positions());
    }
    m.v_rmse += velocity_rmse(train[i], [&rs](const Eigen::VectorXd& x) { return reshaped_field(rs, x, 1.0); });
  }
  m.sea /= static_cast<double>(full.size());
  m.v_rmse /= static_cast<double>(full.size());
  return m;
}

int run_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  // V_rmse is always reported; it needs no rollouts.
  bool want_sea = false;
  std::stringstream metrics(o.metrics);
  for (std::string item; std::getline(metrics, item, ',');) {
    if (item == "sea") want_sea = true;
    else if (item != "vrmse") throw ContractError("unknown metric '" + item + "'");
  }

  const std::vector<Motion> motions = load_dataset(o.dataset);
  if (motions.empty()) {
    err << "error: no motions found in " << o.dataset << '\n';
    return kExitParse;
  }
  std::vector<MotionMetrics> rows;
  std::string units;
  for (const auto& motion : motions) {
    rows.push_back(bench_motion(motion, o, want_sea));
    if (units.empty()) units = motion.units;
  }
  const std::string method = o.original == "gp" ? "GP + RDS" : "Linear + RDS";
  const MetricReport report = MetricReport::summarize(method, std::move(rows));
  const std::string table =
      report_table({report}, units.empty() ? "" : units + "^2", units.empty() ? "" : units + "/s");
  out << table;
  if (!o.out.empty()) write_text(o.out, table);
  if (!o.json_out.empty()) write_text(o.json_out, report_to_json(report).dump(2) + "\n");
  return kExitOk;
}

int classify_and_report(std::ostream& err) {
  try {
    throw;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const json::exception& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const FitError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reshaped dynamical systems: learn, roll out and benchmark clock-gated GP reshaping"};
  app.name("rds");
  app.require_subcommand(1);

  LearnOptions lo;
  auto* learn = app.add_subcommand("learn", "Learn a reshaping controller from a directory of demonstrations");
  learn->add_option("--original", lo.original, "linear[:GAIN] or a system JSON file")->capture_default_str();
  learn->add_option("--goal", lo.goal, "Goal as x1,x2,... (default: motion.json goal or origin)");
  learn->add_option("--demos", lo.demos, "Demonstration directory")->required()->check(CLI::ExistingDirectory);
  learn->add_option("--cbar", lo.cbar, "Sparsity threshold, velocity units")->capture_default_str();
  learn->add_option("--tf", lo.t_f, "Clock switch-off time (default 1.25 x longest demo)");
  learn->add_option("--alpha", lo.alpha, "Clock gain")->capture_default_str();
  auto* hyper_opt = learn->add_option("--hyper", lo.hyper, "GP hyperparameters sk2,l,sn2");
  learn->add_flag("--fit-hyper", lo.fit_hyper, "Fit hyperparameters by maximizing the evidence")->excludes(hyper_opt);
  learn->add_option("--fit-budget", lo.fit_budget, "Coordinate sweeps for --fit-hyper")->capture_default_str();
  learn->add_option("--subsample", lo.subsample_to, "Subsample each demo to this many samples (0: off)");
  learn->add_option("--truncate-goal", lo.truncate, "Drop this many final samples of each demo");
  learn->add_option("--out", lo.out, "Model JSON output")->required();

  RolloutOptions ro;
  auto* roll = app.add_subcommand("rollout", "Integrate a learned model from a start state");
  roll->add_option("--model", ro.model, "Model JSON from `learn`")->required()->check(CLI::ExistingFile);
  roll->add_option("--start", ro.start, "Start state x1,x2,...")->required();
  roll->add_option("--dt", ro.dt, "Time step")->capture_default_str();
  roll->add_option("--max-time", ro.max_time, "Time limit")->capture_default_str();
  roll->add_option("--goal-tol", ro.goal_tolerance, "Goal tolerance")->capture_default_str();
  roll->add_option("--integrator", ro.integrator, "rk4 or euler")
      ->check(CLI::IsMember({"rk4", "euler"}))
      ->capture_default_str();
  roll->add_option("--hold", ro.holds, "Freeze the state: t:duration (repeatable)");
  roll->add_option("--escape-speed", ro.escape_speed, "Stall escape speed (0: off)")->capture_default_str();
  roll->add_option("--stall-speed", ro.stall_speed, "Speed below which the state counts as stalled")
      ->capture_default_str();
  roll->add_option("--out", ro.out, "Trajectory output (.csv or .json)");

  BenchOptions bo;
  auto* bench = app.add_subcommand("bench", "Reproduction metrics over a dataset of motions");
  bench->add_option("--dataset", bo.dataset, "Dataset directory (one subdirectory per motion)")
      ->required()
      ->check(CLI::ExistingDirectory);
  bench->add_option("--original", bo.original, "linear or gp")->check(CLI::IsMember({"linear", "gp"}))
      ->capture_default_str();
  bench->add_option("--gain", bo.gain, "Gain of the linear original")->capture_default_str();
  bench->add_option("--metrics", bo.metrics, "Comma-separated subset of sea,vrmse")->capture_default_str();
  bench->add_option("--demos-per-motion", bo.demos_per_motion, "Demos used per motion (0: all)")->capture_default_str();
  bench->add_option("--subsample", bo.subsample_to, "Subsample each demo (0: off)")->capture_default_str();
  bench->add_option("--truncate-goal", bo.truncate, "Training samples dropped near the goal")->capture_default_str();
  auto* bench_hyper = bench->add_option("--hyper", bo.hyper, "GP hyperparameters sk2,l,sn2");
  bench->add_flag("--fit-hyper", bo.fit_hyper, "Fit hyperparameters per motion")->excludes(bench_hyper);
  bench->add_option("--fit-budget", bo.fit_budget, "Coordinate sweeps for --fit-hyper")->capture_default_str();
  bench->add_option("--cbar", bo.cbar, "Sparsity threshold")->capture_default_str();
  bench->add_option("--alpha", bo.alpha, "Clock gain")->capture_default_str();
  bench->add_option("--dt", bo.dt, "Rollout time step")->capture_default_str();
  bench->add_option("--out", bo.out, "Write the table here as well");
  bench->add_option("--json", bo.json_out, "Write the report as JSON");

  std::string host = "127.0.0.1";
  int port = port_from_env();
  std::string snapshot_dir = ".";
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP teaching service (port from RDS_PORT)");
  serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "Port")->check(CLI::Range(1, 65535))->capture_default_str();
  serve_cmd->add_option("--snapshot-dir", snapshot_dir, "Where POST /sessions/{id}/save writes")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    err << target->help();
    return kExitUsage;
  }

  try {
    if (*learn) return run_learn(lo, out);
    if (*roll) return run_rollout(ro, out);
    if (*bench) return run_bench(bo, out, err);
    SessionStore store(snapshot_dir);
    out << "listening on http://" << host << ':' << port << std::endl;
    if (!serve(store, host, port)) {
      err << "error: cannot listen on " << host << ':' << port << '\n';
      return kExitUsage;
    }
    return kExitOk;
  } catch (...) {
    return classify_and_report(err);
  }
}

}  // namespace rds
