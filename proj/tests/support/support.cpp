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
#include "support.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <unistd.h>

namespace rds::testing {

NaturalSpline::NaturalSpline(std::vector<double> t, std::vector<Eigen::VectorXd> y) : t_(std::move(t)), y_(std::move(y)) {
  const std::size_t n = t_.size();
  if (n < 2 || y_.size() != n) throw std::invalid_argument("spline needs matching knots");
  const Eigen::Index dim = y_.front().size();
  m_.assign(n, Eigen::VectorXd::Zero(dim));
  if (n == 2) return;

  // Tridiagonal system for interior second derivatives (Thomas algorithm).
  const std::size_t k = n - 2;
  std::vector<double> sub(k), diag(k), sup(k);
  std::vector<Eigen::VectorXd> rhs(k);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = t_[i] - t_[i - 1];
    const double h1 = t_[i + 1] - t_[i];
    sub[i - 1] = h0;
    diag[i - 1] = 2.0 * (h0 + h1);
    sup[i - 1] = h1;
    rhs[i - 1] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  for (std::size_t i = 1; i < k; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[k] = rhs[k - 1] / diag[k - 1];
  for (std::size_t i = k - 1; i-- > 0;) m_[i + 1] = (rhs[i] - sup[i] * m_[i + 2]) / diag[i];
}

std::size_t NaturalSpline::segment(double t) const {
  const auto it = std::upper_bound(t_.begin(), t_.end(), t);
  const auto idx = static_cast<std::size_t>(std::distance(t_.begin(), it));
  return std::clamp<std::size_t>(idx, 1, t_.size() - 1) - 1;
}

Eigen::VectorXd NaturalSpline::value(double t) const {
  const std::size_t i = segment(t);
  const double h = t_[i + 1] - t_[i];
  const double a = (t_[i + 1] - t) / h;
  const double b = (t - t_[i]) / h;
  return a * y_[i] + b * y_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * (h * h / 6.0);
}

Eigen::VectorXd NaturalSpline::derivative(double t) const {
  const std::size_t i = segment(t);
  const double h = t_[i + 1] - t_[i];
  const double a = (t_[i + 1] - t) / h;
  const double b = (t - t_[i]) / h;
  return (y_[i + 1] - y_[i]) / h + ((1.0 - 3.0 * a * a) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * (h / 6.0);
}

namespace {

double se(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Hyperparameters& h) {
  return h.signal_variance * std::exp(-(a - b).squaredNorm() / (2.0 * h.length_scale));
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& X, const Hyperparameters& h) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = se(X.row(i).transpose(), X.row(j).transpose(), h);
  K.diagonal().array() += h.noise_variance + GpModel::kJitterFactor * h.signal_variance;
  return K;
}

Eigen::VectorXd cross(const Eigen::MatrixXd& X, const Hyperparameters& h, const Eigen::VectorXd& x) {
  Eigen::VectorXd k(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) k[i] = se(X.row(i).transpose(), x, h);
  return k;
}

}  // namespace

Eigen::VectorXd dense_gp_mean(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Hyperparameters& h,
                              const Eigen::VectorXd& x) {
  if (X.rows() == 0) return Eigen::VectorXd::Zero(Y.cols());
  const Eigen::MatrixXd weights = covariance(X, h).fullPivLu().solve(Y);
  return weights.transpose() * cross(X, h, x);
}

double dense_gp_variance(const Eigen::MatrixXd& X, const Hyperparameters& h, const Eigen::VectorXd& x) {
  if (X.rows() == 0) return h.signal_variance;
  const Eigen::VectorXd k = cross(X, h, x);
  return h.signal_variance - k.dot(covariance(X, h).fullPivLu().solve(k));
}

double dense_log_likelihood(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const Hyperparameters& h) {
  const Eigen::MatrixXd K = covariance(X, h);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  const Eigen::MatrixXd inv = lu.inverse();
  const double logdet = std::log(lu.determinant());
  double total = 0.0;
  for (Eigen::Index c = 0; c < Y.cols(); ++c) {
    const Eigen::VectorXd y = Y.col(c);
    total += -0.5 * y.dot(inv * y) - 0.5 * logdet - 0.5 * static_cast<double>(X.rows()) * std::log(2.0 * std::numbers::pi);
  }
  return total;
}

Demonstration sample_curve(const Curve& position, const Curve& velocity, double t0, double t1, int n,
                           const std::string& name) {
  std::vector<DemoSample> samples;
  for (int k = 0; k < n; ++k) {
    const double t = t0 + (t1 - t0) * k / (n - 1);
    samples.push_back({t, position(t), velocity(t)});
  }
  return Demonstration(std::move(samples), name);
}

Demonstration spline_demo(const NaturalSpline& spline, int n, const std::string& name) {
  return sample_curve([&](double t) { return spline.value(t); }, [&](double t) { return spline.derivative(t); },
                      spline.t_begin(), spline.t_end(), n, name);
}

NaturalSpline s_curve() {
  std::vector<double> t = {0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<Eigen::VectorXd> y = {vec({-1.0, 1.0}), vec({-0.2, 1.1}), vec({-0.5, 0.5}), vec({-0.8, 0.05}),
                                    vec({0.0, 0.0})};
  return NaturalSpline(std::move(t), std::move(y));
}

NaturalSpline random_curve(std::mt19937_64& rng, int knots) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> length(1.0, 2.0);
  const double duration = length(rng);
  std::vector<double> t;
  std::vector<Eigen::VectorXd> y;
  for (int k = 0; k < knots; ++k) {
    t.push_back(duration * k / (knots - 1));
    y.push_back(k + 1 == knots ? vec({0.0, 0.0}) : vec({coord(rng), coord(rng)}));
  }
  return NaturalSpline(std::move(t), std::move(y));
}

Demonstration smooth_line(const Eigen::VectorXd& from, const Eigen::VectorXd& to, double duration, int n) {
  const Eigen::VectorXd d = to - from;
  const double pi = std::numbers::pi;
  return sample_curve(
      [=](double t) -> Eigen::VectorXd { return from + d * 0.5 * (1.0 - std::cos(pi * t / duration)); },
      [=](double t) -> Eigen::VectorXd { return d * 0.5 * pi / duration * std::sin(pi * t / duration); }, 0.0,
      duration, n, "line");
}

Demonstration system_demo(const DynamicalSystem& ds, const Eigen::VectorXd& x0, int n, double dt) {
  constexpr int kSub = 20;
  const double h = dt / kSub;
  std::vector<DemoSample> samples;
  Eigen::VectorXd x = x0;
  for (int k = 0; k < n; ++k) {
    samples.push_back({k * dt, x, ds.evaluate(x)});
    for (int j = 0; j < kSub; ++j) {
      const Eigen::VectorXd k1 = ds.evaluate(x);
      const Eigen::VectorXd k2 = ds.evaluate(x + 0.5 * h * k1);
      const Eigen::VectorXd k3 = ds.evaluate(x + 0.5 * h * k2);
      const Eigen::VectorXd k4 = ds.evaluate(x + h * k3);
      x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
  }
  return Demonstration(std::move(samples), "rollout");
}

ReshapedSystem resting_point_model(double t_f) {
  const Demonstration demo = smooth_line(vec({0.0, 0.0}), vec({0.6, 0.6}), 1.0, 100);
  ReshapedSystem rs(make_linear_system(3.0, vec({0.0, 0.0})), Hyperparameters{1.0, 0.01, 1e-4},
                    ClockParams{t_f, kDefaultClockGain}, 1e-3);
  learn_increment(rs, demo);
  return rs;
}

JointScenario joint_scenario() {
  const double deg = std::numbers::pi / 180.0;
  JointScenario sc;
  sc.start = vec({35, 55, 15, -65, -15, 50}) * deg;
  sc.goal = vec({-60, 30, 30, -70, 25, 85}) * deg;
  const Eigen::VectorXd from = sc.goal + (sc.start - sc.goal) * std::exp(-3.0 * 0.25);
  const Eigen::VectorXd rate = Eigen::VectorXd::Constant(6, 20.0 * deg);
  sc.demo = sample_curve([=](double t) -> Eigen::VectorXd { return from + rate * (t - 0.25); },
                         [=](double) -> Eigen::VectorXd { return rate; }, 0.25, 1.25, 100, "joints");
  return sc;
}

std::filesystem::path fresh_dir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("rds-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace rds::testing
