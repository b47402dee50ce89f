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
#include "rds/gp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "rds/errors.hpp"

namespace rds {

namespace {

constexpr double kCostFloor = 1e-12;
constexpr double kMaxLogParam = 30.0;

Eigen::MatrixXd covariance(const Eigen::MatrixXd& inputs, const Hyperparameters& hyper) {
  const Eigen::Index n = inputs.rows();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = kernel(inputs.row(i).transpose(), inputs.row(j).transpose(), hyper);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  k.diagonal().array() += hyper.noise_variance + GpModel::kJitterFactor * hyper.signal_variance;
  return k;
}

std::string condition_report(const Eigen::MatrixXd& k) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  os << "covariance of size " << k.rows() << " is not positive definite";
  if (eig.info() == Eigen::Success && k.rows() > 0) {
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    os << " (eigenvalues in [" << lo << ", " << hi << "], condition estimate "
       << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) << ")";
  }
  return os.str();
}

void check_finite(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  if (!v.allFinite()) throw InputError(std::string(what) + " contains non-finite values");
}

}  // namespace

void Hyperparameters::validate() const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
    throw ContractError("signal variance must be positive");
  if (!(length_scale > 0.0) || !std::isfinite(length_scale)) throw ContractError("length scale must be positive");
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
    throw ContractError("noise variance must be non-negative");
}

double kernel(const Eigen::Ref<const Eigen::VectorXd>& xi, const Eigen::Ref<const Eigen::VectorXd>& xj,
              const Hyperparameters& hyper) {
  if (xi.size() != xj.size()) throw ContractError("kernel: dimension mismatch");
  const double sq = (xi - xj).squaredNorm();
  return hyper.signal_variance * std::exp(-sq / (2.0 * hyper.length_scale));
}

GpModel::GpModel(Eigen::Index input_dim, Eigen::Index output_dim, Hyperparameters hyper)
    : input_dim_(input_dim), output_dim_(output_dim), hyper_(hyper) {
  if (input_dim < 1 || output_dim < 1) throw ContractError("GpModel: dimensions must be >= 1");
  hyper_.validate();
  inputs_.resize(0, input_dim_);
  outputs_.resize(0, output_dim_);
}

GpModel GpModel::from_data(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs, Hyperparameters hyper) {
  if (inputs.rows() != outputs.rows()) throw ContractError("GpModel: input and output row counts differ");
  GpModel model(inputs.cols(), outputs.cols(), hyper);
  if (!inputs.allFinite() || !outputs.allFinite()) throw InputError("GpModel: non-finite training data");
  model.reserve(inputs.rows());
  model.inputs_.topRows(inputs.rows()) = inputs;
  model.outputs_.topRows(outputs.rows()) = outputs;
  model.count_ = inputs.rows();
  if (model.count_ > 0) model.refactorize();
  return model;
}

void GpModel::check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != input_dim_) throw ContractError("GpModel: input dimension mismatch");
  check_finite(x, "query");
}

Eigen::VectorXd GpModel::cross_covariance(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd k(count_);
  for (Eigen::Index t = 0; t < count_; ++t) k(t) = kernel(inputs_.row(t).transpose(), x, hyper_);
  return k;
}

void GpModel::reserve(Eigen::Index capacity) {
  if (capacity <= inputs_.rows()) return;
  const Eigen::Index grown = std::max<Eigen::Index>(capacity, 2 * inputs_.rows());
  inputs_.conservativeResize(grown, input_dim_);
  outputs_.conservativeResize(grown, output_dim_);
  z_.conservativeResize(grown, output_dim_);
  Eigen::MatrixXd chol = Eigen::MatrixXd::Zero(grown, grown);
  chol.topLeftCorner(count_, count_) = chol_.topLeftCorner(count_, count_);
  chol_.swap(chol);
}

Eigen::VectorXd GpModel::predict_mean(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  if (count_ == 0) return Eigen::VectorXd::Zero(output_dim_);
  return alpha_.transpose() * cross_covariance(x);
}

Prediction GpModel::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  Prediction p;
  if (count_ == 0) {
    p.mean = Eigen::VectorXd::Zero(output_dim_);
    p.variance = Eigen::VectorXd::Constant(output_dim_, hyper_.signal_variance);
    return p;
  }
  const Eigen::VectorXd k = cross_covariance(x);
  const Eigen::VectorXd v = chol_.topLeftCorner(count_, count_).triangularView<Eigen::Lower>().solve(k);
  p.mean = alpha_.transpose() * k;
  const double var = std::max(0.0, hyper_.signal_variance - v.squaredNorm());
  p.variance = Eigen::VectorXd::Constant(output_dim_, var);
  return p;
}

void GpModel::add(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& target) {
  check_input(x);
  if (target.size() != output_dim_) throw ContractError("GpModel: output dimension mismatch");
  check_finite(target, "target");

  reserve(count_ + 1);
  const double diag = hyper_.signal_variance + hyper_.noise_variance + kJitterFactor * hyper_.signal_variance;
  Eigen::VectorXd row;
  double pivot_sq = diag;
  if (count_ > 0) {
    row = chol_.topLeftCorner(count_, count_).triangularView<Eigen::Lower>().solve(cross_covariance(x));
    pivot_sq -= row.squaredNorm();
  }

  inputs_.row(count_) = x.transpose();
  outputs_.row(count_) = target.transpose();

  if (pivot_sq > kMinPivot * kMinPivot) {
    const double pivot = std::sqrt(pivot_sq);
    if (count_ > 0) {
      chol_.row(count_).head(count_) = row.transpose();
      z_.row(count_) = (target.transpose() - row.transpose() * z_.topRows(count_)) / pivot;
    } else {
      z_.row(count_) = target.transpose() / pivot;
    }
    chol_(count_, count_) = pivot;
    ++count_;
    update_alpha();
  } else {
    ++count_;
    ++refactorizations_;
    try {
      refactorize();
    } catch (const NumericalError&) {
      // Drop the offending point; the previous set factorized fine.
      --count_;
      if (count_ > 0) refactorize();
      throw;
    }
  }
}

AddResult GpModel::incremental_add(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   const Eigen::Ref<const Eigen::VectorXd>& target, double threshold) {
  if (target.size() != output_dim_) throw ContractError("GpModel: output dimension mismatch");
  AddResult result;
  result.cost = (target - predict_mean(x)).norm();
  result.added = result.cost > std::max(threshold, kCostFloor);
  if (result.added) add(x, target);
  return result;
}

void GpModel::clear() {
  count_ = 0;
  alpha_.resize(0, output_dim_);
}

void GpModel::refactorize() {
  const Eigen::MatrixXd k = covariance(inputs_.topRows(count_), hyper_);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw NumericalError(condition_report(k));
  chol_.topLeftCorner(count_, count_) = llt.matrixL();
  z_.topRows(count_) = llt.matrixL().solve(outputs_.topRows(count_));
  update_alpha();
}

void GpModel::update_alpha() {
  alpha_ = chol_.topLeftCorner(count_, count_).transpose().triangularView<Eigen::Upper>().solve(z_.topRows(count_));
}

double marginal_log_likelihood(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                               const Hyperparameters& hyper) {
  hyper.validate();
  if (inputs.rows() < 1) throw ContractError("marginal_log_likelihood: need at least one point");
  if (inputs.rows() != outputs.rows()) throw ContractError("marginal_log_likelihood: row count mismatch");
  const Eigen::MatrixXd k = covariance(inputs, hyper);
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) throw NumericalError(condition_report(k));
  const Eigen::MatrixXd z = llt.matrixL().solve(outputs);
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double t = static_cast<double>(inputs.rows());
  const double m = static_cast<double>(outputs.cols());
  return -0.5 * z.squaredNorm() - 0.5 * m * log_det - 0.5 * m * t * std::log(2.0 * std::numbers::pi);
}

Hyperparameters fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                                    const Hyperparameters& init, const FitOptions& options) {
  init.validate();
  if (inputs.rows() < 2) throw FitError("fit_hyperparameters: need at least two training points");
  bool distinct = false;
  for (Eigen::Index t = 1; t < inputs.rows() && !distinct; ++t) distinct = inputs.row(t) != inputs.row(0);
  if (!distinct) throw FitError("fit_hyperparameters: all training inputs are identical");
  if (options.budget <= 0) return init;

  const bool fit_noise = init.noise_variance > 0.0;
  const int dims = fit_noise ? 3 : 2;
  std::array<double, 3> p = {std::log(init.signal_variance), std::log(init.length_scale),
                             fit_noise ? std::log(init.noise_variance) : 0.0};
  auto unpack = [&](const std::array<double, 3>& q) {
    return Hyperparameters{std::exp(q[0]), std::exp(q[1]), fit_noise ? std::exp(q[2]) : 0.0};
  };
  auto objective = [&](const std::array<double, 3>& q) {
    try {
      const double v = marginal_log_likelihood(inputs, outputs, unpack(q));
      return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  double best = objective(p);
  std::array<double, 3> step;
  step.fill(options.initial_step);
  for (int sweep = 0; sweep < options.budget; ++sweep) {
    bool active = false;
    for (int d = 0; d < dims; ++d) {
      if (step[d] < options.min_step) continue;
      active = true;
      bool moved = false;
      for (double sign : {1.0, -1.0}) {
        std::array<double, 3> q = p;
        q[d] = std::clamp(q[d] + sign * step[d], -kMaxLogParam, kMaxLogParam);
        const double v = objective(q);
        if (v > best) {
          best = v;
          p = q;
          moved = true;
          break;
        }
      }
      if (!moved) step[d] *= 0.5;
    }
    if (!active) break;
  }
  return unpack(p);
}

void to_json(nlohmann::json& j, const Hyperparameters& hyper) {
  j = nlohmann::json{{"sk2", hyper.signal_variance}, {"l", hyper.length_scale}, {"sn2", hyper.noise_variance}};
}

void from_json(const nlohmann::json& j, Hyperparameters& hyper) {
  j.at("sk2").get_to(hyper.signal_variance);
  j.at("l").get_to(hyper.length_scale);
  j.at("sn2").get_to(hyper.noise_variance);
  hyper.validate();
}

namespace {

nlohmann::json rows_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd rows_from_json(const nlohmann::json& rows, Eigen::Index cols, const char* what) {
  if (!rows.is_array()) throw ContractError(std::string(what) + " must be an array of rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ContractError(std::string(what) + ": row " + std::to_string(i) + " has the wrong dimension");
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = row[j].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json gp_to_json(const GpModel& model) {
  return nlohmann::json{{"hyper", model.hyper()},
                        {"input_dim", model.input_dim()},
                        {"output_dim", model.output_dim()},
                        {"inputs", rows_to_json(model.inputs())},
                        {"outputs", rows_to_json(model.outputs())}};
}

GpModel gp_from_json(const nlohmann::json& j) {
  const auto hyper = j.at("hyper").get<Hyperparameters>();
  const auto& inputs = j.at("inputs");
  const auto& outputs = j.at("outputs");
  Eigen::Index input_dim = j.contains("input_dim") ? j["input_dim"].get<Eigen::Index>() : 0;
  Eigen::Index output_dim = j.contains("output_dim") ? j["output_dim"].get<Eigen::Index>() : 0;
  if (input_dim == 0 && !inputs.empty()) input_dim = static_cast<Eigen::Index>(inputs.at(0).size());
  if (output_dim == 0 && !outputs.empty()) output_dim = static_cast<Eigen::Index>(outputs.at(0).size());
  if (input_dim == 0 || output_dim == 0) throw ContractError("GP model JSON: cannot infer dimensions");
  return GpModel::from_data(rows_from_json(inputs, input_dim, "inputs"), rows_from_json(outputs, output_dim, "outputs"),
                            hyper);
}

}  // namespace rds
