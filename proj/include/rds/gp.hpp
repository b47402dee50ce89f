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
#include <cstddef>
#include <json.hpp>

namespace rds {

/// Squared-exponential kernel hyperparameters. The length scale enters the
/// exponent as ||xi - xj||^2 / (2 l), i.e. `length_scale` has squared units
/// of the input space.
struct Hyperparameters {
  double signal_variance = 1.0;
  double length_scale = 3.0;
  double noise_variance = 0.4;

  void validate() const;
  bool operator==(const Hyperparameters&) const = default;
};

struct Prediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;  // one entry per output dimension, clamped at 0
};

struct AddResult {
  bool added = false;
  double cost = 0.0;
};

/// Noise-free squared-exponential covariance. The observation noise is added
/// once, on the diagonal of the training covariance, never here.
double kernel(const Eigen::Ref<const Eigen::VectorXd>& xi, const Eigen::Ref<const Eigen::VectorXd>& xj,
              const Hyperparameters& hyper);

/// Multi-output GP regression with one input set shared by all outputs.
///
/// Keeps a lower Cholesky factor L of K_XX + (noise + jitter) I together with
/// z = L^-1 Y and alpha = L^-T z. Appending a point extends L by one row; the
/// factor is rebuilt from scratch if the new pivot drops below `kMinPivot`.
///
/// const member functions never mutate and may be called concurrently.
class GpModel {
 public:
  static constexpr double kJitterFactor = 1e-10;
  static constexpr double kMinPivot = 1e-8;

  GpModel(Eigen::Index input_dim, Eigen::Index output_dim, Hyperparameters hyper);

  /// Batch construction; factorizes once.
  static GpModel from_data(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                           Hyperparameters hyper);

  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const { return output_dim_; }
  Eigen::Index size() const { return count_; }
  bool empty() const { return count_ == 0; }
  const Hyperparameters& hyper() const { return hyper_; }

  // Row t holds training input / target t.
  Eigen::MatrixXd inputs() const { return inputs_.topRows(count_); }
  Eigen::MatrixXd outputs() const { return outputs_.topRows(count_); }
  Eigen::MatrixXd factor() const { return chol_.topLeftCorner(count_, count_); }

  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict_mean(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  /// Appends unconditionally.
  void add(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& target);

  /// Sparsity-gated insertion: the point is stored iff
  /// ||target - predict_mean(x)|| > threshold (floored at 1e-12).
  AddResult incremental_add(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const Eigen::Ref<const Eigen::VectorXd>& target, double threshold);

  void clear();

  /// Rebuilds the factor from the stored data. Throws NumericalError with a
  /// condition estimate when the covariance is not positive definite.
  void refactorize();

  /// Number of from-scratch factorizations triggered by small pivots.
  std::size_t refactorizations() const { return refactorizations_; }

 private:
  void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd cross_covariance(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  void reserve(Eigen::Index capacity);
  void update_alpha();

  Eigen::Index input_dim_;
  Eigen::Index output_dim_;
  Hyperparameters hyper_;
  Eigen::Index count_ = 0;
  Eigen::MatrixXd inputs_;   // capacity x input_dim
  Eigen::MatrixXd outputs_;  // capacity x output_dim
  Eigen::MatrixXd chol_;     // capacity x capacity, lower triangle used
  Eigen::MatrixXd z_;        // capacity x output_dim
  Eigen::MatrixXd alpha_;    // count x output_dim
  std::size_t refactorizations_ = 0;
};

/// Log evidence summed over output columns.
double marginal_log_likelihood(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                               const Hyperparameters& hyper);

struct FitOptions {
  int budget = 50;            // coordinate sweeps
  double initial_step = 1.0;  // natural-log units
  double min_step = 1e-3;
};

/// Derivative-free coordinate search over log hyperparameters. Only moves on
/// strict improvement, so the result is never worse than `init`. A zero noise
/// variance stays fixed at zero.
Hyperparameters fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& outputs,
                                    const Hyperparameters& init, const FitOptions& options = {});

void to_json(nlohmann::json& j, const Hyperparameters& hyper);
void from_json(const nlohmann::json& j, Hyperparameters& hyper);

nlohmann::json gp_to_json(const GpModel& model);
GpModel gp_from_json(const nlohmann::json& j);

}  // namespace rds
