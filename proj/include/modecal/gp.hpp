// Copyright 2026 The modecal Authors
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

#include <vector>

#include <Eigen/Dense>

#include "modecal/rng.hpp"

namespace modecal::gp {

// Axis-aligned box for optimizing acquisitions over an arbitrary dimension.
// The 8-dim ParameterSpace converts into one; lower-dimensional boxes are
// used directly in tests and synthetic problems.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd clip(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(Rng& rng) const;
};

// Anisotropic squared-exponential kernel plus a constant prior mean and
// observation-noise variance.
struct Kernel {
  double signal_variance = 1.0;
  Eigen::VectorXd length_scales;  // one per input dimension
  double noise_variance = 1e-6;
  double prior_mean = 0.0;

  double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  // d k(a, x) / d x  (gradient with respect to the second argument).
  Eigen::VectorXd grad_second(const Eigen::VectorXd& a, const Eigen::VectorXd& x) const;
};

// Lower Cholesky factor of a symmetric positive definite matrix. Throws
// NumericalError naming the offending pivot scale when the matrix is not PD.
Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& a);

// Forward-mode derivative of the Cholesky factor: given L with A = L L^T and
// a symmetric perturbation dA, returns dL by differentiating the standard
// column-by-column recurrence.
Eigen::MatrixXd cholesky_directional_derivative(const Eigen::MatrixXd& chol_lower,
                                                const Eigen::MatrixXd& da);

struct Posterior {
  double mean = 0.0;
  double stddev = 0.0;
};

struct JointPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // latent (noise-free) covariance
};

/// Gaussian-process posterior over observed (x, loss) pairs. Immutable after
/// fit; refitting builds a new model.
class GpModel {
 public:
  // X is n x d (one row per point). Requires n >= 1 and noise_variance > 0.
  static GpModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Kernel& kernel);

  Posterior posterior(const Eigen::VectorXd& x) const;
  JointPosterior joint_posterior(const Eigen::MatrixXd& batch) const;

  const Eigen::MatrixXd& train_x() const { return x_; }
  const Eigen::VectorXd& train_y() const { return y_; }
  const Kernel& kernel() const { return kernel_; }
  int dim() const { return static_cast<int>(x_.cols()); }

  // Solves (K + noise I) v = rhs via the stored Cholesky factor.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

  // (K + noise I)^-1 (y - prior_mean), the weights of the posterior mean.
  const Eigen::VectorXd& alpha() const { return alpha_; }

 private:
  GpModel() = default;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
  Kernel kernel_;
  Eigen::MatrixXd chol_;   // lower factor of K + noise I
  Eigen::VectorXd alpha_;  // (K + noise I)^-1 (y - prior_mean)
};

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
};

// mean +/- z * stddev / sqrt(n).
ConfidenceInterval confidence_interval(double mean, double stddev, int n, double z);

// Closed-form expected improvement for a minimization problem. With
// delta = f_star - mean:  [delta]+ + s*phi(delta/s) - |delta|*Phi(-|delta|/s),
// and [delta]+ when s == 0. Always >= 0.
double expected_improvement(double mean, double stddev, double f_star);

struct QeiEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

// Improvement of one fixed standard-normal draw z: (f_star - min(m + C z))+.
// C is the Cholesky factor of the jittered joint posterior covariance.
double qei_improvement_for_draw(const Eigen::VectorXd& mean, const Eigen::MatrixXd& chol,
                                double f_star, const Eigen::VectorXd& z);

// Mean improvement over a fixed set of draws; shared by the Monte Carlo
// estimator, the SGA evaluator, and common-random-number tests.
double qei_mean_over_draws(const GpModel& model, const Eigen::MatrixXd& batch, double f_star,
                           const std::vector<Eigen::VectorXd>& draws);

// Monte Carlo batch expected improvement with its standard error. Throws
// NumericalError when the joint covariance is not PD even after jitter.
QeiEstimate qei_monte_carlo(const GpModel& model, const Eigen::MatrixXd& batch, double f_star,
                            int n_samples, Rng& rng);

// Pathwise gradient of the single-draw improvement with respect to every
// batch coordinate (q x d). Zero when the draw yields no improvement; ties in
// the batch minimum break toward the lowest index. The mean-gradient term is
// analytic; the covariance term differentiates the Cholesky recurrence.
Eigen::MatrixXd qei_gradient(const GpModel& model, const Eigen::MatrixXd& batch, double f_star,
                             const Eigen::VectorXd& z);

// Average of qei_gradient over n_draws fresh z draws.
Eigen::MatrixXd qei_gradient_estimate(const GpModel& model, const Eigen::MatrixXd& batch,
                                      double f_star, int n_draws, Rng& rng);

struct SgaParams {
  int restarts = 8;
  int steps = 40;
  double step_a = 1.0;   // step size a / (A + t)
  double step_big_a = 10.0;
  int grad_draws = 8;    // z draws averaged per ascent step
  int eval_draws = 256;  // draws for ranking restart results
};

// Multi-start stochastic gradient ascent on the Monte Carlo q-EI. Returns the
// batch (q x d) whose final iterate scores best under a common set of
// evaluation draws. Deterministic given the rng state.
Eigen::MatrixXd multistart_sga(const GpModel& model, int q, const Box& box, double f_star,
                               const SgaParams& params, Rng& rng);

}  // namespace modecal::gp
