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

#include "modecal/gp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "modecal/errors.hpp"
#include "modecal/numerics.hpp"

namespace modecal::gp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Relative diagonal jitter applied before factorizing joint posterior
// covariances, sized so duplicated batch points stay factorizable.
constexpr double kJointJitter = 1e-10;

VectorXd normal_vector(int n, Rng& rng) {
  VectorXd z(n);
  for (int i = 0; i < n; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace

Eigen::VectorXd Box::clip(const VectorXd& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

Eigen::VectorXd Box::sample(Rng& rng) const {
  VectorXd x(dim());
  for (int i = 0; i < dim(); ++i) x[i] = rng.uniform(lower[i], upper[i]);
  return x;
}

double Kernel::operator()(const VectorXd& a, const VectorXd& b) const {
  double s = 0.0;
  for (int d = 0; d < a.size(); ++d) {
    double r = (a[d] - b[d]) / length_scales[d];
    s += r * r;
  }
  return signal_variance * std::exp(-0.5 * s);
}

Eigen::VectorXd Kernel::grad_second(const VectorXd& a, const VectorXd& x) const {
  double k = (*this)(a, x);
  VectorXd g(x.size());
  for (int d = 0; d < x.size(); ++d) {
    double l2 = length_scales[d] * length_scales[d];
    g[d] = k * (a[d] - x[d]) / l2;
  }
  return g;
}

Eigen::MatrixXd cholesky_lower(const MatrixXd& a) {
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a, Eigen::EigenvaluesOnly);
    std::ostringstream oss;
    oss << "matrix not positive definite; smallest eigenvalue ~ " << es.eigenvalues().minCoeff();
    throw NumericalError(oss.str());
  }
  return llt.matrixL();
}

Eigen::MatrixXd cholesky_directional_derivative(const MatrixXd& chol_lower, const MatrixXd& da) {
  const auto n = chol_lower.rows();
  MatrixXd dl = MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double s = da(j, j);
    for (Eigen::Index k = 0; k < j; ++k) s -= 2.0 * chol_lower(j, k) * dl(j, k);
    dl(j, j) = s / (2.0 * chol_lower(j, j));
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double t = da(i, j);
      for (Eigen::Index k = 0; k < j; ++k) {
        t -= dl(i, k) * chol_lower(j, k) + chol_lower(i, k) * dl(j, k);
      }
      t -= chol_lower(i, j) * dl(j, j);
      dl(i, j) = t / chol_lower(j, j);
    }
  }
  return dl;
}

GpModel GpModel::fit(const MatrixXd& x, const VectorXd& y, const Kernel& kernel) {
  if (x.rows() < 1) throw ConfigError("gp fit: need at least one observation");
  if (x.rows() != y.size()) throw ConfigError("gp fit: |X| != |y|");
  if (!(kernel.noise_variance > 0.0)) throw ConfigError("gp fit: noise jitter must be > 0");
  if (kernel.length_scales.size() != x.cols()) {
    throw ConfigError("gp fit: length scale count != input dimension");
  }

  const auto n = x.rows();
  MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double v = kernel(x.row(i).transpose(), x.row(j).transpose());
      k(i, j) = v;
      k(j, i) = v;
    }
    k(i, i) += kernel.noise_variance;
  }

  GpModel model;
  model.x_ = x;
  model.y_ = y;
  model.kernel_ = kernel;
  model.chol_ = cholesky_lower(k);
  VectorXd centered = y.array() - kernel.prior_mean;
  model.alpha_ = model.chol_.transpose().triangularView<Eigen::Upper>().solve(
      model.chol_.triangularView<Eigen::Lower>().solve(centered));
  return model;
}

Eigen::VectorXd GpModel::solve(const VectorXd& rhs) const {
  return chol_.transpose().triangularView<Eigen::Upper>().solve(
      chol_.triangularView<Eigen::Lower>().solve(rhs));
}

Posterior GpModel::posterior(const VectorXd& x) const {
  const auto n = x_.rows();
  VectorXd kstar(n);
  for (Eigen::Index i = 0; i < n; ++i) kstar[i] = kernel_(x_.row(i).transpose(), x);
  double mean = kernel_.prior_mean + kstar.dot(alpha_);
  VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kstar);
  double var = kernel_.signal_variance - v.squaredNorm();
  return Posterior{mean, std::sqrt(std::max(var, 0.0))};
}

JointPosterior GpModel::joint_posterior(const MatrixXd& batch) const {
  const auto n = x_.rows();
  const auto q = batch.rows();
  MatrixXd kxb(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index b = 0; b < q; ++b) {
      kxb(i, b) = kernel_(x_.row(i).transpose(), batch.row(b).transpose());
    }
  }
  MatrixXd kbb(q, q);
  for (Eigen::Index a = 0; a < q; ++a) {
    for (Eigen::Index b = 0; b <= a; ++b) {
      double v = kernel_(batch.row(a).transpose(), batch.row(b).transpose());
      kbb(a, b) = v;
      kbb(b, a) = v;
    }
  }
  MatrixXd v = chol_.triangularView<Eigen::Lower>().solve(kxb);
  JointPosterior joint;
  joint.covariance = kbb - v.transpose() * v;
  joint.mean = VectorXd::Constant(q, kernel_.prior_mean) + kxb.transpose() * alpha_;
  return joint;
}

ConfidenceInterval confidence_interval(double mean, double stddev, int n, double z) {
  if (n < 1) throw ConfigError("confidence_interval: n must be >= 1");
  if (stddev < 0.0) throw ConfigError("confidence_interval: stddev must be >= 0");
  double half = z * stddev / std::sqrt(static_cast<double>(n));
  return ConfidenceInterval{mean - half, mean + half};
}

double expected_improvement(double mean, double stddev, double f_star) {
  double delta = f_star - mean;
  if (stddev <= 0.0) return std::max(delta, 0.0);
  double ei = std::max(delta, 0.0) + stddev * normal_pdf(delta / stddev) -
              std::abs(delta) * normal_cdf(-std::abs(delta) / stddev);
  return std::max(ei, 0.0);
}

double qei_improvement_for_draw(const VectorXd& mean, const MatrixXd& chol, double f_star,
                                const VectorXd& z) {
  VectorXd y = mean + chol * z;
  return std::max(f_star - y.minCoeff(), 0.0);
}

namespace {

// Jittered Cholesky of the joint posterior covariance; shared by the MC
// estimator and gradients so both see identical geometry.
MatrixXd joint_chol(const GpModel& model, const JointPosterior& joint) {
  MatrixXd cov = joint.covariance;
  double jitter = kJointJitter * model.kernel().signal_variance;
  cov.diagonal().array() += jitter;
  try {
    return cholesky_lower(cov);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("q-EI joint covariance: ") + e.what());
  }
}

}  // namespace

double qei_mean_over_draws(const GpModel& model, const MatrixXd& batch, double f_star,
                           const std::vector<VectorXd>& draws) {
  JointPosterior joint = model.joint_posterior(batch);
  MatrixXd chol = joint_chol(model, joint);
  double sum = 0.0;
  for (const VectorXd& z : draws) sum += qei_improvement_for_draw(joint.mean, chol, f_star, z);
  return draws.empty() ? 0.0 : sum / static_cast<double>(draws.size());
}

QeiEstimate qei_monte_carlo(const GpModel& model, const MatrixXd& batch, double f_star,
                            int n_samples, Rng& rng) {
  if (n_samples < 1) throw ConfigError("qei_monte_carlo: n_samples must be >= 1");
  JointPosterior joint = model.joint_posterior(batch);
  MatrixXd chol = joint_chol(model, joint);
  const int q = static_cast<int>(batch.rows());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    double imp = qei_improvement_for_draw(joint.mean, chol, f_star, normal_vector(q, rng));
    sum += imp;
    sum_sq += imp * imp;
  }
  double n = static_cast<double>(n_samples);
  double mean = sum / n;
  double var = std::max(sum_sq / n - mean * mean, 0.0);
  QeiEstimate est;
  est.value = mean;
  est.std_error = n_samples > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  est.n_samples = n_samples;
  return est;
}

Eigen::MatrixXd qei_gradient(const GpModel& model, const MatrixXd& batch, double f_star,
                             const VectorXd& z) {
  const int q = static_cast<int>(batch.rows());
  const int d = static_cast<int>(batch.cols());
  const auto n = model.train_x().rows();

  JointPosterior joint = model.joint_posterior(batch);
  MatrixXd chol = joint_chol(model, joint);

  MatrixXd grad = MatrixXd::Zero(q, d);
  VectorXd y = joint.mean + chol * z;
  int j_star = 0;
  y.minCoeff(&j_star);  // Eigen returns the first (lowest-index) minimizer
  if (!(f_star - y[j_star] > 0.0)) return grad;  // no improvement: zero gradient

  // Cross-covariance solves reused across coordinates.
  MatrixXd kxb(n, q);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int b = 0; b < q; ++b) {
      kxb(i, b) = model.kernel()(model.train_x().row(i).transpose(), batch.row(b).transpose());
    }
  }
  MatrixXd ainv_kxb(n, q);
  for (int b = 0; b < q; ++b) ainv_kxb.col(b) = model.solve(kxb.col(b));

  MatrixXd dsigma(q, q);
  VectorXd dk(n);
  for (int r = 0; r < q; ++r) {
    VectorXd x_r = batch.row(r).transpose();
    for (int c = 0; c < d; ++c) {
      double l2 = model.kernel().length_scales[c] * model.kernel().length_scales[c];
      for (Eigen::Index i = 0; i < n; ++i) {
        dk[i] = kxb(i, r) * (model.train_x()(i, c) - x_r[c]) / l2;
      }

      dsigma.setZero();
      for (int b = 0; b < q; ++b) {
        if (b == r) continue;
        double dk_direct =
            model.kernel()(batch.row(b).transpose(), x_r) * (batch(b, c) - x_r[c]) / l2;
        double v = dk_direct - dk.dot(ainv_kxb.col(b));
        dsigma(r, b) = v;
        dsigma(b, r) = v;
      }
      dsigma(r, r) = -2.0 * dk.dot(ainv_kxb.col(r));

      double dmean_jstar = (r == j_star) ? dk.dot(model.alpha()) : 0.0;
      MatrixXd dchol = cholesky_directional_derivative(chol, dsigma);
      double dy = dmean_jstar + dchol.row(j_star).dot(z);
      grad(r, c) = -dy;  // improvement = f_star - y[j_star]
    }
  }
  return grad;
}

Eigen::MatrixXd qei_gradient_estimate(const GpModel& model, const MatrixXd& batch, double f_star,
                                      int n_draws, Rng& rng) {
  const int q = static_cast<int>(batch.rows());
  MatrixXd sum = MatrixXd::Zero(batch.rows(), batch.cols());
  for (int s = 0; s < n_draws; ++s) {
    sum += qei_gradient(model, batch, f_star, normal_vector(q, rng));
  }
  return sum / static_cast<double>(n_draws);
}

Eigen::MatrixXd multistart_sga(const GpModel& model, int q, const Box& box, double f_star,
                               const SgaParams& params, Rng& rng) {
  if (params.restarts < 1) throw ConfigError("multistart_sga: restarts must be >= 1");
  if (q < 1) throw ConfigError("multistart_sga: q must be >= 1");

  // Common evaluation draws so restart ranking is a fair comparison.
  std::vector<VectorXd> eval_draws;
  eval_draws.reserve(static_cast<std::size_t>(params.eval_draws));
  for (int i = 0; i < params.eval_draws; ++i) eval_draws.push_back(normal_vector(q, rng));

  MatrixXd best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < params.restarts; ++restart) {
    MatrixXd batch(q, box.dim());
    for (int r = 0; r < q; ++r) batch.row(r) = box.sample(rng).transpose();

    for (int t = 0; t < params.steps; ++t) {
      MatrixXd g = qei_gradient_estimate(model, batch, f_star, params.grad_draws, rng);
      double alpha = params.step_a / (params.step_big_a + static_cast<double>(t));
      batch += alpha * g;
      for (int r = 0; r < q; ++r) {
        batch.row(r) = box.clip(batch.row(r).transpose()).transpose();
      }
    }

    double value = qei_mean_over_draws(model, batch, f_star, eval_draws);
    if (value > best_value) {
      best_value = value;
      best = batch;
    }
  }
  return best;
}

}  // namespace modecal::gp
