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

#include "modecal/mnl_estimate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "modecal/errors.hpp"

namespace modecal {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

// Parameter layout: [alpha_j for j != reference ..., gamma_0 .. gamma_{p-1}].
struct Layout {
  int n_alt;
  int n_feat;
  int reference;

  int n_params() const { return n_alt - 1 + n_feat; }
  // Index of alternative j's intercept in the parameter vector, -1 for the
  // reference alternative.
  int alpha_index(int j) const {
    if (j == reference) return -1;
    return j < reference ? j : j - 1;
  }
  int gamma_index(int f) const { return n_alt - 1 + f; }
};

// Fills per-alternative utilities -> probabilities for one observation.
void observation_probs(const Layout& lay, const VectorXd& theta, const ChoiceObservation& obs,
                       VectorXd& probs) {
  const int m = lay.n_alt;
  VectorXd u(m);
  for (int j = 0; j < m; ++j) {
    double v = 0.0;
    int ai = lay.alpha_index(j);
    if (ai >= 0) v += theta[ai];
    for (int f = 0; f < lay.n_feat; ++f) {
      v += theta[lay.gamma_index(f)] * obs.attributes[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)];
    }
    u[j] = v;
  }
  double max_u = u.maxCoeff();
  probs = (u.array() - max_u).exp();
  probs /= probs.sum();
}

double log_likelihood(const Layout& lay, const VectorXd& theta, const ChoiceDataset& data) {
  double ll = 0.0;
  VectorXd probs(lay.n_alt);
  for (const ChoiceObservation& obs : data.observations) {
    observation_probs(lay, theta, obs, probs);
    ll += std::log(std::max(probs[obs.chosen], 1e-300));
  }
  return ll;
}

void gradient_and_hessian(const Layout& lay, const VectorXd& theta, const ChoiceDataset& data,
                          VectorXd& grad, MatrixXd& hess) {
  const int p = lay.n_params();
  grad.setZero(p);
  hess.setZero(p, p);
  VectorXd probs(lay.n_alt);
  VectorXd x_j(p);  // design row for one alternative
  MatrixXd design(lay.n_alt, p);

  for (const ChoiceObservation& obs : data.observations) {
    observation_probs(lay, theta, obs, probs);
    design.setZero();
    for (int j = 0; j < lay.n_alt; ++j) {
      int ai = lay.alpha_index(j);
      if (ai >= 0) design(j, ai) = 1.0;
      for (int f = 0; f < lay.n_feat; ++f) {
        design(j, lay.gamma_index(f)) =
            obs.attributes[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)];
      }
    }
    // grad += x_chosen - E[x]; hess -= Cov[x] under the choice distribution.
    VectorXd mean_x = design.transpose() * probs;
    grad += design.row(obs.chosen).transpose() - mean_x;
    MatrixXd weighted = design.transpose() * probs.asDiagonal() * design;
    hess -= weighted - mean_x * mean_x.transpose();
  }
}

}  // namespace

BetaEstimate estimate_beta(const ChoiceDataset& data, int reference) {
  if (data.observations.empty()) throw ConfigError("estimate_beta: empty data");
  if (data.n_alternatives < 2) throw ConfigError("estimate_beta: need >= 2 alternatives");
  if (reference < 0 || reference >= data.n_alternatives) {
    throw ConfigError("estimate_beta: reference alternative out of range");
  }

  std::vector<int> chosen_counts(static_cast<std::size_t>(data.n_alternatives), 0);
  for (const ChoiceObservation& obs : data.observations) {
    if (obs.chosen < 0 || obs.chosen >= data.n_alternatives) {
      throw ConfigError("estimate_beta: chosen alternative out of range");
    }
    if (static_cast<int>(obs.attributes.size()) != data.n_alternatives) {
      throw ConfigError("estimate_beta: observation attribute rows != n_alternatives");
    }
    for (const auto& row : obs.attributes) {
      if (static_cast<int>(row.size()) != data.n_features) {
        throw ConfigError("estimate_beta: attribute row length != n_features");
      }
    }
    ++chosen_counts[static_cast<std::size_t>(obs.chosen)];
  }
  for (int j = 0; j < data.n_alternatives; ++j) {
    if (chosen_counts[static_cast<std::size_t>(j)] == 0) {
      throw NumericalError("estimate_beta: alternative " + std::to_string(j) +
                           " never chosen; its intercept diverges");
    }
  }

  Layout lay{data.n_alternatives, data.n_features, reference};
  const int p = lay.n_params();
  VectorXd theta = VectorXd::Zero(p);
  double ll = log_likelihood(lay, theta, data);
  const double ll_at_zero = ll;

  VectorXd grad(p);
  MatrixXd hess(p, p);
  const double kGradTol = 1e-8;
  // Under complete separation the gradient decays like n*exp(-|theta|), so a
  // run can satisfy the tolerance around |theta| ~ 23 while still diverging;
  // anything past this bound is a separation artifact, not an estimate.
  const double kDivergenceBound = 15.0;
  const int kMaxIter = 200;

  int iter = 0;
  for (; iter < kMaxIter; ++iter) {
    gradient_and_hessian(lay, theta, data, grad, hess);
    if (grad.lpNorm<Eigen::Infinity>() < kGradTol) break;

    // Newton direction on the concave log-likelihood; ridge fallback when the
    // observed information is numerically singular.
    MatrixXd info = -hess;
    Eigen::LDLT<MatrixXd> ldlt(info);
    VectorXd step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      step = ldlt.solve(grad);
    } else {
      step = (info + 1e-8 * MatrixXd::Identity(p, p)).ldlt().solve(grad);
    }

    // Step halving with a slack at the summation noise floor; without it the
    // last Newton step gets rejected forever once the true gain drops below
    // floating-point noise.
    const double slack = 1e-9 * (1.0 + std::abs(ll));
    double t = 1.0;
    double ll_new = log_likelihood(lay, theta + t * step, data);
    int halvings = 0;
    while (ll_new < ll - slack && halvings < 40) {
      t *= 0.5;
      ll_new = log_likelihood(lay, theta + t * step, data);
      ++halvings;
    }
    theta += t * step;
    ll = ll_new;

    if (theta.lpNorm<Eigen::Infinity>() > kDivergenceBound) {
      throw NumericalError(
          "estimate_beta: estimate diverged (complete separation suspected); |theta| exceeded " +
          std::to_string(kDivergenceBound));
    }
  }

  gradient_and_hessian(lay, theta, data, grad, hess);
  if (grad.lpNorm<Eigen::Infinity>() >= kGradTol) {
    throw NumericalError("estimate_beta: no convergence after " + std::to_string(kMaxIter) +
                         " iterations");
  }
  if (theta.lpNorm<Eigen::Infinity>() > kDivergenceBound) {
    throw NumericalError("estimate_beta: estimate diverged (complete separation suspected)");
  }
  if (ll < ll_at_zero - 1e-9) {
    throw NumericalError("estimate_beta: final log-likelihood below the null model");
  }

  // Standard errors from the inverse observed information.
  MatrixXd cov = (-hess).ldlt().solve(MatrixXd::Identity(p, p));

  BetaEstimate est;
  est.intercepts.assign(static_cast<std::size_t>(data.n_alternatives), 0.0);
  est.intercept_se.assign(static_cast<std::size_t>(data.n_alternatives), 0.0);
  est.coefficients.assign(static_cast<std::size_t>(data.n_features), 0.0);
  est.coefficient_se.assign(static_cast<std::size_t>(data.n_features), 0.0);
  for (int j = 0; j < data.n_alternatives; ++j) {
    int ai = lay.alpha_index(j);
    if (ai < 0) continue;
    est.intercepts[static_cast<std::size_t>(j)] = theta[ai];
    est.intercept_se[static_cast<std::size_t>(j)] = std::sqrt(std::max(cov(ai, ai), 0.0));
  }
  for (int f = 0; f < data.n_features; ++f) {
    int gi = lay.gamma_index(f);
    est.coefficients[static_cast<std::size_t>(f)] = theta[gi];
    est.coefficient_se[static_cast<std::size_t>(f)] = std::sqrt(std::max(cov(gi, gi), 0.0));
  }
  est.log_likelihood = ll;
  est.iterations = iter;
  return est;
}

ChoiceDataset ChoiceDataset::from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  ChoiceDataset data;
  if (!j.contains("n_alternatives") || !j["n_alternatives"].is_number_integer()) {
    throw ConfigError(origin + ": missing integer 'n_alternatives'");
  }
  data.n_alternatives = j["n_alternatives"].get<int>();
  data.n_features = j.value("n_features", 0);
  if (!j.contains("observations") || !j["observations"].is_array()) {
    throw ConfigError(origin + ": missing 'observations' array");
  }
  for (const json& o : j["observations"]) {
    ChoiceObservation obs;
    if (!o.contains("chosen")) throw ConfigError(origin + ": observation missing 'chosen'");
    obs.chosen = o["chosen"].get<int>();
    if (data.n_features > 0) {
      if (!o.contains("attributes")) {
        throw ConfigError(origin + ": observation missing 'attributes'");
      }
      obs.attributes = o["attributes"].get<std::vector<std::vector<double>>>();
    } else {
      obs.attributes.assign(static_cast<std::size_t>(data.n_alternatives), {});
    }
    data.observations.push_back(std::move(obs));
  }
  return data;
}

ChoiceDataset ChoiceDataset::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open choices file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), path.string());
}

std::string BetaEstimate::to_string() const {
  std::ostringstream oss;
  oss << "log-likelihood " << log_likelihood << " after " << iterations << " Newton steps\n";
  for (std::size_t j = 0; j < intercepts.size(); ++j) {
    oss << "  intercept[" << j << "] = " << intercepts[j] << " (se " << intercept_se[j] << ")\n";
  }
  for (std::size_t f = 0; f < coefficients.size(); ++f) {
    oss << "  coefficient[" << f << "] = " << coefficients[f] << " (se " << coefficient_se[f]
        << ")\n";
  }
  return oss.str();
}

}  // namespace modecal
