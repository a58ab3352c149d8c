/*
 * Copyright 2026 The FDIM Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fdim/curve_fit.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/NonLinearOptimization>

#include "fdim/errors.hpp"

namespace fdimq::fit {

double stable_inverse_logistic(double z) {
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(z));
}

double logistic4(double q, const std::array<double, 4>& b) {
  return b[0] * (0.5 - stable_inverse_logistic(b[1] * (q - b[2]))) + b[3];
}

double logistic5(double q, const std::array<double, 5>& b) {
  return b[0] * (0.5 - stable_inverse_logistic(b[1] * (q - b[2]))) + b[3] * q + b[4];
}

namespace {

struct Residuals {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const CurveModel* model;
  std::span<const double> x;
  std::span<const double> y;

  int inputs() const { return model->num_params; }
  int values() const { return static_cast<int>(x.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (int i = 0; i < values(); ++i) r[i] = model->value(p, x[i]) - y[i];
    return r.allFinite() ? 0 : -1;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    Eigen::VectorXd g(model->num_params);
    for (int i = 0; i < values(); ++i) {
      model->gradient(p, x[i], g);
      jac.row(i) = g.transpose();
    }
    return jac.allFinite() ? 0 : -1;
  }
};

}  // namespace

double rms_residual(const CurveModel& model, const Eigen::VectorXd& p, std::span<const double> x,
                    std::span<const double> y) {
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = model.value(p, x[i]) - y[i];
    sse += r * r;
  }
  return std::sqrt(sse / static_cast<double>(x.size()));
}

CurveFitResult least_squares(const CurveModel& model, std::span<const double> x,
                             std::span<const double> y, const Eigen::VectorXd& init,
                             int max_evaluations) {
  if (x.size() != y.size()) throw ContractError("least_squares: x and y differ in length");
  if (static_cast<int>(x.size()) < model.num_params) {
    throw ContractError("least_squares: fewer points than parameters");
  }
  Residuals functor{&model, x, y};
  Eigen::LevenbergMarquardt<Residuals> lm(functor);
  lm.parameters.ftol = 1e-15;
  lm.parameters.xtol = 1e-15;
  lm.parameters.gtol = 0.0;
  lm.parameters.maxfev = max_evaluations;

  CurveFitResult result;
  result.params = init;
  const auto status = lm.minimize(result.params);
  result.status = static_cast<int>(status);
  result.evaluations = static_cast<int>(lm.nfev);
  using Status = Eigen::LevenbergMarquardtSpace::Status;
  result.converged = status != Status::ImproperInputParameters &&
                     status != Status::TooManyFunctionEvaluation && status != Status::UserAsked &&
                     result.params.allFinite();
  if (!result.params.allFinite()) {
    result.params = init;
  }
  result.rms = rms_residual(model, result.params, x, y);
  if (!std::isfinite(result.rms)) result.converged = false;
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double m = values[mid];
  if (values.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace fdimq::fit
