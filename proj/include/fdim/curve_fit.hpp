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

#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace fdimq::fit {

// Logistic with a symmetric offset: b1 * (1/2 - 1/(1 + exp(b2 (q - b3)))) + b4.
// Evaluated without overflow for any |b2 (q - b3)|.
double logistic4(double q, const std::array<double, 4>& b);

// logistic4 plus a linear term: ... + b4 * q + b5 (b4, b5 are params[3], params[4]).
double logistic5(double q, const std::array<double, 5>& b);

// 1 / (1 + exp(z)) without overflow.
double stable_inverse_logistic(double z);

struct CurveModel {
  int num_params = 0;
  std::function<double(const Eigen::VectorXd& p, double x)> value;
  // Writes d value / d p into grad (size num_params).
  std::function<void(const Eigen::VectorXd& p, double x, Eigen::Ref<Eigen::VectorXd> grad)>
      gradient;
};

struct CurveFitResult {
  Eigen::VectorXd params;
  double rms = 0.0;  // root-mean-square residual
  bool converged = false;
  int status = 0;    // raw Levenberg-Marquardt status code
  int evaluations = 0;
};

// Damped least squares (Levenberg-Marquardt) fit of model(x) to y.
CurveFitResult least_squares(const CurveModel& model, std::span<const double> x,
                             std::span<const double> y, const Eigen::VectorXd& init,
                             int max_evaluations = 4000);

double rms_residual(const CurveModel& model, const Eigen::VectorXd& p, std::span<const double> x,
                    std::span<const double> y);

double median(std::vector<double> values);

}  // namespace fdimq::fit
