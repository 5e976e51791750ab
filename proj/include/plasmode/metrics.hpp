#pragma once

#include <optional>
#include <vector>

#include "plasmode/ogm.hpp"
#include "plasmode/regress.hpp"

namespace plasmode {

/// Mean absolute bias of the fitted intercept-plus-effects vector against
/// the truth: (1/(p+1)) * (|mu_hat - mu| + sum_j |beta_hat_j - beta_j|).
double mab(const FitResult& fit, const EffectSpec& truth);

/// Mean squared error of prediction over the held-out rows:
/// mean_i (predict(fit, X_test)_i - y_test_i)^2.
double msep(const FitResult& fit, const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test);

/// Arithmetic mean in input order. Callers pass values sorted by replicate
/// index, which fixes the summation order and hence the exact result.
double aggregate(const std::vector<double>& values);

struct ConvergenceTrace {
    std::vector<double> running_means;  // running_means[k-1] = mean of the first k values
    std::optional<int> converged_at;    // smallest stable k (1-based), if any
};

/// Prefix means plus the first index k >= w at which all consecutive
/// relative changes of the running mean inside the trailing window of size
/// w stay below tol. Relative change uses denominator max(|previous|,
/// |current|, atol); the atol floor keeps near-zero traces honest instead
/// of dividing by almost-zero.
ConvergenceTrace convergence_trace(const std::vector<double>& values, int w, double tol,
                                   double atol = 1e-12);

}  // namespace plasmode
