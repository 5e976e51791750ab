#include "plasmode/metrics.hpp"

#include <cmath>

#include "plasmode/errors.hpp"

namespace plasmode {

double mab(const FitResult& fit, const EffectSpec& truth) {
    if (fit.beta_hat.size() != truth.beta.size())
        throw DimensionMismatch("mab: fit has " + std::to_string(fit.beta_hat.size()) +
                                " effects but truth has " + std::to_string(truth.beta.size()));
    double sum = std::abs(fit.mu_hat - truth.mu);
    for (Eigen::Index j = 0; j < truth.beta.size(); ++j)
        sum += std::abs(fit.beta_hat(j) - truth.beta(j));
    return sum / static_cast<double>(truth.beta.size() + 1);
}

double msep(const FitResult& fit, const Eigen::MatrixXd& X_test, const Eigen::VectorXd& y_test) {
    if (X_test.rows() != y_test.size())
        throw DimensionMismatch("msep: X_test rows and y_test length differ");
    if (X_test.rows() < 1) throw InvalidArgument("msep needs at least one test row");
    const Eigen::VectorXd pred = predict(fit, X_test);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < y_test.size(); ++i) {
        const double e = pred(i) - y_test(i);
        sum += e * e;
    }
    return sum / static_cast<double>(y_test.size());
}

double aggregate(const std::vector<double>& values) {
    if (values.empty()) throw InvalidArgument("aggregate of an empty vector");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

ConvergenceTrace convergence_trace(const std::vector<double>& values, int w, double tol,
                                   double atol) {
    if (w < 2) throw InvalidArgument("convergence window must be at least 2");
    if (!(tol > 0.0)) throw InvalidArgument("convergence tolerance must be positive");
    if (!(atol > 0.0)) throw InvalidArgument("convergence atol must be positive");

    ConvergenceTrace trace;
    trace.running_means.reserve(values.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        sum += values[k];
        trace.running_means.push_back(sum / static_cast<double>(k + 1));
    }

    for (std::size_t k = static_cast<std::size_t>(w); k <= values.size() && !trace.converged_at;
         ++k) {
        bool stable = true;
        for (std::size_t i = k - static_cast<std::size_t>(w) + 1; i < k && stable; ++i) {
            const double prev = trace.running_means[i - 1];
            const double cur = trace.running_means[i];
            const double denom = std::max({std::abs(prev), std::abs(cur), atol});
            stable = std::abs(cur - prev) / denom < tol;
        }
        if (stable) trace.converged_at = static_cast<int>(k);
    }
    return trace;
}

}  // namespace plasmode
