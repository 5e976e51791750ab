#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace plasmode {

enum class ModelKind { Lasso, Ridge, Lmm };

std::string model_kind_name(ModelKind k);

struct Hyper {
    std::optional<double> lambda;
    std::optional<double> sigma_beta2;
    std::optional<double> sigma_eps2;
};

struct FitResult {
    double mu_hat = 0.0;
    Eigen::VectorXd beta_hat;
    Hyper hyper;
    ModelKind model_kind = ModelKind::Ridge;
};

/// Cross-validation layout. An empty lambda_grid means "derive the default
/// grid from the data": 100 log-spaced values from lambda_max down to
/// 1e-4 * lambda_max (the ridge variant scales this grid by m because its
/// penalty is not normalized by the sample size).
struct CvSpec {
    int folds = 10;
    std::vector<double> lambda_grid;  // strictly decreasing when given
    std::uint64_t seed = 0;
    int grid_size = 100;
    double grid_min_ratio = 1e-4;
};

/// Ridge with an unpenalized intercept: beta minimizes
/// ||y - mu 1 - X beta||^2 + lambda ||beta||^2 over (mu, beta). Columns are
/// centered internally (no variance scaling, so the returned coefficients
/// are exact minimizers of the stated objective); mu_hat = mean(y) -
/// xbar' beta_hat. Solved through the m x m dual system when p > m. At
/// lambda = 0 a rank-deficient design raises NumericError.
FitResult fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda);

/// Ridge with lambda selected by k-fold cross-validation (pooled held-out
/// squared error, ties toward the larger lambda); folds are a seeded
/// permutation, deterministic given cv.seed.
FitResult fit_ridge_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const CvSpec& cv);

/// Lasso via cyclic coordinate descent on standardized columns, objective
/// (1/(2m)) ||y - mu 1 - X beta||^2 + lambda ||beta||_1 with unpenalized
/// intercept. Iterates until the largest standardized-coefficient change in
/// a sweep is below 1e-7; coefficients are returned on the original scale.
/// Zero-variance columns get coefficient 0. Raises ConvergenceError after
/// max_iter sweeps.
FitResult fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                    long max_iter = 100000);

FitResult fit_lasso_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const CvSpec& cv);

/// Variance-components linear mixed model y = mu 1 + X beta + eps with
/// beta ~ N(0, sigma_beta2 I) and eps ~ N(0, sigma_eps2 I). The restricted
/// likelihood is profiled over the ratio gamma = sigma_eps2/sigma_beta2 on
/// a log grid over [1e-6, 1e6] refined by golden-section search, using one
/// eigendecomposition of X X'. Returns the BLUP of beta and the GLS
/// intercept at the REML estimates. Raises NumericError when X X' is
/// numerically zero.
FitResult fit_lmm_reml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Mixed-model fit at a fixed variance ratio, same marginal-covariance
/// route as fit_lmm_reml (GLS intercept, BLUP through the eigenbasis of
/// X X'). Exposed separately because BLUP at ratio gamma must agree with
/// fit_ridge at lambda = gamma; the two go through different linear algebra.
FitResult fit_lmm_at_ratio(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double gamma);

/// mu_hat 1 + X_new beta_hat.
Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& X_new);

/// Smallest lambda with an all-zero lasso solution:
/// max_j |x~_j' (y - ybar)| / m over standardized columns.
double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// grid_size log-spaced values from lambda_max down to min_ratio *
/// lambda_max, strictly decreasing.
std::vector<double> default_lambda_grid(double lambda_max, int grid_size, double min_ratio);

/// Stationarity audit of a lasso solution on the standardized scale: at
/// zero coefficients |x~_j' r / m| <= lambda + 1e-6, at nonzero ones
/// x~_j' r / m = lambda * sign within 1e-6.
struct LassoKkt {
    bool ok = false;
    double max_violation = 0.0;
    Eigen::Index worst_column = -1;
};

LassoKkt lasso_kkt_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const FitResult& fit, double lambda);

}  // namespace plasmode
