#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "plasmode/errors.hpp"
#include "plasmode/regress.hpp"
#include "plasmode/rng.hpp"

using namespace plasmode;

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    return X;
}

Eigen::VectorXd gaussian_vector(Eigen::Index n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

// Reference ridge through the explicit p x p normal equations on centered
// data; fine for small p, used to cross-check the production solver.
Eigen::VectorXd dense_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    const Eigen::RowVectorXd xbar = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - xbar;
    const Eigen::VectorXd yc = y.array() - y.mean();
    const Eigen::MatrixXd A =
        Xc.transpose() * Xc + lambda * Eigen::MatrixXd::Identity(X.cols(), X.cols());
    return A.ldlt().solve(Xc.transpose() * yc);
}

}  // namespace

TEST_CASE("ridge hand value: two points, lambda 2 halves the slope") {
    Eigen::MatrixXd X(2, 1);
    X << 1.0, -1.0;
    Eigen::VectorXd y(2);
    y << 1.0, -1.0;
    const FitResult fit = fit_ridge(X, y, 2.0);
    CHECK(fit.beta_hat(0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(fit.mu_hat == doctest::Approx(0.0).epsilon(1e-14));
    REQUIRE(fit.hyper.lambda.has_value());
    CHECK(*fit.hyper.lambda == 2.0);
}

TEST_CASE("a huge penalty flattens ridge to the mean") {
    const Eigen::MatrixXd X = gaussian_matrix(30, 4, 1);
    Eigen::VectorXd y = gaussian_vector(30, 2).array() + 5.0;
    const FitResult fit = fit_ridge(X, y, 1e12);
    CHECK(fit.beta_hat.cwiseAbs().maxCoeff() < 1e-9);
    CHECK(fit.mu_hat == doctest::Approx(y.mean()).epsilon(1e-9));
}

TEST_CASE("ridge at lambda 0 on full-rank data equals least squares") {
    const Eigen::MatrixXd X = gaussian_matrix(40, 5, 3);
    const Eigen::VectorXd y = gaussian_vector(40, 4);
    const FitResult fit = fit_ridge(X, y, 0.0);

    // Independent route: QR on the design with an explicit intercept column.
    Eigen::MatrixXd D(40, 6);
    D.col(0).setOnes();
    D.rightCols(5) = X;
    const Eigen::VectorXd coef = D.colPivHouseholderQr().solve(y);
    CHECK(fit.mu_hat == doctest::Approx(coef(0)).epsilon(1e-9));
    for (Eigen::Index j = 0; j < 5; ++j)
        CHECK(fit.beta_hat(j) == doctest::Approx(coef(j + 1)).epsilon(1e-9));
}

TEST_CASE("ridge at lambda 0 rejects collinear data") {
    Eigen::MatrixXd X = gaussian_matrix(20, 3, 5);
    X.col(2) = X.col(0);  // exact duplicate
    const Eigen::VectorXd y = gaussian_vector(20, 6);
    CHECK_THROWS_AS(fit_ridge(X, y, 0.0), NumericError);
    // A positive penalty restores solvability.
    CHECK_NOTHROW(fit_ridge(X, y, 0.1));
}

TEST_CASE("the dual ridge path agrees with the dense normal equations") {
    // p > m exercises the kernel-side solve.
    const Eigen::MatrixXd X = gaussian_matrix(15, 40, 7);
    const Eigen::VectorXd y = gaussian_vector(15, 8);
    for (double lambda : {1e-3, 1.0, 50.0}) {
        const FitResult fit = fit_ridge(X, y, lambda);
        const Eigen::VectorXd ref = dense_ridge(X, y, lambda);
        CHECK((fit.beta_hat - ref).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("ridge coefficient norm shrinks monotonically along the penalty path") {
    const Eigen::MatrixXd X = gaussian_matrix(50, 6, 9);
    const Eigen::VectorXd y = gaussian_vector(50, 10);
    double previous = std::numeric_limits<double>::infinity();
    for (double lambda : {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0}) {
        const double norm = fit_ridge(X, y, lambda).beta_hat.norm();
        CHECK(norm <= previous + 1e-12);
        previous = norm;
    }
}

TEST_CASE("ridge cross-validation with one grid point is a plain fit") {
    const Eigen::MatrixXd X = gaussian_matrix(30, 3, 11);
    const Eigen::VectorXd y = gaussian_vector(30, 12);
    CvSpec cv;
    cv.folds = 5;
    cv.lambda_grid = {3.7};
    const FitResult a = fit_ridge_cv(X, y, cv);
    const FitResult b = fit_ridge(X, y, 3.7);
    CHECK((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(a.mu_hat == doctest::Approx(b.mu_hat).epsilon(1e-12));
    REQUIRE(a.hyper.lambda.has_value());
    CHECK(*a.hyper.lambda == 3.7);
}

TEST_CASE("ridge cross-validation is deterministic in its seed") {
    const Eigen::MatrixXd X = gaussian_matrix(60, 8, 13);
    Eigen::VectorXd y = X.col(0) - 2.0 * X.col(3) + 0.5 * gaussian_vector(60, 14);
    CvSpec cv;
    cv.seed = 99;
    const FitResult a = fit_ridge_cv(X, y, cv);
    const FitResult b = fit_ridge_cv(X, y, cv);
    CHECK(*a.hyper.lambda == *b.hyper.lambda);
    CHECK((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cross-validation prefers heavy shrinkage on pure noise") {
    // With no signal the held-out error is minimized near the top of the
    // grid; demand the chosen lambda sits in its upper half most of the time.
    int upper = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd X = gaussian_matrix(40, 10, 600 + trial);
        const Eigen::VectorXd y = gaussian_vector(40, 700 + trial);
        CvSpec cv;
        cv.seed = static_cast<std::uint64_t>(trial);
        const FitResult fit = fit_ridge_cv(X, y, cv);
        const double mlam = *fit.hyper.lambda;
        // Default ridge grid spans [m * 1e-4 * lmax, m * lmax]; the
        // geometric midpoint separates halves.
        const double lmax = lasso_lambda_max(X, y) * static_cast<double>(X.rows());
        if (mlam >= lmax * std::sqrt(1e-4)) ++upper;
    }
    CHECK(upper >= 8);
}

TEST_CASE("lasso at or above lambda_max is exactly zero") {
    const Eigen::MatrixXd X = gaussian_matrix(50, 6, 15);
    Eigen::VectorXd y = 2.0 * X.col(1) + gaussian_vector(50, 16);
    const double lmax = lasso_lambda_max(X, y);
    for (double lambda : {lmax, lmax * 1.5}) {
        const FitResult fit = fit_lasso(X, y, lambda);
        for (Eigen::Index j = 0; j < 6; ++j) CHECK(fit.beta_hat(j) == 0.0);
        CHECK(fit.mu_hat == doctest::Approx(y.mean()).epsilon(1e-14));
    }
    // Just below lambda_max at least one coefficient activates.
    const FitResult below = fit_lasso(X, y, lmax * 0.99);
    CHECK(below.beta_hat.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("single-column lasso matches the soft-threshold formula") {
    const Eigen::Index n = 80;
    Eigen::MatrixXd X = gaussian_matrix(n, 1, 17);
    Eigen::VectorXd y = 1.5 * X.col(0) + 0.3 * gaussian_vector(n, 18);
    const double m = static_cast<double>(n);

    const Eigen::VectorXd xc = X.col(0).array() - X.col(0).mean();
    const double sd = std::sqrt(xc.squaredNorm() / m);
    const Eigen::VectorXd xt = xc / sd;
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double c = xt.dot(yc) / m;

    for (double lambda : {0.05, 0.3, 1.0}) {
        const double soft = std::max(std::abs(c) - lambda, 0.0) * (c > 0 ? 1.0 : -1.0);
        const FitResult fit = fit_lasso(X, y, lambda);
        CHECK(fit.beta_hat(0) == doctest::Approx(soft / sd).epsilon(1e-9));
    }
}

TEST_CASE("lasso at lambda 0 approaches least squares") {
    const Eigen::MatrixXd X = gaussian_matrix(60, 4, 19);
    Eigen::VectorXd y = X.col(0) - X.col(2) + 0.1 * gaussian_vector(60, 20);
    const FitResult lasso = fit_lasso(X, y, 0.0);
    const FitResult ols = fit_ridge(X, y, 0.0);
    CHECK((lasso.beta_hat - ols.beta_hat).cwiseAbs().maxCoeff() < 1e-5);
    CHECK(lasso.mu_hat == doctest::Approx(ols.mu_hat).epsilon(1e-5));
}

TEST_CASE("lasso solutions pass their optimality audit") {
    for (int trial = 0; trial < 8; ++trial) {
        const Eigen::MatrixXd X = gaussian_matrix(40, 12, 800 + trial);
        Eigen::VectorXd y =
            X.col(0) - 0.5 * X.col(5) + 0.5 * gaussian_vector(40, 900 + trial);
        const double lambda = lasso_lambda_max(X, y) * 0.2;
        const FitResult fit = fit_lasso(X, y, lambda);
        const LassoKkt kkt = lasso_kkt_check(X, y, fit, lambda);
        INFO("violation ", kkt.max_violation, " at column ", kkt.worst_column);
        CHECK(kkt.ok);
    }
}

TEST_CASE("a deliberately corrupted lasso solution fails the audit") {
    const Eigen::MatrixXd X = gaussian_matrix(40, 5, 21);
    Eigen::VectorXd y = X.col(1) + 0.2 * gaussian_vector(40, 22);
    const double lambda = lasso_lambda_max(X, y) * 0.3;
    FitResult fit = fit_lasso(X, y, lambda);
    fit.beta_hat(1) += 0.5;
    CHECK(!lasso_kkt_check(X, y, fit, lambda).ok);
}

TEST_CASE("lasso convergence failure is reported with iteration count") {
    const Eigen::MatrixXd X = gaussian_matrix(50, 8, 23);
    Eigen::VectorXd y = X.col(0) + X.col(1) + gaussian_vector(50, 24);
    CHECK_THROWS_AS(fit_lasso(X, y, 0.001, 1), ConvergenceError);
}

TEST_CASE("zero-variance columns stay inactive in the lasso") {
    Eigen::MatrixXd X = gaussian_matrix(30, 3, 25);
    X.col(1).setConstant(4.0);
    Eigen::VectorXd y = X.col(0) + 0.1 * gaussian_vector(30, 26);
    const FitResult fit = fit_lasso(X, y, 0.05);
    CHECK(fit.beta_hat(1) == 0.0);
    CHECK(std::abs(fit.beta_hat(0)) > 0.1);
}

TEST_CASE("lasso cross-validation recovers a sparse signal's support") {
    const Eigen::MatrixXd X = gaussian_matrix(100, 10, 27);
    Eigen::VectorXd y = 3.0 * X.col(2) - 2.0 * X.col(7) + 0.2 * gaussian_vector(100, 28);
    CvSpec cv;
    cv.seed = 5;
    const FitResult fit = fit_lasso_cv(X, y, cv);
    REQUIRE(fit.hyper.lambda.has_value());
    CHECK(std::abs(fit.beta_hat(2)) > 1.0);
    CHECK(std::abs(fit.beta_hat(7)) > 0.5);
    // The fitted solution still satisfies optimality at the chosen lambda.
    CHECK(lasso_kkt_check(X, y, fit, *fit.hyper.lambda).ok);
}

TEST_CASE("mixed-model fit matches ridge across the variance-ratio bridge") {
    // BLUP at fixed ratio gamma and ridge at lambda = gamma solve the same
    // problem through different decompositions.
    const std::tuple<int, int, int> shapes[] = {{25, 5, 1}, {20, 60, 2}, {40, 40, 3}};
    for (auto [m, p, seed] : shapes) {
        const Eigen::MatrixXd X = gaussian_matrix(m, p, 3000 + static_cast<std::uint64_t>(seed));
        const Eigen::VectorXd y = gaussian_vector(m, 3100 + static_cast<std::uint64_t>(seed));
        for (double gamma : {0.01, 1.0, 250.0}) {
            const FitResult lmm = fit_lmm_at_ratio(X, y, gamma);
            const FitResult ridge = fit_ridge(X, y, gamma);
            CHECK((lmm.beta_hat - ridge.beta_hat).cwiseAbs().maxCoeff() < 1e-8);
            CHECK(std::abs(lmm.mu_hat - ridge.mu_hat) < 1e-8);
        }
    }
}

TEST_CASE("REML recovers the variance ratio's order of magnitude") {
    // Simulate from the model with known gamma; the estimated ratio should
    // land within a factor of about three most of the time.
    int ok = 0;
    const Eigen::Index n = 200, p = 40;
    const double sigma_beta = 0.5, sigma_eps = 0.5;  // gamma = 1
    for (int trial = 0; trial < 10; ++trial) {
        Rng rng(5000 + static_cast<std::uint64_t>(trial));
        Eigen::MatrixXd X(n, p);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
        Eigen::VectorXd beta(p);
        for (Eigen::Index j = 0; j < p; ++j) beta(j) = sigma_beta * rng.normal();
        Eigen::VectorXd y = X * beta;
        for (Eigen::Index i = 0; i < n; ++i) y(i) += 2.0 + sigma_eps * rng.normal();

        const FitResult fit = fit_lmm_reml(X, y);
        REQUIRE(fit.hyper.sigma_beta2.has_value());
        REQUIRE(fit.hyper.sigma_eps2.has_value());
        const double gamma_hat = *fit.hyper.sigma_eps2 / *fit.hyper.sigma_beta2;
        if (gamma_hat > 1.0 / 3.0 && gamma_hat < 3.0) ++ok;
    }
    CHECK(ok >= 8);
}

TEST_CASE("a constant outcome collapses the mixed model to its mean") {
    const Eigen::MatrixXd X = gaussian_matrix(20, 4, 31);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 3.25);
    const FitResult fit = fit_lmm_reml(X, y);
    CHECK(fit.mu_hat == doctest::Approx(3.25).epsilon(1e-14));
    CHECK(fit.beta_hat.cwiseAbs().maxCoeff() == 0.0);
    CHECK(*fit.hyper.sigma_beta2 == 0.0);
    CHECK(*fit.hyper.sigma_eps2 == 0.0);
}

TEST_CASE("an all-zero design is a degenerate kernel") {
    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(10, 3);
    const Eigen::VectorXd y = gaussian_vector(10, 33);
    CHECK_THROWS_AS(fit_lmm_reml(X, y), NumericError);
    CHECK_THROWS_AS(fit_lmm_at_ratio(X, y, 1.0), NumericError);
}

TEST_CASE("the ratio fit rejects nonpositive ratios") {
    const Eigen::MatrixXd X = gaussian_matrix(10, 2, 35);
    const Eigen::VectorXd y = gaussian_vector(10, 36);
    CHECK_THROWS_AS(fit_lmm_at_ratio(X, y, 0.0), InvalidArgument);
    CHECK_THROWS_AS(fit_lmm_at_ratio(X, y, -1.0), InvalidArgument);
}

TEST_CASE("predict applies intercept plus effects") {
    FitResult fit;
    fit.mu_hat = 1.0;
    fit.beta_hat = Eigen::VectorXd(2);
    fit.beta_hat << 2.0, -1.0;
    Eigen::MatrixXd Xn(1, 2);
    Xn << 4.0, 2.0;
    const Eigen::VectorXd pred = predict(fit, Xn);
    CHECK(pred(0) == doctest::Approx(7.0).epsilon(1e-15));

    Eigen::MatrixXd wrong(1, 3);
    wrong.setZero();
    CHECK_THROWS_AS(predict(fit, wrong), DimensionMismatch);
}

TEST_CASE("prediction is affine in the inputs") {
    const Eigen::MatrixXd X = gaussian_matrix(12, 3, 37);
    Eigen::VectorXd y = X.col(0) + gaussian_vector(12, 38);
    const FitResult fit = fit_ridge(X, y, 1.0);
    const Eigen::MatrixXd A = gaussian_matrix(5, 3, 39);
    const Eigen::MatrixXd B = gaussian_matrix(5, 3, 40);
    const Eigen::VectorXd lhs = predict(fit, (A + B).eval());
    const Eigen::VectorXd rhs =
        predict(fit, A) + predict(fit, B) -
        Eigen::VectorXd::Constant(5, fit.mu_hat);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("the default penalty grid is log-spaced and decreasing") {
    const auto grid = default_lambda_grid(10.0, 5, 1e-4);
    REQUIRE(grid.size() == 5);
    CHECK(grid.front() == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(grid.back() == doctest::Approx(10.0 * 1e-4).epsilon(1e-12));
    for (std::size_t i = 1; i < grid.size(); ++i) {
        CHECK(grid[i] < grid[i - 1]);
        // Constant ratio between neighbors.
        CHECK(grid[i] / grid[i - 1] ==
              doctest::Approx(grid[1] / grid[0]).epsilon(1e-10));
    }
    CHECK_THROWS_AS(default_lambda_grid(0.0, 5, 1e-4), InvalidArgument);
    CHECK_THROWS_AS(default_lambda_grid(1.0, 0, 1e-4), InvalidArgument);
    CHECK_THROWS_AS(default_lambda_grid(1.0, 5, 0.0), InvalidArgument);
}

TEST_CASE("lambda_max is the smallest all-zero penalty") {
    const Eigen::MatrixXd X = gaussian_matrix(30, 5, 41);
    Eigen::VectorXd y = X.col(3) + 0.5 * gaussian_vector(30, 42);
    const double lmax = lasso_lambda_max(X, y);
    CHECK(lmax > 0.0);
    // Direct recomputation over standardized columns.
    const double m = 30.0;
    const Eigen::VectorXd yc = y.array() - y.mean();
    double expected = 0.0;
    for (Eigen::Index j = 0; j < 5; ++j) {
        const Eigen::VectorXd xc = X.col(j).array() - X.col(j).mean();
        const double sd = std::sqrt(xc.squaredNorm() / m);
        expected = std::max(expected, std::abs((xc / sd).dot(yc)) / m);
    }
    CHECK(lmax == doctest::Approx(expected).epsilon(1e-12));
}
