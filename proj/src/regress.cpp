#include "plasmode/regress.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "plasmode/errors.hpp"
#include "plasmode/rng.hpp"

namespace plasmode {

namespace {

void require_xy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, Eigen::Index min_rows) {
    if (X.rows() != y.size())
        throw DimensionMismatch("X has " + std::to_string(X.rows()) + " rows but y has " +
                                std::to_string(y.size()));
    if (X.rows() < min_rows)
        throw InvalidArgument("fit needs at least " + std::to_string(min_rows) + " rows");
    if (X.cols() < 1) throw InvalidArgument("fit needs at least one column");
    if (!X.allFinite() || !y.allFinite())
        throw NumericError("fit input contains non-finite values");
}

struct Centered {
    Eigen::MatrixXd Xc;
    Eigen::VectorXd yc;
    Eigen::RowVectorXd xbar;
    double ybar;
};

Centered center(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Centered c;
    c.xbar = X.colwise().mean();
    c.Xc = X.rowwise() - c.xbar;
    c.ybar = y.mean();
    c.yc = y.array() - c.ybar;
    return c;
}

// Columns scaled to unit maximum-likelihood variance after centering, so
// x~_j' x~_j = m exactly. Zero-variance columns are flagged inactive and
// never enter the descent.
struct Standardized {
    Eigen::MatrixXd Xs;
    Eigen::VectorXd yc;
    Eigen::RowVectorXd xbar;
    Eigen::VectorXd sd;
    std::vector<bool> active;
    double ybar;
};

Standardized standardize(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Standardized s;
    const double m = static_cast<double>(X.rows());
    s.xbar = X.colwise().mean();
    s.Xs = X.rowwise() - s.xbar;
    s.ybar = y.mean();
    s.yc = y.array() - s.ybar;
    s.sd.resize(X.cols());
    s.active.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double v = s.Xs.col(j).squaredNorm() / m;
        const double sd = std::sqrt(v);
        s.sd(j) = sd;
        s.active[static_cast<std::size_t>(j)] = sd > 0.0;
        if (sd > 0.0) s.Xs.col(j) /= sd;
    }
    return s;
}

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

void validate_grid(const std::vector<double>& grid) {
    if (grid.empty()) throw InvalidArgument("lambda grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i]))
            throw InvalidArgument("lambda grid values must be positive and finite");
        if (i > 0 && grid[i] >= grid[i - 1])
            throw InvalidArgument("lambda grid must be strictly decreasing");
    }
}

std::vector<int> fold_assignment(Eigen::Index m, int folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
    if (folds > m)
        throw InvalidArgument("folds = " + std::to_string(folds) + " exceed rows = " +
                              std::to_string(m));
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng(seed);
    for (Eigen::Index i = 0; i + 1 < m; ++i) {
        const auto j = i + static_cast<Eigen::Index>(
                               rng.uniform_below(static_cast<std::uint64_t>(m - i)));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    std::vector<int> fold(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i)
        fold[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
            static_cast<int>(i % folds);
    return fold;
}

void split_fold(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const std::vector<int>& fold, int f, Eigen::MatrixXd& Xtr,
                Eigen::VectorXd& ytr, Eigen::MatrixXd& Xval, Eigen::VectorXd& yval) {
    const Eigen::Index m = X.rows();
    Eigen::Index ntr = 0;
    for (int g : fold) ntr += (g != f);
    Xtr.resize(ntr, X.cols());
    ytr.resize(ntr);
    Xval.resize(m - ntr, X.cols());
    yval.resize(m - ntr);
    Eigen::Index a = 0, b = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (fold[static_cast<std::size_t>(i)] != f) {
            Xtr.row(a) = X.row(i);
            ytr(a++) = y(i);
        } else {
            Xval.row(b) = X.row(i);
            yval(b++) = y(i);
        }
    }
}

// Coordinate descent on a pre-standardized design, warm-started from bs.
// Returns false when max_iter sweeps did not reach the tolerance, leaving
// the last sweep's largest change in last_change.
bool descend(const Standardized& s, double lambda, Eigen::VectorXd& bs, Eigen::VectorXd& r,
             long max_iter, double& last_change) {
    const double m = static_cast<double>(s.Xs.rows());
    const double tol = 1e-7;
    for (long iter = 0; iter < max_iter; ++iter) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < s.Xs.cols(); ++j) {
            if (!s.active[static_cast<std::size_t>(j)]) continue;
            const double rho = s.Xs.col(j).dot(r) / m + bs(j);
            const double nb = soft_threshold(rho, lambda);
            const double delta = nb - bs(j);
            if (delta != 0.0) {
                r -= s.Xs.col(j) * delta;
                bs(j) = nb;
            }
            max_change = std::max(max_change, std::abs(delta));
        }
        if (max_change < tol) {
            last_change = max_change;
            return true;
        }
        last_change = max_change;
    }
    return false;
}

FitResult finish_lasso(const Standardized& s, const Eigen::VectorXd& bs, double lambda) {
    FitResult fit;
    fit.model_kind = ModelKind::Lasso;
    fit.beta_hat.setZero(bs.size());
    for (Eigen::Index j = 0; j < bs.size(); ++j)
        if (s.active[static_cast<std::size_t>(j)]) fit.beta_hat(j) = bs(j) / s.sd(j);
    fit.mu_hat = s.ybar - s.xbar.dot(fit.beta_hat);
    fit.hyper.lambda = lambda;
    return fit;
}

double lambda_max_of(const Standardized& s) {
    const double m = static_cast<double>(s.Xs.rows());
    double lmax = 0.0;
    for (Eigen::Index j = 0; j < s.Xs.cols(); ++j)
        if (s.active[static_cast<std::size_t>(j)])
            lmax = std::max(lmax, std::abs(s.Xs.col(j).dot(s.yc)) / m);
    return lmax;
}

std::vector<double> grid_or_default(const CvSpec& cv, double lambda_max, double scale) {
    if (!cv.lambda_grid.empty()) {
        validate_grid(cv.lambda_grid);
        return cv.lambda_grid;
    }
    if (!(lambda_max > 0.0)) return {scale};  // degenerate data: any lambda gives beta = 0
    std::vector<double> grid = default_lambda_grid(lambda_max, cv.grid_size, cv.grid_min_ratio);
    for (double& v : grid) v *= scale;
    return grid;
}

// Eigendecomposition of the raw kernel K = X X' plus the projections of y
// and the all-ones vector, shared by the mixed-model routines.
struct LmmWork {
    Eigen::MatrixXd U;
    Eigen::VectorXd d;
    Eigen::VectorXd ytil;  // U'y
    Eigen::VectorXd w;     // U'1
};

LmmWork lmm_decompose(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::MatrixXd K = X * X.transpose();
    const double scale = K.cwiseAbs().maxCoeff();
    if (!(scale > 0.0))
        throw NumericError("degenerate kernel: X X' is numerically zero");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    if (es.info() != Eigen::Success) throw NumericError("kernel eigendecomposition failed");
    LmmWork wk;
    wk.U = es.eigenvectors();
    wk.d = es.eigenvalues().cwiseMax(0.0);
    wk.ytil = wk.U.transpose() * y;
    wk.w = wk.U.transpose() * Eigen::VectorXd::Ones(y.size());
    return wk;
}

struct LmmProfile {
    double mu;
    double q;        // weighted residual sum of squares
    double sigma_beta2;
    double loglik;   // restricted log-likelihood up to a constant
};

LmmProfile lmm_profile(const LmmWork& wk, double gamma) {
    const Eigen::Index m = wk.d.size();
    const Eigen::ArrayXd a = wk.d.array() + gamma;
    const Eigen::ArrayXd w = wk.w.array();
    const Eigen::ArrayXd yt = wk.ytil.array();
    const double den = (w * w / a).sum();
    const double num = (w * yt / a).sum();
    LmmProfile pr;
    pr.mu = num / den;
    const Eigen::ArrayXd resid = yt - pr.mu * w;
    pr.q = (resid * resid / a).sum();
    pr.sigma_beta2 = pr.q / static_cast<double>(m - 1);
    pr.loglik = -0.5 * (static_cast<double>(m - 1) * std::log(pr.sigma_beta2) +
                        a.log().sum() + std::log(den));
    return pr;
}

FitResult lmm_fit_at(const Eigen::MatrixXd& X, const LmmWork& wk, double gamma) {
    const LmmProfile pr = lmm_profile(wk, gamma);
    const Eigen::ArrayXd a = wk.d.array() + gamma;
    const Eigen::VectorXd scaled =
        ((wk.ytil.array() - pr.mu * wk.w.array()) / a).matrix();
    FitResult fit;
    fit.model_kind = ModelKind::Lmm;
    fit.beta_hat = X.transpose() * (wk.U * scaled);
    fit.mu_hat = pr.mu;
    fit.hyper.sigma_beta2 = pr.sigma_beta2;
    fit.hyper.sigma_eps2 = gamma * pr.sigma_beta2;
    return fit;
}

}  // namespace

std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Lasso: return "lasso";
        case ModelKind::Ridge: return "ridge";
        case ModelKind::Lmm: return "lmm";
    }
    throw InvalidArgument("unreachable model kind");
}

FitResult fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
    require_xy(X, y, 2);
    if (lambda < 0.0 || !std::isfinite(lambda))
        throw InvalidArgument("lambda must be nonnegative and finite");
    const Centered c = center(X, y);
    const Eigen::Index m = X.rows();
    const Eigen::Index p = X.cols();

    Eigen::VectorXd beta;
    if (lambda == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.Xc);
        if (qr.rank() < p)
            throw NumericError("singular system: design is rank-deficient at lambda = 0");
        beta = qr.solve(c.yc);
    } else if (p <= m) {
        Eigen::MatrixXd A = c.Xc.transpose() * c.Xc;
        A.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(A);
        if (llt.info() != Eigen::Success) throw NumericError("ridge normal equations not SPD");
        beta = llt.solve(c.Xc.transpose() * c.yc);
    } else {
        Eigen::MatrixXd G = c.Xc * c.Xc.transpose();
        G.diagonal().array() += lambda;
        Eigen::LLT<Eigen::MatrixXd> llt(G);
        if (llt.info() != Eigen::Success) throw NumericError("ridge dual system not SPD");
        beta = c.Xc.transpose() * llt.solve(c.yc);
    }

    FitResult fit;
    fit.model_kind = ModelKind::Ridge;
    fit.beta_hat = beta;
    fit.mu_hat = c.ybar - c.xbar.dot(beta);
    fit.hyper.lambda = lambda;
    return fit;
}

FitResult fit_ridge_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const CvSpec& cv) {
    require_xy(X, y, 2);
    const Eigen::Index m = X.rows();
    // The ridge penalty is a raw sum of squares, not normalized by m, so the
    // default grid (built on the per-observation lasso scale) is lifted by m.
    const std::vector<double> grid =
        grid_or_default(cv, lasso_lambda_max(X, y), static_cast<double>(m));
    const std::vector<int> fold = fold_assignment(m, cv.folds, cv.seed);

    std::vector<double> sse(grid.size(), 0.0);
    Eigen::MatrixXd Xtr, Xval;
    Eigen::VectorXd ytr, yval;
    for (int f = 0; f < cv.folds; ++f) {
        split_fold(X, y, fold, f, Xtr, ytr, Xval, yval);
        const Centered c = center(Xtr, ytr);
        const Eigen::MatrixXd Xval_c = Xval.rowwise() - c.xbar;

        // One eigendecomposition per fold serves every lambda: predictions
        // are ybar + P (g / (d + lambda)) elementwise over eigenvalues.
        Eigen::VectorXd d, g;
        Eigen::MatrixXd P;
        if (Xtr.cols() <= Xtr.rows()) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.Xc.transpose() * c.Xc);
            if (es.info() != Eigen::Success) throw NumericError("CV eigendecomposition failed");
            d = es.eigenvalues().cwiseMax(0.0);
            g = es.eigenvectors().transpose() * (c.Xc.transpose() * c.yc);
            P = Xval_c * es.eigenvectors();
        } else {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.Xc * c.Xc.transpose());
            if (es.info() != Eigen::Success) throw NumericError("CV eigendecomposition failed");
            d = es.eigenvalues().cwiseMax(0.0);
            g = es.eigenvectors().transpose() * c.yc;
            P = (Xval_c * c.Xc.transpose()) * es.eigenvectors();
        }
        for (std::size_t li = 0; li < grid.size(); ++li) {
            const Eigen::VectorXd coef = (g.array() / (d.array() + grid[li])).matrix();
            const Eigen::VectorXd pred = (P * coef).array() + c.ybar;
            sse[li] += (pred - yval).squaredNorm();
        }
    }

    std::size_t best = 0;
    for (std::size_t li = 1; li < grid.size(); ++li)
        if (sse[li] < sse[best]) best = li;  // ties keep the larger lambda
    return fit_ridge(X, y, grid[best]);
}

FitResult fit_lasso(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                    long max_iter) {
    require_xy(X, y, 2);
    if (lambda < 0.0 || !std::isfinite(lambda))
        throw InvalidArgument("lambda must be nonnegative and finite");
    if (max_iter < 1) throw InvalidArgument("max_iter must be positive");
    const Standardized s = standardize(X, y);
    Eigen::VectorXd bs = Eigen::VectorXd::Zero(X.cols());
    Eigen::VectorXd r = s.yc;
    double last_change = 0.0;
    if (!descend(s, lambda, bs, r, max_iter, last_change))
        throw ConvergenceError(max_iter, last_change, "lasso coordinate descent stalled");
    return finish_lasso(s, bs, lambda);
}

FitResult fit_lasso_cv(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const CvSpec& cv) {
    require_xy(X, y, 2);
    const Eigen::Index m = X.rows();
    const std::vector<double> grid = grid_or_default(cv, lasso_lambda_max(X, y), 1.0);
    const std::vector<int> fold = fold_assignment(m, cv.folds, cv.seed);
    const long max_iter = 100000;

    std::vector<double> sse(grid.size(), 0.0);
    Eigen::MatrixXd Xtr, Xval;
    Eigen::VectorXd ytr, yval;
    for (int f = 0; f < cv.folds; ++f) {
        split_fold(X, y, fold, f, Xtr, ytr, Xval, yval);
        const Standardized s = standardize(Xtr, ytr);

        // Standardize the held-out rows with the training fold's location
        // and scale; inactive columns contribute nothing.
        Eigen::MatrixXd Xval_s = Xval.rowwise() - s.xbar;
        for (Eigen::Index j = 0; j < Xval_s.cols(); ++j) {
            if (s.active[static_cast<std::size_t>(j)])
                Xval_s.col(j) /= s.sd(j);
            else
                Xval_s.col(j).setZero();
        }

        // Warm-started path down the decreasing grid.
        Eigen::VectorXd bs = Eigen::VectorXd::Zero(X.cols());
        Eigen::VectorXd r = s.yc;
        for (std::size_t li = 0; li < grid.size(); ++li) {
            double last_change = 0.0;
            if (!descend(s, grid[li], bs, r, max_iter, last_change))
                throw ConvergenceError(max_iter, last_change,
                                       "lasso coordinate descent stalled during CV");
            const Eigen::VectorXd pred = (Xval_s * bs).array() + s.ybar;
            sse[li] += (pred - yval).squaredNorm();
        }
    }

    std::size_t best = 0;
    for (std::size_t li = 1; li < grid.size(); ++li)
        if (sse[li] < sse[best]) best = li;
    return fit_lasso(X, y, grid[best], max_iter);
}

FitResult fit_lmm_reml(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    require_xy(X, y, 3);
    const Eigen::Index m = X.rows();

    // Constant outcome: the variance ratio is unidentified and the restricted
    // likelihood degenerates; the boundary fit is exact.
    const double ybar = y.mean();
    const double yc_norm = (y.array() - ybar).matrix().norm();
    if (yc_norm <= 1e-13 * std::sqrt(static_cast<double>(m)) * std::max(1.0, std::abs(ybar))) {
        FitResult fit;
        fit.model_kind = ModelKind::Lmm;
        fit.beta_hat = Eigen::VectorXd::Zero(X.cols());
        fit.mu_hat = ybar;
        fit.hyper.sigma_beta2 = 0.0;
        fit.hyper.sigma_eps2 = 0.0;
        return fit;
    }

    const LmmWork wk = lmm_decompose(X, y);

    const double lg_lo = -6.0, lg_hi = 6.0;
    const int grid_points = 121;
    int best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    std::vector<double> lg(grid_points);
    for (int i = 0; i < grid_points; ++i) {
        lg[i] = lg_lo + (lg_hi - lg_lo) * static_cast<double>(i) /
                            static_cast<double>(grid_points - 1);
        const double ll = lmm_profile(wk, std::pow(10.0, lg[i])).loglik;
        if (ll > best_ll) {
            best_ll = ll;
            best = i;
        }
    }

    // Golden-section refinement between the grid neighbors of the argmax,
    // in log10(gamma).
    double lo = lg[std::max(0, best - 1)];
    double hi = lg[std::min(grid_points - 1, best + 1)];
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = lmm_profile(wk, std::pow(10.0, x1)).loglik;
    double f2 = lmm_profile(wk, std::pow(10.0, x2)).loglik;
    for (int it = 0; it < 80 && hi - lo > 1e-10; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = lmm_profile(wk, std::pow(10.0, x2)).loglik;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = lmm_profile(wk, std::pow(10.0, x1)).loglik;
        }
    }
    double gamma = std::pow(10.0, 0.5 * (lo + hi));
    if (lmm_profile(wk, gamma).loglik < best_ll) gamma = std::pow(10.0, lg[best]);

    return lmm_fit_at(X, wk, gamma);
}

FitResult fit_lmm_at_ratio(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double gamma) {
    require_xy(X, y, 3);
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw InvalidArgument("variance ratio gamma must be positive and finite");
    return lmm_fit_at(X, lmm_decompose(X, y), gamma);
}

Eigen::VectorXd predict(const FitResult& fit, const Eigen::MatrixXd& X_new) {
    if (X_new.cols() != fit.beta_hat.size())
        throw DimensionMismatch("predict: X_new has " + std::to_string(X_new.cols()) +
                                " columns but the fit has " +
                                std::to_string(fit.beta_hat.size()) + " coefficients");
    return ((X_new * fit.beta_hat).array() + fit.mu_hat).matrix();
}

double lasso_lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    require_xy(X, y, 2);
    return lambda_max_of(standardize(X, y));
}

std::vector<double> default_lambda_grid(double lambda_max, int grid_size, double min_ratio) {
    if (!(lambda_max > 0.0)) throw InvalidArgument("lambda_max must be positive");
    if (grid_size < 1) throw InvalidArgument("grid_size must be positive");
    if (!(min_ratio > 0.0 && min_ratio <= 1.0))
        throw InvalidArgument("min_ratio must lie in (0,1]");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(grid_size));
    if (grid_size == 1) {
        grid.push_back(lambda_max);
        return grid;
    }
    const double step = std::log(min_ratio) / static_cast<double>(grid_size - 1);
    for (int i = 0; i < grid_size; ++i)
        grid.push_back(lambda_max * std::exp(step * static_cast<double>(i)));
    return grid;
}

LassoKkt lasso_kkt_check(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const FitResult& fit, double lambda) {
    require_xy(X, y, 2);
    if (X.cols() != fit.beta_hat.size())
        throw DimensionMismatch("kkt check: coefficient length does not match X");
    const Standardized s = standardize(X, y);
    const double m = static_cast<double>(X.rows());
    const double tol = 1e-6;

    Eigen::VectorXd bs = Eigen::VectorXd::Zero(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j)
        if (s.active[static_cast<std::size_t>(j)]) bs(j) = fit.beta_hat(j) * s.sd(j);
    const Eigen::VectorXd r = s.yc - s.Xs * bs;

    LassoKkt result;
    result.max_violation = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (!s.active[static_cast<std::size_t>(j)]) continue;
        const double c = s.Xs.col(j).dot(r) / m;
        const double violation = bs(j) == 0.0
                                     ? std::abs(c) - (lambda + tol)
                                     : std::abs(c - lambda * (bs(j) > 0.0 ? 1.0 : -1.0)) - tol;
        if (violation > result.max_violation) {
            result.max_violation = violation;
            result.worst_column = j;
        }
    }
    result.ok = result.max_violation <= 0.0;
    if (result.worst_column < 0) {  // no active columns: trivially stationary
        result.ok = true;
        result.max_violation = 0.0;
    }
    return result;
}

}  // namespace plasmode
