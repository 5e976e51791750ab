#pragma once

#include <Eigen/Dense>

namespace plasmode {

enum class NormKind { Frobenius, Spectral };

/// Linear shrinkage of the sample covariance toward mu*I with estimated
/// intensity rho. sigma = (1-rho)*sample_cov + rho*mu*I holds exactly.
struct ShrunkenCovariance {
    Eigen::MatrixXd sigma;
    double rho;      // shrinkage intensity in [0,1]
    double mu;       // mean of sample eigenvalues, trace(S)/p
    Eigen::MatrixXd sample_cov;
    bool clipped;    // true when the raw intensity exceeded 1 and was clipped
};

/// Scalar summaries of the shrinkage estimator, computable from the m x m
/// Gram matrix alone. They describe sigma without materializing it, which
/// matters when p is much larger than m.
struct LwScalars {
    double mu;
    double d2;        // squared normalized distance of S from mu*I
    double b2;        // estimated error of S (clipped at d2)
    double rho;       // b2/d2, or 1 when d2 == 0
    double trace_s;
    double trace_s2;  // trace(S^2) == squared Frobenius norm of S
    bool clipped;
};

/// Maximum-likelihood sample covariance (1/m) sum (x_i - xbar)(x_i - xbar)^T.
/// Requires at least two rows.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& X);

/// Shrinkage scalars per the optimal linear-shrinkage intensity estimate;
/// computed through the Gram matrix so cost is O(m^2 p), never O(p^2).
LwScalars ledoit_wolf_scalars(const Eigen::MatrixXd& X);

/// Full shrinkage estimator, materializing both p x p matrices. Writes a
/// warning to stderr when the intensity had to be clipped.
ShrunkenCovariance ledoit_wolf(const Eigen::MatrixXd& X);

/// frobenius: sqrt(sum of squared entries); spectral: largest absolute
/// eigenvalue. A must be symmetric and finite.
double matrix_l2_norm(const Eigen::MatrixXd& A, NormKind kind);

/// Norm of the shrunken covariance of X without materializing it. Equals
/// matrix_l2_norm(ledoit_wolf(X).sigma, kind) up to roundoff. When the
/// intensity was clipped and `clipped` is non-null, *clipped is set.
double shrunken_cov_norm(const Eigen::MatrixXd& X, NormKind kind,
                         bool* clipped = nullptr);

/// Norm of the plain sample covariance of X, same Gram-based route.
double sample_cov_norm(const Eigen::MatrixXd& X, NormKind kind);

}  // namespace plasmode
