#include "plasmode/covshrink.hpp"

#include <cmath>
#include <iostream>

#include "plasmode/errors.hpp"

namespace plasmode {

namespace {

void require_rows(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) throw InvalidArgument("covariance needs at least 2 rows");
    if (X.cols() < 1) throw InvalidArgument("covariance needs at least 1 column");
    if (!X.allFinite()) throw NumericError("covariance input contains non-finite values");
}

// Largest eigenvalue of the centered Gram matrix, divided by m. For a
// positive semidefinite S this equals its largest eigenvalue because
// Xc^T Xc and Xc Xc^T share their nonzero spectrum.
double lambda_max_via_gram(const Eigen::MatrixXd& Xc) {
    const double m = static_cast<double>(Xc.rows());
    const Eigen::MatrixXd G = Xc * Xc.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("Gram eigendecomposition failed");
    return std::max(0.0, es.eigenvalues().maxCoeff()) / m;
}

}  // namespace

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& X) {
    require_rows(X);
    const double m = static_cast<double>(X.rows());
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mean;
    return (Xc.transpose() * Xc) / m;
}

LwScalars ledoit_wolf_scalars(const Eigen::MatrixXd& X) {
    require_rows(X);
    const double m = static_cast<double>(X.rows());
    const double p = static_cast<double>(X.cols());
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mean;

    // All scalars derive from the m x m Gram matrix G = Xc Xc^T:
    //   trace(S)   = trace(G)/m
    //   trace(S^2) = ||G||_F^2 / m^2
    const Eigen::MatrixXd G = Xc * Xc.transpose();
    const double trace_s = G.trace() / m;
    const double trace_s2 = G.squaredNorm() / (m * m);

    LwScalars s;
    s.trace_s = trace_s;
    s.trace_s2 = trace_s2;
    s.mu = trace_s / p;
    s.d2 = trace_s2 / p - s.mu * s.mu;

    // Average squared distance of the per-row outer products from S, using
    // sum_k ||x_k x_k^T - S||_F^2 = sum_k ||x_k||^4 - m*trace(S^2).
    double sum4 = 0.0;
    for (Eigen::Index k = 0; k < Xc.rows(); ++k) {
        const double nk = G(k, k);  // ||x_k||^2
        sum4 += nk * nk;
    }
    const double b2_raw = sum4 / (m * m * p) - trace_s2 / (m * p);

    s.clipped = b2_raw > s.d2;
    s.b2 = std::min(std::max(b2_raw, 0.0), std::max(s.d2, 0.0));
    s.rho = s.d2 > 0.0 ? s.b2 / s.d2 : 1.0;
    return s;
}

ShrunkenCovariance ledoit_wolf(const Eigen::MatrixXd& X) {
    const LwScalars s = ledoit_wolf_scalars(X);
    if (s.clipped)
        std::cerr << "ledoit_wolf: shrinkage intensity clipped to 1 "
                     "(estimation error exceeds dispersion; data nearly degenerate)\n";
    ShrunkenCovariance out;
    out.sample_cov = sample_covariance(X);
    out.mu = s.mu;
    out.rho = s.rho;
    out.clipped = s.clipped;
    out.sigma = (1.0 - s.rho) * out.sample_cov;
    out.sigma.diagonal().array() += s.rho * s.mu;
    return out;
}

double matrix_l2_norm(const Eigen::MatrixXd& A, NormKind kind) {
    if (A.rows() != A.cols()) throw InvalidArgument("matrix norm expects a square matrix");
    if (!A.allFinite()) throw NumericError("matrix norm of non-finite matrix");
    if (kind == NormKind::Frobenius) return A.norm();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed in matrix norm");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double shrunken_cov_norm(const Eigen::MatrixXd& X, NormKind kind, bool* clipped) {
    const LwScalars s = ledoit_wolf_scalars(X);
    if (clipped) *clipped = s.clipped;
    const double p = static_cast<double>(X.cols());
    const double a = 1.0 - s.rho;
    if (kind == NormKind::Frobenius) {
        // ||sigma||_F^2 = a^2 trace(S^2) + 2 a rho mu trace(S) + rho^2 mu^2 p
        const double sq = a * a * s.trace_s2 + 2.0 * a * s.rho * s.mu * s.trace_s +
                          s.rho * s.rho * s.mu * s.mu * p;
        return std::sqrt(std::max(sq, 0.0));
    }
    // S is PSD, so sigma's extreme eigenvalue is a*lambda_max(S) + rho*mu.
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mean;
    return a * lambda_max_via_gram(Xc) + s.rho * s.mu;
}

double sample_cov_norm(const Eigen::MatrixXd& X, NormKind kind) {
    require_rows(X);
    const double m = static_cast<double>(X.rows());
    const Eigen::RowVectorXd mean = X.colwise().mean();
    const Eigen::MatrixXd Xc = X.rowwise() - mean;
    if (kind == NormKind::Frobenius) {
        // ||S||_F = ||G||_F / m
        return (Xc * Xc.transpose()).norm() / m;
    }
    return lambda_max_via_gram(Xc);
}

}  // namespace plasmode
