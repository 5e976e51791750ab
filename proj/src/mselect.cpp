#include "plasmode/mselect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "plasmode/csv.hpp"
#include "plasmode/distance.hpp"
#include "plasmode/errors.hpp"
#include "plasmode/rng.hpp"

namespace plasmode {

std::string statistic_name(MStatistic s) {
    switch (s) {
        case MStatistic::LwCovNorm: return "lw_cov_norm";
        case MStatistic::SampleCovNorm: return "sample_cov_norm";
        case MStatistic::ColumnMeanNorm: return "column_mean_norm";
    }
    throw InvalidArgument("unreachable statistic value");
}

MStatistic parse_statistic(const std::string& name) {
    if (name == "lw_cov_norm") return MStatistic::LwCovNorm;
    if (name == "sample_cov_norm") return MStatistic::SampleCovNorm;
    if (name == "column_mean_norm") return MStatistic::ColumnMeanNorm;
    throw InvalidArgument("unknown statistic: '" + name +
                          "' (expected lw_cov_norm, sample_cov_norm or column_mean_norm)");
}

std::string distance_name(MDistance d) {
    switch (d) {
        case MDistance::Wasserstein1: return "wasserstein1";
        case MDistance::KolmogorovSmirnov: return "kolmogorov_smirnov";
    }
    throw InvalidArgument("unreachable distance value");
}

MDistance parse_distance(const std::string& name) {
    if (name == "wasserstein1") return MDistance::Wasserstein1;
    if (name == "kolmogorov_smirnov") return MDistance::KolmogorovSmirnov;
    throw InvalidArgument("unknown distance: '" + name +
                          "' (expected wasserstein1 or kolmogorov_smirnov)");
}

std::string norm_name(NormKind k) {
    return k == NormKind::Frobenius ? "frobenius" : "spectral";
}

NormKind parse_norm(const std::string& name) {
    if (name == "frobenius") return NormKind::Frobenius;
    if (name == "spectral") return NormKind::Spectral;
    throw InvalidArgument("unknown norm kind: '" + name + "' (expected frobenius or spectral)");
}

Eigen::Index default_m_floor(Eigen::Index n) {
    const auto one_percent = static_cast<Eigen::Index>(
        std::ceil(0.01 * static_cast<double>(n)));
    return std::max<Eigen::Index>(10, one_percent);
}

std::vector<Eigen::Index> m_sequence(Eigen::Index n, double q, Eigen::Index m_floor) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("q must lie in (0,1)");
    if (m_floor < 2) throw InvalidArgument("m_floor must be at least 2");
    if (m_floor > n)
        throw InvalidArgument("m_floor = " + std::to_string(m_floor) + " exceeds n = " +
                              std::to_string(n));

    std::vector<Eigen::Index> seq;
    for (int j = 0;; ++j) {
        const double raw = std::pow(q, j) * static_cast<double>(n);
        const auto m = static_cast<Eigen::Index>(std::ceil(raw));
        if (m < m_floor) break;
        if (seq.empty() || m < seq.back()) seq.push_back(m);
    }
    return seq;
}

std::vector<double> statistic_distribution(const Dataset& ds, Eigen::Index m, int B,
                                           MStatistic statistic, NormKind norm,
                                           std::uint64_t seed, Scheme scheme,
                                           long* clip_events) {
    if (scheme != Scheme::WithReplacement)
        throw InvalidArgument("statistic distributions are defined for with_replacement draws "
                              "only; got " + scheme_name(scheme));
    if (B < 2) throw InvalidArgument("B must be at least 2");
    if (m < 2) throw InvalidArgument("statistic needs m >= 2");

    const Eigen::Index n = ds.n();
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(B));
    Eigen::MatrixXd rows(m, ds.p());

    for (int j = 1; j <= B; ++j) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto src = static_cast<Eigen::Index>(
                rng.uniform_below(static_cast<std::uint64_t>(n)));
            rows.row(i) = ds.X.row(src);
        }
        double v = 0.0;
        switch (statistic) {
            case MStatistic::LwCovNorm: {
                bool clipped = false;
                v = shrunken_cov_norm(rows, norm, &clipped);
                if (clipped && clip_events) ++*clip_events;
                break;
            }
            case MStatistic::SampleCovNorm:
                v = sample_cov_norm(rows, norm);
                break;
            case MStatistic::ColumnMeanNorm:
                v = rows.colwise().mean().norm();
                break;
        }
        values.push_back(v);
    }
    std::sort(values.begin(), values.end());
    return values;
}

MSelectionResult select_m(const Dataset& ds, const MSelectionConfig& cfg) {
    if (cfg.B < 2) throw InvalidArgument("B must be at least 2");
    const Eigen::Index floor = cfg.m_floor > 0 ? cfg.m_floor : default_m_floor(ds.n());

    MSelectionResult result;
    result.candidates = m_sequence(ds.n(), cfg.q, floor);
    if (result.candidates.size() < 2)
        throw InvalidArgument("m selection needs at least two candidate sizes; got " +
                              std::to_string(result.candidates.size()) +
                              " (n too close to m_floor)");

    result.statistic_samples.reserve(result.candidates.size());
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        const std::uint64_t candidate_seed =
            derive_seed(cfg.seed, static_cast<std::uint64_t>(i + 1));
        result.statistic_samples.push_back(
            statistic_distribution(ds, result.candidates[i], cfg.B, cfg.statistic, cfg.norm,
                                   candidate_seed, Scheme::WithReplacement,
                                   &result.lw_clip_events));
    }

    result.distances.reserve(result.candidates.size() - 1);
    for (std::size_t j = 0; j + 1 < result.candidates.size(); ++j) {
        const auto& a = result.statistic_samples[j];
        const auto& b = result.statistic_samples[j + 1];
        result.distances.push_back(cfg.distance == MDistance::Wasserstein1 ? wasserstein1(a, b)
                                                                           : ks_distance(a, b));
    }

    // Scan from the largest m downward, keeping strictly better distances
    // only: ties resolve to the larger candidate, and the minimizing pair
    // (m_j, m_{j+1}) maps to its larger member m_j.
    std::size_t best = 0;
    for (std::size_t j = 1; j < result.distances.size(); ++j)
        if (result.distances[j] < result.distances[best]) best = j;
    result.m_star = result.candidates[best];
    return result;
}

void write_mselect_trace(const MSelectionResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "m,iteration,statistic_value\n";
    for (std::size_t i = 0; i < result.candidates.size(); ++i)
        for (std::size_t j = 0; j < result.statistic_samples[i].size(); ++j)
            out << result.candidates[i] << ',' << (j + 1) << ','
                << format_double(result.statistic_samples[i][j]) << '\n';
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

void write_mselect_summary(const MSelectionResult& result, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "m_lo,m_hi,distance\n";
    for (std::size_t j = 0; j < result.distances.size(); ++j)
        out << result.candidates[j + 1] << ',' << result.candidates[j] << ','
            << format_double(result.distances[j]) << '\n';
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace plasmode
