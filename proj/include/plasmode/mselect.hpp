#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "plasmode/covshrink.hpp"
#include "plasmode/dataset.hpp"
#include "plasmode/resampler.hpp"

namespace plasmode {

enum class MStatistic { LwCovNorm, SampleCovNorm, ColumnMeanNorm };
enum class MDistance { Wasserstein1, KolmogorovSmirnov };

std::string statistic_name(MStatistic s);
MStatistic parse_statistic(const std::string& name);
std::string distance_name(MDistance d);
MDistance parse_distance(const std::string& name);
std::string norm_name(NormKind k);
NormKind parse_norm(const std::string& name);

/// Configuration of the adaptive resampling-size rule: bootstrap a scalar
/// statistic at geometrically decaying candidate sizes and pick the size at
/// which adjacent candidates' statistic distributions are closest.
struct MSelectionConfig {
    double q = 0.97;      // decay of candidate sizes, in (0,1)
    int B = 100;          // statistic draws per candidate
    MStatistic statistic = MStatistic::LwCovNorm;
    MDistance distance = MDistance::Wasserstein1;
    Eigen::Index m_floor = 0;  // 0 means the default max(10, ceil(0.01 n))
    std::uint64_t seed = 0;
    NormKind norm = NormKind::Frobenius;
};

struct MSelectionResult {
    Eigen::Index m_star = 0;
    std::vector<Eigen::Index> candidates;              // strictly decreasing, first = n
    std::vector<double> distances;                     // length = candidates - 1
    std::vector<std::vector<double>> statistic_samples;  // per candidate, sorted, length B
    long lw_clip_events = 0;  // shrinkage-intensity clips seen across all draws
};

Eigen::Index default_m_floor(Eigen::Index n);

/// Candidate sizes m_j = ceil(q^j * n), consecutive duplicates removed,
/// truncated at the last value >= m_floor. Strictly decreasing, first = n.
std::vector<Eigen::Index> m_sequence(Eigen::Index n, double q, Eigen::Index m_floor);

/// Bootstrap distribution of the statistic at size m: B replicates of m
/// rows drawn with replacement (iteration j seeded with derive_seed(seed,
/// j)), the statistic applied to each replicate's covariates. Returns the B
/// values sorted ascending. Only WithReplacement draws make sense here;
/// any other scheme is rejected.
std::vector<double> statistic_distribution(const Dataset& ds, Eigen::Index m, int B,
                                           MStatistic statistic, NormKind norm,
                                           std::uint64_t seed,
                                           Scheme scheme = Scheme::WithReplacement,
                                           long* clip_events = nullptr);

/// Full selection: distributions for every candidate (candidate i seeded
/// with derive_seed(cfg.seed, i+1)), adjacent distances, and the minimizing
/// size. Ties break toward the larger m; a minimizing pair (m_j, m_{j+1})
/// yields m_j. Requires at least two candidates.
MSelectionResult select_m(const Dataset& ds, const MSelectionConfig& cfg);

/// Writes columns m, iteration, statistic_value (iteration indexes the
/// sorted draws 1..B).
void write_mselect_trace(const MSelectionResult& result, const std::filesystem::path& path);

/// Writes columns m_lo, m_hi, distance for each adjacent candidate pair.
void write_mselect_summary(const MSelectionResult& result, const std::filesystem::path& path);

}  // namespace plasmode
