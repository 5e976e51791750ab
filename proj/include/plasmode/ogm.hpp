#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "plasmode/dataset.hpp"
#include "plasmode/regress.hpp"

namespace plasmode {

enum class EffectProvenance { EstimatedLasso, EstimatedRidge, Manual, Literature };
enum class Link { Identity, Logit };

std::string provenance_name(EffectProvenance p);
EffectProvenance parse_provenance(const std::string& name);
std::string link_name(Link l);
Link parse_link(const std::string& name);

/// The investigator-chosen truth: intercept and per-column effects, with an
/// optional additive Gaussian noise level (0 keeps the outcome a
/// deterministic linear predictor) and the outcome link.
struct EffectSpec {
    double mu = 0.0;
    std::vector<std::string> column_names;  // aligned with beta
    Eigen::VectorXd beta;
    EffectProvenance provenance = EffectProvenance::Manual;
    double noise_sd = 0.0;
    Link link = Link::Identity;

    void validate() const;
};

struct SparsitySummary {
    long nonzero = 0;
    long total = 0;
    double proportion_nonzero = 0.0;
    double median_nonzero = 0.0;  // median over nonzero effects; 0 when none
    double min_nonzero = 0.0;
    double max_nonzero = 0.0;
};

/// Summary statistics of one outcome sample against shared bin edges.
struct QualitySummary {
    double mean = 0.0;
    double sd = 0.0;  // maximum-likelihood denominator
    double min = 0.0;
    double max = 0.0;
    std::vector<long> histogram;
    double ks_statistic = 0.0;  // against the original outcome
};

struct QualityReport {
    int bins = 0;
    std::vector<double> bin_edges;  // shared, from the pooled range
    QualitySummary original;
    std::vector<QualitySummary> replicates;
    QualitySummary pooled;
    bool binary = false;  // all values in {0,1}; prevalences reported then
    double prevalence_original = 0.0;
    double prevalence_pooled = 0.0;
    double ks_threshold = 0.2;
    bool range_within_original = false;
    bool ks_below_threshold = false;
};

/// Fits the lasso with cross-validation on the training data and freezes
/// its coefficients as the truth (identity link, no noise).
EffectSpec effects_from_lasso(const Dataset& train, const CvSpec& cv);

/// Same with cross-validated ridge; gives a dense truth.
EffectSpec effects_from_ridge(const Dataset& train, const CvSpec& cv);

/// Hand-specified effects: named entries, all other columns zero. Unknown
/// or duplicated names are rejected.
EffectSpec effects_manual(double mu, const std::vector<std::pair<std::string, double>>& entries,
                          const std::vector<std::string>& p_names);

SparsitySummary sparsity_summary(const EffectSpec& spec);

/// Artificial outcomes for one replicate. Identity link: mu + x_i'beta plus
/// noise_sd * z_i (seeded; the noise term is skipped entirely at noise_sd =
/// 0). Logit link: Bernoulli draws at logistic(mu + x_i'beta). The linear
/// predictor is accumulated row by row in column order, so identical rows
/// always produce identical outcome values, bit for bit.
Eigen::VectorXd generate_outcome(const Eigen::MatrixXd& X_rep, const EffectSpec& spec,
                                 std::uint64_t seed);

/// Smallest and largest linear predictor over the rows of ds, accumulated
/// exactly like generate_outcome. Every noiseless identity-link outcome on
/// resampled rows lies inside this interval.
std::pair<double, double> achievable_predictor_range(const Dataset& ds, const EffectSpec& spec);

/// Compares artificial outcomes against the original outcome: shared-bin
/// histograms over the pooled range, per-replicate and pooled summaries,
/// KS statistics, and the recorded verdicts.
QualityReport quality_check(const Eigen::VectorXd& original_y,
                            const std::vector<Eigen::VectorXd>& plasmode_ys, int bins = 15,
                            double ks_threshold = 0.2);

nlohmann::json quality_to_json(const QualityReport& report);

/// effects.csv holds column_name,beta rows for the full vector; the JSON
/// sidecar holds {mu, noise_sd, link, provenance}. Values round-trip
/// bit-exactly.
void write_effects(const EffectSpec& spec, const std::filesystem::path& csv_path,
                   const std::filesystem::path& sidecar_path);
EffectSpec read_effects(const std::filesystem::path& csv_path,
                        const std::filesystem::path& sidecar_path);

}  // namespace plasmode
