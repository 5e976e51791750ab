#include "plasmode/ogm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "plasmode/csv.hpp"
#include "plasmode/distance.hpp"
#include "plasmode/errors.hpp"
#include "plasmode/rng.hpp"

namespace plasmode {

using nlohmann::json;

std::string provenance_name(EffectProvenance p) {
    switch (p) {
        case EffectProvenance::EstimatedLasso: return "estimated_lasso";
        case EffectProvenance::EstimatedRidge: return "estimated_ridge";
        case EffectProvenance::Manual: return "manual";
        case EffectProvenance::Literature: return "literature";
    }
    throw InvalidArgument("unreachable provenance value");
}

EffectProvenance parse_provenance(const std::string& name) {
    if (name == "estimated_lasso") return EffectProvenance::EstimatedLasso;
    if (name == "estimated_ridge") return EffectProvenance::EstimatedRidge;
    if (name == "manual") return EffectProvenance::Manual;
    if (name == "literature") return EffectProvenance::Literature;
    throw InvalidArgument("unknown effect provenance: '" + name + "'");
}

std::string link_name(Link l) { return l == Link::Identity ? "identity" : "logit"; }

Link parse_link(const std::string& name) {
    if (name == "identity") return Link::Identity;
    if (name == "logit") return Link::Logit;
    throw InvalidArgument("unknown link: '" + name + "' (expected identity or logit)");
}

void EffectSpec::validate() const {
    if (static_cast<Eigen::Index>(column_names.size()) != beta.size())
        throw InvalidArgument("effect names and coefficients differ in length");
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
        throw InvalidArgument("noise_sd must be nonnegative and finite");
    if (!std::isfinite(mu) || !beta.allFinite())
        throw InvalidArgument("effects must be finite");
}

EffectSpec effects_from_lasso(const Dataset& train, const CvSpec& cv) {
    if (!train.y) throw InvalidArgument("outcome column required to estimate effects");
    const FitResult fit = fit_lasso_cv(train.X, *train.y, cv);
    EffectSpec spec;
    spec.mu = fit.mu_hat;
    spec.column_names = train.column_names;
    spec.beta = fit.beta_hat;
    spec.provenance = EffectProvenance::EstimatedLasso;
    return spec;
}

EffectSpec effects_from_ridge(const Dataset& train, const CvSpec& cv) {
    if (!train.y) throw InvalidArgument("outcome column required to estimate effects");
    const FitResult fit = fit_ridge_cv(train.X, *train.y, cv);
    EffectSpec spec;
    spec.mu = fit.mu_hat;
    spec.column_names = train.column_names;
    spec.beta = fit.beta_hat;
    spec.provenance = EffectProvenance::EstimatedRidge;
    return spec;
}

EffectSpec effects_manual(double mu, const std::vector<std::pair<std::string, double>>& entries,
                          const std::vector<std::string>& p_names) {
    EffectSpec spec;
    spec.mu = mu;
    spec.column_names = p_names;
    spec.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p_names.size()));
    spec.provenance = EffectProvenance::Manual;

    std::set<std::string> seen;
    for (const auto& [name, value] : entries) {
        if (!seen.insert(name).second)
            throw InvalidArgument("duplicate effect entry for column '" + name + "'");
        const auto it = std::find(p_names.begin(), p_names.end(), name);
        if (it == p_names.end())
            throw InvalidArgument("effect names an unknown column '" + name + "'");
        spec.beta(static_cast<Eigen::Index>(it - p_names.begin())) = value;
    }
    spec.validate();
    return spec;
}

SparsitySummary sparsity_summary(const EffectSpec& spec) {
    SparsitySummary s;
    s.total = static_cast<long>(spec.beta.size());
    std::vector<double> nonzero;
    for (Eigen::Index j = 0; j < spec.beta.size(); ++j)
        if (spec.beta(j) != 0.0) nonzero.push_back(spec.beta(j));
    s.nonzero = static_cast<long>(nonzero.size());
    s.proportion_nonzero =
        s.total > 0 ? static_cast<double>(s.nonzero) / static_cast<double>(s.total) : 0.0;
    if (!nonzero.empty()) {
        std::sort(nonzero.begin(), nonzero.end());
        const std::size_t h = nonzero.size() / 2;
        s.median_nonzero =
            nonzero.size() % 2 == 1 ? nonzero[h] : 0.5 * (nonzero[h - 1] + nonzero[h]);
        s.min_nonzero = nonzero.front();
        s.max_nonzero = nonzero.back();
    }
    return s;
}

namespace {

// Row-wise scalar accumulation. Deliberately not an Eigen matrix product:
// vectorized reductions may reassociate sums, and the containment guarantee
// (outcome of a copied row == predictor of the source row) needs identical
// rows to map to identical doubles.
double linear_predictor(const Eigen::MatrixXd& X, Eigen::Index i, const EffectSpec& spec) {
    double lp = spec.mu;
    for (Eigen::Index j = 0; j < X.cols(); ++j) lp += X(i, j) * spec.beta(j);
    return lp;
}

}  // namespace

Eigen::VectorXd generate_outcome(const Eigen::MatrixXd& X_rep, const EffectSpec& spec,
                                 std::uint64_t seed) {
    spec.validate();
    if (X_rep.cols() != spec.beta.size())
        throw DimensionMismatch("outcome generation: " + std::to_string(X_rep.cols()) +
                                " columns vs " + std::to_string(spec.beta.size()) + " effects");

    Eigen::VectorXd y(X_rep.rows());
    if (spec.link == Link::Identity) {
        for (Eigen::Index i = 0; i < X_rep.rows(); ++i)
            y(i) = linear_predictor(X_rep, i, spec);
        if (spec.noise_sd > 0.0) {
            Rng rng(seed);
            for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += spec.noise_sd * rng.normal();
        }
        return y;
    }
    Rng rng(seed);
    for (Eigen::Index i = 0; i < X_rep.rows(); ++i) {
        const double prob = 1.0 / (1.0 + std::exp(-linear_predictor(X_rep, i, spec)));
        y(i) = rng.uniform01() < prob ? 1.0 : 0.0;
    }
    return y;
}

std::pair<double, double> achievable_predictor_range(const Dataset& ds, const EffectSpec& spec) {
    spec.validate();
    if (ds.p() != spec.beta.size())
        throw DimensionMismatch("predictor range: dataset and effects disagree on p");
    if (ds.n() < 1) throw InvalidArgument("predictor range of an empty dataset");
    double lo = linear_predictor(ds.X, 0, spec);
    double hi = lo;
    for (Eigen::Index i = 1; i < ds.n(); ++i) {
        const double lp = linear_predictor(ds.X, i, spec);
        lo = std::min(lo, lp);
        hi = std::max(hi, lp);
    }
    return {lo, hi};
}

namespace {

QualitySummary summarize(const Eigen::VectorXd& v, const std::vector<double>& edges) {
    QualitySummary s;
    s.mean = v.mean();
    s.sd = std::sqrt((v.array() - s.mean).square().sum() / static_cast<double>(v.size()));
    s.min = v.minCoeff();
    s.max = v.maxCoeff();
    const std::size_t bins = edges.size() - 1;
    s.histogram.assign(bins, 0);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        // Last bin is closed on the right so the pooled maximum is counted.
        std::size_t b = bins - 1;
        for (std::size_t k = 0; k + 1 < bins; ++k) {
            if (v(i) < edges[k + 1]) {
                b = k;
                break;
            }
        }
        ++s.histogram[b];
    }
    return s;
}

double ks_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return ks_distance(std::vector<double>(a.data(), a.data() + a.size()),
                       std::vector<double>(b.data(), b.data() + b.size()));
}

double prevalence(const Eigen::VectorXd& v) {
    double ones = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) ones += (v(i) == 1.0);
    return ones / static_cast<double>(v.size());
}

}  // namespace

QualityReport quality_check(const Eigen::VectorXd& original_y,
                            const std::vector<Eigen::VectorXd>& plasmode_ys, int bins,
                            double ks_threshold) {
    if (original_y.size() < 1) throw InvalidArgument("quality check needs an original outcome");
    if (plasmode_ys.empty())
        throw InvalidArgument("quality check needs at least one plasmode outcome");
    if (bins < 1) throw InvalidArgument("quality check needs at least one bin");

    Eigen::Index pooled_n = 0;
    for (const auto& v : plasmode_ys) {
        if (v.size() < 1) throw InvalidArgument("empty plasmode outcome vector");
        pooled_n += v.size();
    }
    Eigen::VectorXd pooled(pooled_n);
    Eigen::Index at = 0;
    for (const auto& v : plasmode_ys) {
        pooled.segment(at, v.size()) = v;
        at += v.size();
    }

    QualityReport rep;
    rep.bins = bins;
    rep.ks_threshold = ks_threshold;

    double lo = std::min(original_y.minCoeff(), pooled.minCoeff());
    double hi = std::max(original_y.maxCoeff(), pooled.maxCoeff());
    if (lo == hi) hi = lo + 1.0;  // all values identical: one wide bin
    rep.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int k = 0; k <= bins; ++k)
        rep.bin_edges[static_cast<std::size_t>(k)] =
            lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);

    rep.original = summarize(original_y, rep.bin_edges);
    rep.original.ks_statistic = 0.0;
    rep.replicates.reserve(plasmode_ys.size());
    for (const auto& v : plasmode_ys) {
        QualitySummary s = summarize(v, rep.bin_edges);
        s.ks_statistic = ks_between(v, original_y);
        rep.replicates.push_back(std::move(s));
    }
    rep.pooled = summarize(pooled, rep.bin_edges);
    rep.pooled.ks_statistic = ks_between(pooled, original_y);

    bool binary = true;
    for (Eigen::Index i = 0; binary && i < original_y.size(); ++i)
        binary = original_y(i) == 0.0 || original_y(i) == 1.0;
    for (Eigen::Index i = 0; binary && i < pooled.size(); ++i)
        binary = pooled(i) == 0.0 || pooled(i) == 1.0;
    rep.binary = binary;
    if (binary) {
        rep.prevalence_original = prevalence(original_y);
        rep.prevalence_pooled = prevalence(pooled);
    }

    rep.range_within_original =
        rep.pooled.min >= rep.original.min && rep.pooled.max <= rep.original.max;
    rep.ks_below_threshold = rep.pooled.ks_statistic < ks_threshold;
    return rep;
}

namespace {

json summary_to_json(const QualitySummary& s, bool with_ks) {
    json j{{"mean", s.mean}, {"sd", s.sd}, {"min", s.min}, {"max", s.max},
           {"histogram", s.histogram}};
    if (with_ks) j["ks_statistic"] = s.ks_statistic;
    return j;
}

}  // namespace

json quality_to_json(const QualityReport& rep) {
    json j;
    j["bins"] = rep.bins;
    j["bin_edges"] = rep.bin_edges;
    j["original"] = summary_to_json(rep.original, false);
    j["replicates"] = json::array();
    for (std::size_t i = 0; i < rep.replicates.size(); ++i) {
        json r = summary_to_json(rep.replicates[i], true);
        r["index"] = i + 1;
        j["replicates"].push_back(std::move(r));
    }
    j["pooled"] = summary_to_json(rep.pooled, true);
    if (rep.binary) {
        j["prevalence"] = {{"original", rep.prevalence_original},
                           {"pooled", rep.prevalence_pooled}};
    }
    j["verdicts"] = {{"range_within_original", rep.range_within_original},
                     {"ks_below_threshold", rep.ks_below_threshold},
                     {"ks_threshold", rep.ks_threshold}};
    return j;
}

void write_effects(const EffectSpec& spec, const std::filesystem::path& csv_path,
                   const std::filesystem::path& sidecar_path) {
    spec.validate();
    std::ofstream csv(csv_path, std::ios::binary);
    if (!csv) throw IoError("cannot open for writing: " + csv_path.string());
    csv << "column_name,beta\n";
    for (Eigen::Index j = 0; j < spec.beta.size(); ++j)
        csv << spec.column_names[static_cast<std::size_t>(j)] << ','
            << format_double(spec.beta(j)) << '\n';
    if (!csv.flush()) throw IoError("write failed: " + csv_path.string());

    const json sidecar{{"mu", spec.mu},
                       {"noise_sd", spec.noise_sd},
                       {"link", link_name(spec.link)},
                       {"provenance", provenance_name(spec.provenance)}};
    std::ofstream side(sidecar_path, std::ios::binary);
    if (!side) throw IoError("cannot open for writing: " + sidecar_path.string());
    side << sidecar.dump(2) << '\n';
    if (!side.flush()) throw IoError("write failed: " + sidecar_path.string());
}

EffectSpec read_effects(const std::filesystem::path& csv_path,
                        const std::filesystem::path& sidecar_path) {
    const CsvTable table = read_csv_table(csv_path);
    if (table.header != std::vector<std::string>{"column_name", "beta"})
        throw InvalidArgument("unexpected effects CSV header in " + csv_path.string());

    EffectSpec spec;
    spec.beta.resize(static_cast<Eigen::Index>(table.rows.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != 2)
            throw ParseError(i + 2, 1, "expected 2 fields in effects CSV");
        spec.column_names.push_back(table.rows[i][0]);
        try {
            spec.beta(static_cast<Eigen::Index>(i)) = std::stod(table.rows[i][1]);
        } catch (const std::exception&) {
            throw ParseError(i + 2, 2, "not a number: '" + table.rows[i][1] + "'");
        }
    }

    std::ifstream side(sidecar_path, std::ios::binary);
    if (!side) throw IoError("cannot open file: " + sidecar_path.string());
    json j;
    try {
        side >> j;
    } catch (const json::exception& e) {
        throw InvalidArgument("invalid effects sidecar " + sidecar_path.string() + ": " +
                              e.what());
    }
    spec.mu = j.at("mu").get<double>();
    spec.noise_sd = j.at("noise_sd").get<double>();
    spec.link = parse_link(j.at("link").get<std::string>());
    spec.provenance = parse_provenance(j.at("provenance").get<std::string>());
    spec.validate();
    return spec;
}

}  // namespace plasmode
