#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "plasmode/dataset.hpp"
#include "plasmode/metrics.hpp"
#include "plasmode/mselect.hpp"
#include "plasmode/ogm.hpp"
#include "plasmode/regress.hpp"
#include "plasmode/resampler.hpp"

namespace plasmode {

// Where the outcome-model effects come from.
enum class OgmSource { Lasso, Ridge, Manual, File };

std::string ogm_source_name(OgmSource source);
OgmSource parse_ogm_source(const std::string& name);

struct SplitConfig {
    // train:test ratio, e.g. {2, 1} keeps two thirds for training.
    std::pair<int, int> ratio{2, 1};
    std::uint64_t seed = 1;
};

// Optional random covariate subset (applied before splitting).
struct ColumnsConfig {
    Eigen::Index k = 0;
    std::uint64_t seed = 2;
};

struct ResamplingConfig {
    Scheme scheme = Scheme::WithReplacement;
    // Empty means "auto": run m-selection on the training split.
    std::optional<Eigen::Index> m;
    int N = 100;
    std::uint64_t master_seed = 0;
};

struct OgmConfig {
    OgmSource source = OgmSource::Manual;
    double mu = 0.0;
    // Pairs rather than a map so duplicate names can be rejected loudly.
    std::vector<std::pair<std::string, double>> effects;
    double noise_sd = 0.0;
    Link link = Link::Identity;
    // Only used when source == File.
    std::filesystem::path effects_csv;
    std::filesystem::path effects_sidecar;
};

struct CvConfig {
    int folds = 10;
    std::uint64_t seed = 3;
    int grid_size = 100;
    double grid_min_ratio = 1e-4;
};

struct ConvergenceConfig {
    int window = 50;
    double tol = 0.005;
};

struct QualityConfig {
    int bins = 15;
    double ks_threshold = 0.2;
};

struct PipelineConfig {
    std::filesystem::path input;
    std::string outcome;
    bool first_column_is_id = false;
    SplitConfig split;
    std::optional<ColumnsConfig> columns;
    ResamplingConfig resampling;
    MSelectionConfig mselect;
    OgmConfig ogm;
    CvConfig cv;
    std::vector<std::string> models{"ridge_cv", "lmm_reml"};
    ConvergenceConfig convergence;
    QualityConfig quality;
    std::filesystem::path output = "out";
    bool persist_plasmodes = false;
    int threads = 1;

    void validate() const;
};

// Throws InvalidArgument on unknown keys, wrong types, or unsupported
// requests (e.g. cluster_column).
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

// Echo of the effective configuration for the manifest.
nlohmann::json config_to_json(const PipelineConfig& cfg);

// Everything the evaluation pass needs from the generation pass.
struct StageData {
    Dataset train;
    Dataset test;
    Eigen::Index m_used = 0;
    std::optional<MSelectionResult> mselect_result;
    EffectSpec effects;
    Eigen::VectorXd y_test;
};

// Load + column subset + split, shared by every subcommand.
SplitResult prepare_split(const PipelineConfig& cfg);

// Runs ingestion, optional m-selection, effect construction, and the frozen
// test outcome.  When persist_replicates is set the replicate covariate files
// and index files are written under <output>/plasmodes and <output>/indices.
// Writes effects.csv (+ sidecar), mselect outputs when m is auto, and the
// manifest.
StageData generate_stage(const PipelineConfig& cfg, bool persist_replicates);

// Reconstructs StageData for a detached evaluate run: recomputes the split,
// reads effects and m from the output directory, regenerates the frozen test
// outcome.
StageData resume_stage(const PipelineConfig& cfg);

enum class ReplicateOrigin { Memory, Disk };

// Fits every configured model on every replicate, writes metrics.csv,
// convergence.csv, quality.json, updates the manifest, and renders the
// report.  Memory origin re-draws replicates from the resampling plan; Disk
// origin reads <output>/plasmodes/b_XXXX.csv.
void evaluate_stage(const PipelineConfig& cfg, const StageData& data,
                    ReplicateOrigin origin);

// Renders report/*.svg purely from metrics.csv, convergence.csv, and
// quality.json inside the output directory.
void report_stage(const std::filesystem::path& output_dir);

// generate_stage + evaluate_stage(Memory).
void run_pipeline(const PipelineConfig& cfg);

// Summary of an input file for the ingest subcommand: row/column counts and
// basic outcome stats, as JSON text.
std::string ingest_summary(const PipelineConfig& cfg);

}  // namespace plasmode
