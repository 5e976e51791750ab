#include "plasmode/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "plasmode/csv.hpp"
#include "plasmode/errors.hpp"
#include "plasmode/rng.hpp"
#include "plasmode/svg.hpp"
#include "plasmode/version.hpp"

namespace plasmode {

namespace fs = std::filesystem;
using nlohmann::json;

std::string ogm_source_name(OgmSource source) {
    switch (source) {
        case OgmSource::Lasso: return "lasso";
        case OgmSource::Ridge: return "ridge";
        case OgmSource::Manual: return "manual";
        case OgmSource::File: return "file";
    }
    throw InvalidArgument("unknown effect source");
}

OgmSource parse_ogm_source(const std::string& name) {
    if (name == "lasso") return OgmSource::Lasso;
    if (name == "ridge") return OgmSource::Ridge;
    if (name == "manual") return OgmSource::Manual;
    if (name == "file") return OgmSource::File;
    throw InvalidArgument("unknown effect source: '" + name +
                          "' (expected lasso, ridge, manual, or file)");
}

namespace {

bool is_known_model(const std::string& name) {
    return name == "ridge_cv" || name == "lmm_reml" || name == "lasso_cv";
}

CvSpec cv_spec(const PipelineConfig& cfg) {
    CvSpec spec;
    spec.folds = cfg.cv.folds;
    spec.seed = cfg.cv.seed;
    spec.grid_size = cfg.cv.grid_size;
    spec.grid_min_ratio = cfg.cv.grid_min_ratio;
    return spec;
}

FitResult fit_model(const std::string& name, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    const CvSpec& cv) {
    if (name == "ridge_cv") return fit_ridge_cv(X, y, cv);
    if (name == "lmm_reml") return fit_lmm_reml(X, y);
    if (name == "lasso_cv") return fit_lasso_cv(X, y, cv);
    throw InvalidArgument("unknown model: '" + name + "'");
}

std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string replicate_stem(int b) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "b_%04d", b);
    return buf;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out.flush()) throw IoError("write failed: " + path.string());
}

// Index files hold 1-based source row numbers, one per line.
void write_index_file(const fs::path& path, const std::vector<Eigen::Index>& indices) {
    std::ostringstream out;
    for (Eigen::Index i : indices) out << (i + 1) << '\n';
    write_text_file(path, out.str());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidArgument("invalid JSON in " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Config parsing

void expect_keys(const json& j, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InvalidArgument(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw InvalidArgument("unknown key '" + it.key() + "' in " + where);
    }
}

std::string get_string(const json& j, const std::string& where) {
    if (!j.is_string()) throw InvalidArgument(where + " must be a string");
    return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& where) {
    if (!j.is_boolean()) throw InvalidArgument(where + " must be a boolean");
    return j.get<bool>();
}

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw InvalidArgument(where + " must be a number");
    return j.get<double>();
}

long long get_integer(const json& j, const std::string& where) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw InvalidArgument(where + " must be an integer");
    return j.get<long long>();
}

std::uint64_t get_seed(const json& j, const std::string& where) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
        const long long v = j.get<long long>();
        if (v < 0) throw InvalidArgument(where + " must be a nonnegative integer");
        return static_cast<std::uint64_t>(v);
    }
    throw InvalidArgument(where + " must be a nonnegative integer");
}

SplitConfig parse_split(const json& j) {
    SplitConfig out;
    expect_keys(j, "split", {"ratio", "seed"});
    if (j.contains("ratio")) {
        const json& r = j.at("ratio");
        if (!r.is_array() || r.size() != 2)
            throw InvalidArgument("split.ratio must be a two-element array [train, test]");
        out.ratio.first = static_cast<int>(get_integer(r[0], "split.ratio[0]"));
        out.ratio.second = static_cast<int>(get_integer(r[1], "split.ratio[1]"));
    }
    if (j.contains("seed")) out.seed = get_seed(j.at("seed"), "split.seed");
    return out;
}

ColumnsConfig parse_columns(const json& j) {
    ColumnsConfig out;
    expect_keys(j, "columns", {"k", "seed"});
    out.k = static_cast<Eigen::Index>(get_integer(j.at("k"), "columns.k"));
    if (j.contains("seed")) out.seed = get_seed(j.at("seed"), "columns.seed");
    return out;
}

ResamplingConfig parse_resampling(const json& j) {
    ResamplingConfig out;
    expect_keys(j, "resampling", {"scheme", "m", "N", "master_seed"});
    if (j.contains("scheme")) out.scheme = parse_scheme(get_string(j.at("scheme"), "resampling.scheme"));
    if (j.contains("m")) {
        const json& m = j.at("m");
        if (m.is_string()) {
            if (m.get<std::string>() != "auto")
                throw InvalidArgument("resampling.m must be a positive integer or \"auto\"");
        } else {
            out.m = static_cast<Eigen::Index>(get_integer(m, "resampling.m"));
        }
    }
    if (j.contains("N")) out.N = static_cast<int>(get_integer(j.at("N"), "resampling.N"));
    if (j.contains("master_seed")) out.master_seed = get_seed(j.at("master_seed"), "resampling.master_seed");
    return out;
}

MSelectionConfig parse_mselect(const json& j) {
    MSelectionConfig out;
    expect_keys(j, "mselect", {"q", "B", "statistic", "distance", "m_floor", "seed", "norm"});
    if (j.contains("q")) out.q = get_number(j.at("q"), "mselect.q");
    if (j.contains("B")) out.B = static_cast<int>(get_integer(j.at("B"), "mselect.B"));
    if (j.contains("statistic"))
        out.statistic = parse_statistic(get_string(j.at("statistic"), "mselect.statistic"));
    if (j.contains("distance"))
        out.distance = parse_distance(get_string(j.at("distance"), "mselect.distance"));
    if (j.contains("m_floor"))
        out.m_floor = static_cast<Eigen::Index>(get_integer(j.at("m_floor"), "mselect.m_floor"));
    if (j.contains("seed")) out.seed = get_seed(j.at("seed"), "mselect.seed");
    if (j.contains("norm")) out.norm = parse_norm(get_string(j.at("norm"), "mselect.norm"));
    return out;
}

OgmConfig parse_ogm(const json& j) {
    OgmConfig out;
    expect_keys(j, "ogm",
                {"source", "mu", "effects", "noise_sd", "link", "effects_csv", "effects_sidecar"});
    if (j.contains("source")) out.source = parse_ogm_source(get_string(j.at("source"), "ogm.source"));
    if (j.contains("mu")) out.mu = get_number(j.at("mu"), "ogm.mu");
    if (j.contains("effects")) {
        const json& e = j.at("effects");
        if (!e.is_array()) throw InvalidArgument("ogm.effects must be an array of [name, value] pairs");
        for (std::size_t i = 0; i < e.size(); ++i) {
            const json& entry = e[i];
            const std::string where = "ogm.effects[" + std::to_string(i) + "]";
            if (!entry.is_array() || entry.size() != 2)
                throw InvalidArgument(where + " must be a [name, value] pair");
            out.effects.emplace_back(get_string(entry[0], where + "[0]"),
                                     get_number(entry[1], where + "[1]"));
        }
    }
    if (j.contains("noise_sd")) out.noise_sd = get_number(j.at("noise_sd"), "ogm.noise_sd");
    if (j.contains("link")) out.link = parse_link(get_string(j.at("link"), "ogm.link"));
    if (j.contains("effects_csv")) out.effects_csv = get_string(j.at("effects_csv"), "ogm.effects_csv");
    if (j.contains("effects_sidecar"))
        out.effects_sidecar = get_string(j.at("effects_sidecar"), "ogm.effects_sidecar");

    if (out.source != OgmSource::Manual && !out.effects.empty())
        throw InvalidArgument("ogm.effects is only valid with ogm.source = \"manual\"");
    if (out.source != OgmSource::File && (!out.effects_csv.empty() || !out.effects_sidecar.empty()))
        throw InvalidArgument("ogm.effects_csv/effects_sidecar are only valid with ogm.source = \"file\"");
    return out;
}

CvConfig parse_cv(const json& j) {
    CvConfig out;
    expect_keys(j, "cv", {"folds", "seed", "grid_size", "grid_min_ratio"});
    if (j.contains("folds")) out.folds = static_cast<int>(get_integer(j.at("folds"), "cv.folds"));
    if (j.contains("seed")) out.seed = get_seed(j.at("seed"), "cv.seed");
    if (j.contains("grid_size"))
        out.grid_size = static_cast<int>(get_integer(j.at("grid_size"), "cv.grid_size"));
    if (j.contains("grid_min_ratio"))
        out.grid_min_ratio = get_number(j.at("grid_min_ratio"), "cv.grid_min_ratio");
    return out;
}

ConvergenceConfig parse_convergence(const json& j) {
    ConvergenceConfig out;
    expect_keys(j, "convergence", {"window", "tol"});
    if (j.contains("window"))
        out.window = static_cast<int>(get_integer(j.at("window"), "convergence.window"));
    if (j.contains("tol")) out.tol = get_number(j.at("tol"), "convergence.tol");
    return out;
}

QualityConfig parse_quality(const json& j) {
    QualityConfig out;
    expect_keys(j, "quality", {"bins", "ks_threshold"});
    if (j.contains("bins")) out.bins = static_cast<int>(get_integer(j.at("bins"), "quality.bins"));
    if (j.contains("ks_threshold"))
        out.ks_threshold = get_number(j.at("ks_threshold"), "quality.ks_threshold");
    return out;
}

}  // namespace

void PipelineConfig::validate() const {
    if (input.empty()) throw InvalidArgument("input path must not be empty");
    if (outcome.empty()) throw InvalidArgument("outcome column name must not be empty");
    if (split.ratio.first < 1 || split.ratio.second < 1)
        throw InvalidArgument("split.ratio parts must both be at least 1");
    if (columns && columns->k < 1) throw InvalidArgument("columns.k must be at least 1");
    if (resampling.N < 1) throw InvalidArgument("resampling.N must be at least 1");
    if (resampling.m && *resampling.m < 1)
        throw InvalidArgument("resampling.m must be at least 1");
    if (!(mselect.q > 0.0 && mselect.q < 1.0))
        throw InvalidArgument("mselect.q must lie strictly between 0 and 1");
    if (mselect.B < 2) throw InvalidArgument("mselect.B must be at least 2");
    if (mselect.m_floor < 0) throw InvalidArgument("mselect.m_floor must be nonnegative");
    if (ogm.noise_sd < 0.0) throw InvalidArgument("ogm.noise_sd must be nonnegative");
    if (ogm.source == OgmSource::File && (ogm.effects_csv.empty() || ogm.effects_sidecar.empty()))
        throw InvalidArgument("ogm.source = \"file\" requires effects_csv and effects_sidecar");
    if (cv.folds < 2) throw InvalidArgument("cv.folds must be at least 2");
    if (cv.grid_size < 1) throw InvalidArgument("cv.grid_size must be at least 1");
    if (!(cv.grid_min_ratio > 0.0 && cv.grid_min_ratio <= 1.0))
        throw InvalidArgument("cv.grid_min_ratio must lie in (0, 1]");
    if (models.empty()) throw InvalidArgument("models must not be empty");
    std::set<std::string> seen;
    for (const std::string& m : models) {
        if (!is_known_model(m))
            throw InvalidArgument("unknown model '" + m +
                                  "' (expected ridge_cv, lmm_reml, or lasso_cv)");
        if (!seen.insert(m).second) throw InvalidArgument("duplicate model '" + m + "'");
    }
    if (convergence.window < 2) throw InvalidArgument("convergence.window must be at least 2");
    if (!(convergence.tol > 0.0)) throw InvalidArgument("convergence.tol must be positive");
    if (quality.bins < 1) throw InvalidArgument("quality.bins must be at least 1");
    if (!(quality.ks_threshold > 0.0)) throw InvalidArgument("quality.ks_threshold must be positive");
    if (output.empty()) throw InvalidArgument("output path must not be empty");
    if (threads < 1) throw InvalidArgument("threads must be at least 1");
}

PipelineConfig parse_config(const json& j) {
    expect_keys(j, "config",
                {"input", "outcome", "first_column_is_id", "split", "columns", "resampling",
                 "mselect", "ogm", "cv", "models", "convergence", "quality", "output",
                 "persist_plasmodes", "threads", "cluster_column"});
    if (j.contains("cluster_column"))
        throw InvalidArgument(
            "cluster_column is not supported: rows are resampled independently; "
            "grouped or clustered resampling is out of scope");

    PipelineConfig cfg;
    if (!j.contains("input")) throw InvalidArgument("missing required key 'input' in config");
    cfg.input = get_string(j.at("input"), "input");
    if (!j.contains("outcome")) throw InvalidArgument("missing required key 'outcome' in config");
    cfg.outcome = get_string(j.at("outcome"), "outcome");
    if (j.contains("first_column_is_id"))
        cfg.first_column_is_id = get_bool(j.at("first_column_is_id"), "first_column_is_id");
    if (j.contains("split")) cfg.split = parse_split(j.at("split"));
    if (j.contains("columns") && !j.at("columns").is_null())
        cfg.columns = parse_columns(j.at("columns"));
    if (j.contains("resampling")) cfg.resampling = parse_resampling(j.at("resampling"));
    if (j.contains("mselect")) cfg.mselect = parse_mselect(j.at("mselect"));
    if (j.contains("ogm")) cfg.ogm = parse_ogm(j.at("ogm"));
    if (j.contains("cv")) cfg.cv = parse_cv(j.at("cv"));
    if (j.contains("models")) {
        const json& m = j.at("models");
        if (!m.is_array() || m.empty())
            throw InvalidArgument("models must be a nonempty array of model names");
        cfg.models.clear();
        for (std::size_t i = 0; i < m.size(); ++i)
            cfg.models.push_back(get_string(m[i], "models[" + std::to_string(i) + "]"));
    }
    if (j.contains("convergence")) cfg.convergence = parse_convergence(j.at("convergence"));
    if (j.contains("quality")) cfg.quality = parse_quality(j.at("quality"));
    if (j.contains("output")) cfg.output = get_string(j.at("output"), "output");
    if (j.contains("persist_plasmodes"))
        cfg.persist_plasmodes = get_bool(j.at("persist_plasmodes"), "persist_plasmodes");
    if (j.contains("threads")) cfg.threads = static_cast<int>(get_integer(j.at("threads"), "threads"));

    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("config file not found: " + path.string());
    return parse_config(read_json_file(path));
}

json config_to_json(const PipelineConfig& cfg) {
    json j;
    j["input"] = cfg.input.string();
    j["outcome"] = cfg.outcome;
    j["first_column_is_id"] = cfg.first_column_is_id;
    j["split"] = {{"ratio", {cfg.split.ratio.first, cfg.split.ratio.second}},
                  {"seed", cfg.split.seed}};
    if (cfg.columns)
        j["columns"] = {{"k", cfg.columns->k}, {"seed", cfg.columns->seed}};
    else
        j["columns"] = nullptr;
    json m = cfg.resampling.m ? json(*cfg.resampling.m) : json("auto");
    j["resampling"] = {{"scheme", scheme_name(cfg.resampling.scheme)},
                       {"m", std::move(m)},
                       {"N", cfg.resampling.N},
                       {"master_seed", cfg.resampling.master_seed}};
    j["mselect"] = {{"q", cfg.mselect.q},
                    {"B", cfg.mselect.B},
                    {"statistic", statistic_name(cfg.mselect.statistic)},
                    {"distance", distance_name(cfg.mselect.distance)},
                    {"m_floor", cfg.mselect.m_floor},
                    {"seed", cfg.mselect.seed},
                    {"norm", norm_name(cfg.mselect.norm)}};
    json effects = json::array();
    for (const auto& [name, value] : cfg.ogm.effects) effects.push_back({name, value});
    j["ogm"] = {{"source", ogm_source_name(cfg.ogm.source)},
                {"mu", cfg.ogm.mu},
                {"effects", std::move(effects)},
                {"noise_sd", cfg.ogm.noise_sd},
                {"link", link_name(cfg.ogm.link)},
                {"effects_csv", cfg.ogm.effects_csv.string()},
                {"effects_sidecar", cfg.ogm.effects_sidecar.string()}};
    j["cv"] = {{"folds", cfg.cv.folds},
               {"seed", cfg.cv.seed},
               {"grid_size", cfg.cv.grid_size},
               {"grid_min_ratio", cfg.cv.grid_min_ratio}};
    j["models"] = cfg.models;
    j["convergence"] = {{"window", cfg.convergence.window}, {"tol", cfg.convergence.tol}};
    j["quality"] = {{"bins", cfg.quality.bins}, {"ks_threshold", cfg.quality.ks_threshold}};
    j["output"] = cfg.output.string();
    j["persist_plasmodes"] = cfg.persist_plasmodes;
    j["threads"] = cfg.threads;
    return j;
}

SplitResult prepare_split(const PipelineConfig& cfg) {
    LoadOptions opts;
    opts.outcome_column = cfg.outcome;
    opts.first_column_is_id = cfg.first_column_is_id;
    Dataset ds = load_csv(cfg.input, opts);
    if (cfg.columns) ds = select_columns(ds, static_cast<int>(cfg.columns->k), cfg.columns->seed);
    return split_train_test(ds, cfg.split.ratio, cfg.split.seed);
}

namespace {

// Seed layout under the master seed: replicate b's rows use stream b, its
// artificial outcome uses stream N + b, and the frozen test outcome uses
// stream 2N + 1. No two draws share a stream.
std::uint64_t outcome_seed(const PipelineConfig& cfg, int b) {
    return derive_seed(cfg.resampling.master_seed,
                       static_cast<std::uint64_t>(cfg.resampling.N) + static_cast<std::uint64_t>(b));
}

std::uint64_t test_outcome_seed(const PipelineConfig& cfg) {
    return derive_seed(cfg.resampling.master_seed,
                       2 * static_cast<std::uint64_t>(cfg.resampling.N) + 1);
}

Eigen::VectorXd frozen_test_outcome(const PipelineConfig& cfg, const Dataset& test,
                                    const EffectSpec& effects) {
    // The held-out benchmark outcome is generated without noise so that
    // every model is scored against the same fixed truth.
    EffectSpec clean = effects;
    clean.noise_sd = 0.0;
    return generate_outcome(test.X, clean, test_outcome_seed(cfg));
}

EffectSpec build_effects(const PipelineConfig& cfg, const Dataset& train) {
    EffectSpec spec;
    switch (cfg.ogm.source) {
        case OgmSource::Lasso: spec = effects_from_lasso(train, cv_spec(cfg)); break;
        case OgmSource::Ridge: spec = effects_from_ridge(train, cv_spec(cfg)); break;
        case OgmSource::Manual:
            spec = effects_manual(cfg.ogm.mu, cfg.ogm.effects, train.column_names);
            break;
        case OgmSource::File: spec = read_effects(cfg.ogm.effects_csv, cfg.ogm.effects_sidecar); break;
    }
    if (cfg.ogm.source == OgmSource::File) {
        if (spec.column_names != train.column_names)
            throw InvalidArgument(
                "effects file columns do not match the training covariates (names and order "
                "must agree)");
    } else {
        spec.noise_sd = cfg.ogm.noise_sd;
        spec.link = cfg.ogm.link;
    }
    spec.validate();
    return spec;
}

json sparsity_to_json(const SparsitySummary& s) {
    return json{{"nonzero", s.nonzero},
                {"total", s.total},
                {"proportion_nonzero", s.proportion_nonzero},
                {"median_nonzero", s.median_nonzero},
                {"min_nonzero", s.min_nonzero},
                {"max_nonzero", s.max_nonzero}};
}

void write_manifest(const fs::path& output_dir, const json& man) {
    write_text_file(output_dir / "manifest.json", man.dump(2) + "\n");
}

json base_manifest(const PipelineConfig& cfg, const StageData& data, Eigen::Index n_total) {
    json man;
    man["created_at"] = iso_utc_now();
    man["version"] = kVersion;
    man["config"] = config_to_json(cfg);
    man["data"] = {{"n", n_total},
                   {"p", data.train.p()},
                   {"n_train", data.train.n()},
                   {"n_test", data.test.n()},
                   {"outcome", cfg.outcome}};
    man["resampling"] = {{"scheme", scheme_name(cfg.resampling.scheme)},
                         {"m", data.m_used},
                         {"m_source", cfg.resampling.m ? "fixed" : "auto"},
                         {"N", cfg.resampling.N},
                         {"master_seed", cfg.resampling.master_seed}};
    if (data.mselect_result) {
        const MSelectionResult& sel = *data.mselect_result;
        man["mselect"] = {{"m_star", sel.m_star},
                          {"candidates", sel.candidates},
                          {"distances", sel.distances},
                          {"q", cfg.mselect.q},
                          {"B", cfg.mselect.B},
                          {"statistic", statistic_name(cfg.mselect.statistic)},
                          {"distance", distance_name(cfg.mselect.distance)},
                          {"norm", norm_name(cfg.mselect.norm)},
                          {"m_floor", cfg.mselect.m_floor > 0
                                          ? cfg.mselect.m_floor
                                          : default_m_floor(data.train.n())},
                          {"seed", cfg.mselect.seed},
                          {"lw_clip_events", sel.lw_clip_events}};
    }
    man["ogm"] = {{"provenance", provenance_name(data.effects.provenance)},
                  {"mu", data.effects.mu},
                  {"noise_sd", data.effects.noise_sd},
                  {"link", link_name(data.effects.link)},
                  {"sparsity", sparsity_to_json(sparsity_summary(data.effects))},
                  {"test_outcome_seed", test_outcome_seed(cfg)}};
    json columns_seed = cfg.columns ? json(cfg.columns->seed) : json(nullptr);
    man["seeds"] = {{"split", cfg.split.seed},
                    {"columns", std::move(columns_seed)},
                    {"master", cfg.resampling.master_seed},
                    {"mselect", cfg.mselect.seed},
                    {"cv", cfg.cv.seed}};
    return man;
}

}  // namespace

StageData generate_stage(const PipelineConfig& cfg, bool persist_replicates) {
    cfg.validate();
    fs::create_directories(cfg.output);

    SplitResult split = prepare_split(cfg);
    StageData data;
    data.train = std::move(split.train);
    data.test = std::move(split.test);
    const Eigen::Index n_total = data.train.n() + data.test.n();

    if (cfg.resampling.m) {
        data.m_used = *cfg.resampling.m;
    } else {
        data.mselect_result = select_m(data.train, cfg.mselect);
        data.m_used = data.mselect_result->m_star;
        write_mselect_trace(*data.mselect_result, cfg.output / "mselect_trace.csv");
        write_mselect_summary(*data.mselect_result, cfg.output / "mselect_summary.csv");
    }

    ResamplingPlan plan{cfg.resampling.scheme, data.m_used, cfg.resampling.N,
                        cfg.resampling.master_seed};
    plan.validate(data.train.n());

    data.effects = build_effects(cfg, data.train);
    write_effects(data.effects, cfg.output / "effects.csv", cfg.output / "effects.json");
    data.y_test = frozen_test_outcome(cfg, data.test, data.effects);

    if (persist_replicates) {
        fs::create_directories(cfg.output / "plasmodes");
        fs::create_directories(cfg.output / "indices");
        try {
            generate_replicates(
                data.train, plan,
                [&](const Replicate& rep, const Dataset& rows) {
                    const std::string stem = replicate_stem(rep.index);
                    write_csv(rows, cfg.output / "plasmodes" / (stem + ".csv"));
                    write_index_file(cfg.output / "indices" / (stem + ".txt"), rep.row_indices);
                    if (rep.complement.size() > 0)
                        write_index_file(cfg.output / "indices" / (stem + "_complement.txt"),
                                         rep.complement);
                },
                cfg.threads);
        } catch (const Error& e) {
            throw Error(std::string("generate stage: ") + e.what());
        }
    }

    write_manifest(cfg.output, base_manifest(cfg, data, n_total));
    return data;
}

StageData resume_stage(const PipelineConfig& cfg) {
    cfg.validate();
    const fs::path man_path = cfg.output / "manifest.json";
    if (!fs::exists(man_path))
        throw IoError("manifest not found: " + man_path.string() + " (run generate first)");
    const json man = read_json_file(man_path);

    SplitResult split = prepare_split(cfg);
    StageData data;
    data.train = std::move(split.train);
    data.test = std::move(split.test);
    try {
        data.m_used = man.at("resampling").at("m").get<Eigen::Index>();
    } catch (const json::exception&) {
        throw InvalidArgument("manifest is missing resampling.m: " + man_path.string());
    }
    data.effects = read_effects(cfg.output / "effects.csv", cfg.output / "effects.json");
    if (data.effects.column_names != data.train.column_names)
        throw InvalidArgument(
            "persisted effects do not match the training covariates; the config no longer "
            "matches the generated artifacts");
    data.y_test = frozen_test_outcome(cfg, data.test, data.effects);
    return data;
}

void evaluate_stage(const PipelineConfig& cfg, const StageData& data, ReplicateOrigin origin) {
    cfg.validate();
    if (!data.train.y)
        throw InvalidArgument("training data has no outcome column; cannot run the quality check");
    fs::create_directories(cfg.output);

    const int N = cfg.resampling.N;
    const std::size_t n_models = cfg.models.size();
    std::vector<std::vector<double>> mabs(n_models, std::vector<double>(N, 0.0));
    std::vector<std::vector<double>> mseps(n_models, std::vector<double>(N, 0.0));
    std::vector<Eigen::VectorXd> rep_outcomes(static_cast<std::size_t>(N));

    const CvSpec cv = cv_spec(cfg);
    auto evaluate_one = [&](int b, const Eigen::MatrixXd& Xb) {
        try {
            const Eigen::VectorXd yb = generate_outcome(Xb, data.effects, outcome_seed(cfg, b));
            rep_outcomes[static_cast<std::size_t>(b - 1)] = yb;
            for (std::size_t mi = 0; mi < n_models; ++mi) {
                const FitResult fit = fit_model(cfg.models[mi], Xb, yb, cv);
                mabs[mi][static_cast<std::size_t>(b - 1)] = mab(fit, data.effects);
                mseps[mi][static_cast<std::size_t>(b - 1)] = msep(fit, data.test.X, data.y_test);
            }
        } catch (const Error& e) {
            throw Error("evaluate stage, replicate " + std::to_string(b) + ": " + e.what());
        }
    };

    if (origin == ReplicateOrigin::Memory) {
        ResamplingPlan plan{cfg.resampling.scheme, data.m_used, N, cfg.resampling.master_seed};
        plan.validate(data.train.n());
        generate_replicates(
            data.train, plan,
            [&](const Replicate& rep, const Dataset& rows) { evaluate_one(rep.index, rows.X); },
            cfg.threads);
    } else {
        for (int b = 1; b <= N; ++b) {
            const fs::path path = cfg.output / "plasmodes" / (replicate_stem(b) + ".csv");
            if (!fs::exists(path))
                throw IoError("replicate file not found: " + path.string() + " (run generate first)");
            LoadOptions opts;
            opts.first_column_is_id = true;
            const Dataset rows = load_csv(path, opts);
            if (rows.column_names != data.train.column_names)
                throw InvalidArgument("replicate columns do not match the training covariates: " +
                                      path.string());
            evaluate_one(b, rows.X);
        }
    }

    // metrics.csv: one row per replicate and model, replicates outermost so
    // running means can be recomputed by a single pass over the file.
    {
        std::ostringstream out;
        out << "b,model,mab,msep\n";
        for (int b = 1; b <= N; ++b)
            for (std::size_t mi = 0; mi < n_models; ++mi)
                out << b << ',' << cfg.models[mi] << ','
                    << format_double(mabs[mi][static_cast<std::size_t>(b - 1)]) << ','
                    << format_double(mseps[mi][static_cast<std::size_t>(b - 1)]) << '\n';
        write_text_file(cfg.output / "metrics.csv", out.str());
    }

    // Convergence traces and aggregates per model and measure.
    std::vector<ConvergenceTrace> mab_traces(n_models), msep_traces(n_models);
    for (std::size_t mi = 0; mi < n_models; ++mi) {
        mab_traces[mi] = convergence_trace(mabs[mi], cfg.convergence.window, cfg.convergence.tol);
        msep_traces[mi] = convergence_trace(mseps[mi], cfg.convergence.window, cfg.convergence.tol);
    }
    {
        std::ostringstream out;
        out << "model,measure,b,running_mean\n";
        for (std::size_t mi = 0; mi < n_models; ++mi) {
            for (int b = 1; b <= N; ++b)
                out << cfg.models[mi] << ",mab," << b << ','
                    << format_double(mab_traces[mi].running_means[static_cast<std::size_t>(b - 1)])
                    << '\n';
            for (int b = 1; b <= N; ++b)
                out << cfg.models[mi] << ",msep," << b << ','
                    << format_double(msep_traces[mi].running_means[static_cast<std::size_t>(b - 1)])
                    << '\n';
        }
        write_text_file(cfg.output / "convergence.csv", out.str());
    }

    // Fidelity of the artificial outcomes against the original outcome.
    const QualityReport quality = quality_check(*data.train.y, rep_outcomes, cfg.quality.bins,
                                                cfg.quality.ks_threshold);
    json qj = quality_to_json(quality);
    const auto [lo, hi] = achievable_predictor_range(data.train, data.effects);
    qj["achievable_predictor_range"] = {lo, hi};
    qj["range_within_achievable"] = quality.pooled.min >= lo && quality.pooled.max <= hi;
    write_text_file(cfg.output / "quality.json", qj.dump(2) + "\n");

    // Fold the evaluation summary into the manifest.
    const fs::path man_path = cfg.output / "manifest.json";
    json man = fs::exists(man_path)
                   ? read_json_file(man_path)
                   : base_manifest(cfg, data, data.train.n() + data.test.n());
    json mab_hat, msep_hat, converged;
    for (std::size_t mi = 0; mi < n_models; ++mi) {
        const std::string& model = cfg.models[mi];
        mab_hat[model] = aggregate(mabs[mi]);
        msep_hat[model] = aggregate(mseps[mi]);
        converged[model] = {
            {"mab", mab_traces[mi].converged_at ? json(*mab_traces[mi].converged_at) : json(nullptr)},
            {"msep",
             msep_traces[mi].converged_at ? json(*msep_traces[mi].converged_at) : json(nullptr)}};
    }
    man["evaluation"] = {{"models", cfg.models},
                         {"n_replicates", N},
                         {"mab_hat", std::move(mab_hat)},
                         {"msep_hat", std::move(msep_hat)},
                         {"converged_at", std::move(converged)},
                         {"convergence",
                          {{"window", cfg.convergence.window}, {"tol", cfg.convergence.tol}}}};
    write_manifest(cfg.output, man);

    report_stage(cfg.output);
}

namespace {

double parse_cell_strict(const std::string& cell, const fs::path& path) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0')
        throw InvalidArgument("unparseable number '" + cell + "' in " + path.string());
    return v;
}

}  // namespace

void report_stage(const fs::path& output_dir) {
    const fs::path metrics_path = output_dir / "metrics.csv";
    const fs::path conv_path = output_dir / "convergence.csv";
    const fs::path quality_path = output_dir / "quality.json";
    for (const fs::path* p : {&metrics_path, &conv_path, &quality_path})
        if (!fs::exists(*p))
            throw IoError("report input not found: " + p->string() + " (run evaluate first)");

    // Per-model metric samples, in first-appearance (config) order.
    const CsvTable metrics = read_csv_table(metrics_path);
    if (metrics.header != std::vector<std::string>{"b", "model", "mab", "msep"})
        throw InvalidArgument("unexpected metrics.csv header in " + metrics_path.string());
    std::vector<std::string> model_order;
    std::map<std::string, std::vector<double>> mab_by_model, msep_by_model;
    for (const auto& row : metrics.rows) {
        if (row.size() != 4) throw InvalidArgument("malformed row in " + metrics_path.string());
        const std::string& model = row[1];
        if (mab_by_model.find(model) == mab_by_model.end()) model_order.push_back(model);
        mab_by_model[model].push_back(parse_cell_strict(row[2], metrics_path));
        msep_by_model[model].push_back(parse_cell_strict(row[3], metrics_path));
    }
    if (model_order.empty()) throw InvalidArgument("metrics.csv has no rows: " + metrics_path.string());

    // Running-mean traces keyed by (model, measure), rows already in order.
    const CsvTable conv = read_csv_table(conv_path);
    if (conv.header != std::vector<std::string>{"model", "measure", "b", "running_mean"})
        throw InvalidArgument("unexpected convergence.csv header in " + conv_path.string());
    std::map<std::string, std::vector<double>> trace_mab, trace_msep;
    for (const auto& row : conv.rows) {
        if (row.size() != 4) throw InvalidArgument("malformed row in " + conv_path.string());
        const double v = parse_cell_strict(row[3], conv_path);
        if (row[1] == "mab")
            trace_mab[row[0]].push_back(v);
        else if (row[1] == "msep")
            trace_msep[row[0]].push_back(v);
        else
            throw InvalidArgument("unknown measure '" + row[1] + "' in " + conv_path.string());
    }

    const json qj = read_json_file(quality_path);
    std::vector<double> edges;
    std::vector<long> hist_original, hist_pooled;
    try {
        edges = qj.at("bin_edges").get<std::vector<double>>();
        hist_original = qj.at("original").at("histogram").get<std::vector<long>>();
        hist_pooled = qj.at("pooled").at("histogram").get<std::vector<long>>();
    } catch (const json::exception& e) {
        throw InvalidArgument("unexpected quality.json structure in " + quality_path.string() +
                              ": " + e.what());
    }

    const fs::path report_dir = output_dir / "report";
    fs::create_directories(report_dir);

    svg_histogram_overlay(edges, {hist_original, hist_pooled}, {"original", "plasmode pooled"},
                          "Outcome distribution: original vs plasmode",
                          report_dir / "outcome_hist.svg");

    std::vector<std::pair<std::string, std::vector<double>>> mab_groups, msep_groups;
    for (const std::string& model : model_order) {
        mab_groups.emplace_back(model, mab_by_model[model]);
        msep_groups.emplace_back(model, msep_by_model[model]);
    }
    svg_boxplot(mab_groups, "Mean absolute bias by model", "MAB", report_dir / "mab_box.svg");
    svg_boxplot(msep_groups, "Prediction error by model", "MSEP", report_dir / "msep_box.svg");

    std::vector<std::pair<std::string, std::vector<double>>> mab_series, msep_series;
    for (const std::string& model : model_order) {
        if (trace_mab.count(model)) mab_series.emplace_back(model, trace_mab[model]);
        if (trace_msep.count(model)) msep_series.emplace_back(model, trace_msep[model]);
    }
    svg_line_chart(mab_series, "Running mean of MAB", "replicate", "running mean",
                   report_dir / "convergence_mab.svg");
    svg_line_chart(msep_series, "Running mean of MSEP", "replicate", "running mean",
                   report_dir / "convergence_msep.svg");
}

void run_pipeline(const PipelineConfig& cfg) {
    const StageData data = generate_stage(cfg, cfg.persist_plasmodes);
    evaluate_stage(cfg, data, ReplicateOrigin::Memory);
}

std::string ingest_summary(const PipelineConfig& cfg) {
    LoadOptions opts;
    opts.outcome_column = cfg.outcome;
    opts.first_column_is_id = cfg.first_column_is_id;
    Dataset ds = load_csv(cfg.input, opts);
    if (cfg.columns) ds = select_columns(ds, static_cast<int>(cfg.columns->k), cfg.columns->seed);

    json j;
    j["input"] = cfg.input.string();
    j["n"] = ds.n();
    j["p"] = ds.p();
    j["outcome"] = ds.outcome_name;
    if (ds.y) {
        const Eigen::VectorXd& y = *ds.y;
        const double mean = y.mean();
        const double sd = std::sqrt((y.array() - mean).square().sum() /
                                    static_cast<double>(y.size()));
        j["outcome_summary"] = {{"mean", mean},
                                {"sd", sd},
                                {"min", y.minCoeff()},
                                {"max", y.maxCoeff()}};
    }
    const std::size_t head = std::min<std::size_t>(8, ds.column_names.size());
    j["columns_head"] = std::vector<std::string>(ds.column_names.begin(),
                                                 ds.column_names.begin() + static_cast<long>(head));
    const int total = cfg.split.ratio.first + cfg.split.ratio.second;
    const Eigen::Index n_train = static_cast<Eigen::Index>(
        (ds.n() * cfg.split.ratio.first + total - 1) / total);
    j["split_preview"] = {{"n_train", n_train}, {"n_test", ds.n() - n_train}};
    return j.dump(2) + "\n";
}

}  // namespace plasmode
