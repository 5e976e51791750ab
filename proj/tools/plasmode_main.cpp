#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "plasmode/csv.hpp"
#include "plasmode/errors.hpp"
#include "plasmode/mselect.hpp"
#include "plasmode/pipeline.hpp"
#include "plasmode/version.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> N;
    std::optional<std::string> m;
    std::optional<double> q;
    std::optional<int> B;
    std::optional<std::string> statistic;
    std::optional<std::string> distance;
    std::optional<long> m_floor;
    std::optional<std::string> output;
    std::optional<int> threads;
    bool persist = false;
};

void add_common_options(CLI::App* sub, Overrides& o) {
    sub->add_option("-c,--config", o.config_path, "JSON configuration file")->required();
    sub->add_option("--seed", o.seed, "override resampling.master_seed");
    sub->add_option("--N", o.N, "override the number of replicates");
    sub->add_option("--m", o.m, "override the resampling size (integer or \"auto\")");
    sub->add_option("--q", o.q, "override the m-selection decay factor");
    sub->add_option("--B", o.B, "override the m-selection bootstrap count");
    sub->add_option("--statistic", o.statistic, "override the m-selection statistic");
    sub->add_option("--distance", o.distance, "override the m-selection distance");
    sub->add_option("--m-floor", o.m_floor, "override the smallest candidate size");
    sub->add_option("--output", o.output, "override the output directory");
    sub->add_option("--threads", o.threads, "override the worker thread count");
    sub->add_flag("--persist-plasmodes", o.persist, "write replicate covariate files");
}

plasmode::PipelineConfig configure(const Overrides& o) {
    plasmode::PipelineConfig cfg = plasmode::load_config(o.config_path);
    if (o.seed) cfg.resampling.master_seed = *o.seed;
    if (o.N) cfg.resampling.N = *o.N;
    if (o.m) {
        if (*o.m == "auto") {
            cfg.resampling.m.reset();
        } else {
            char* end = nullptr;
            const long v = std::strtol(o.m->c_str(), &end, 10);
            if (end == o.m->c_str() || *end != '\0' || v < 1)
                throw plasmode::InvalidArgument("--m must be a positive integer or \"auto\"");
            cfg.resampling.m = v;
        }
    }
    if (o.q) cfg.mselect.q = *o.q;
    if (o.B) cfg.mselect.B = *o.B;
    if (o.statistic) cfg.mselect.statistic = plasmode::parse_statistic(*o.statistic);
    if (o.distance) cfg.mselect.distance = plasmode::parse_distance(*o.distance);
    if (o.m_floor) cfg.mselect.m_floor = *o.m_floor;
    if (o.output) cfg.output = *o.output;
    if (o.threads) cfg.threads = *o.threads;
    if (o.persist) cfg.persist_plasmodes = true;
    cfg.validate();
    return cfg;
}

int dispatch(const std::string& command, const Overrides& o) {
    using nlohmann::json;
    if (command == "ingest") {
        std::cout << plasmode::ingest_summary(configure(o));
        return 0;
    }
    if (command == "select-m") {
        const plasmode::PipelineConfig cfg = configure(o);
        const plasmode::SplitResult split = plasmode::prepare_split(cfg);
        const plasmode::MSelectionResult res = plasmode::select_m(split.train, cfg.mselect);
        std::filesystem::create_directories(cfg.output);
        plasmode::write_mselect_trace(res, cfg.output / "mselect_trace.csv");
        plasmode::write_mselect_summary(res, cfg.output / "mselect_summary.csv");
        json out{{"m_star", res.m_star},
                 {"candidates", res.candidates},
                 {"distances", res.distances},
                 {"output", cfg.output.string()}};
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    if (command == "generate") {
        const plasmode::PipelineConfig cfg = configure(o);
        const plasmode::StageData data = plasmode::generate_stage(cfg, true);
        json out{{"m", data.m_used},
                 {"N", cfg.resampling.N},
                 {"output", cfg.output.string()}};
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    if (command == "evaluate") {
        const plasmode::PipelineConfig cfg = configure(o);
        const plasmode::StageData data = plasmode::resume_stage(cfg);
        plasmode::evaluate_stage(cfg, data, plasmode::ReplicateOrigin::Disk);
        std::cout << json{{"output", cfg.output.string()}}.dump(2) << "\n";
        return 0;
    }
    if (command == "report") {
        const plasmode::PipelineConfig cfg = configure(o);
        plasmode::report_stage(cfg.output);
        std::cout << json{{"output", (cfg.output / "report").string()}}.dump(2) << "\n";
        return 0;
    }
    if (command == "run") {
        const plasmode::PipelineConfig cfg = configure(o);
        plasmode::run_pipeline(cfg);
        std::cout << json{{"output", cfg.output.string()}}.dump(2) << "\n";
        return 0;
    }
    throw plasmode::InvalidArgument("unknown command: " + command);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Plasmode data generation and model comparison"};
    app.set_version_flag("--version", plasmode::kVersion);
    app.require_subcommand(1);

    Overrides o;
    add_common_options(app.add_subcommand("ingest", "validate and summarize an input table"), o);
    add_common_options(
        app.add_subcommand("select-m", "choose the resampling size adaptively"), o);
    add_common_options(
        app.add_subcommand("generate", "draw replicates and persist them with their truth"), o);
    add_common_options(
        app.add_subcommand("evaluate", "fit models on persisted replicates and score them"), o);
    add_common_options(app.add_subcommand("report", "render plots from evaluation outputs"), o);
    add_common_options(app.add_subcommand("run", "generate and evaluate in one pass"), o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return dispatch(command, o);
    } catch (const plasmode::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const plasmode::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const plasmode::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
