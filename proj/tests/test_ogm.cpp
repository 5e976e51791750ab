#include <doctest.h>

#include <filesystem>
#include <set>

#include "plasmode/errors.hpp"
#include "plasmode/ogm.hpp"
#include "plasmode/regress.hpp"
#include "plasmode/rng.hpp"

using namespace plasmode;
namespace fs = std::filesystem;

namespace {

Dataset training_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = 2.0 + 1.5 * X(i, 0) - X(i, 2) + 0.3 * rng.normal();
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    return make_dataset(X, names, {}, y, "out");
}

}  // namespace

TEST_CASE("manual effects fill named slots and zero the rest") {
    const std::vector<std::string> names{"a", "b", "c"};
    const EffectSpec spec = effects_manual(1.5, {{"c", -2.0}, {"a", 0.5}}, names);
    CHECK(spec.mu == 1.5);
    CHECK(spec.beta(0) == 0.5);
    CHECK(spec.beta(1) == 0.0);
    CHECK(spec.beta(2) == -2.0);
    CHECK(spec.column_names == names);
    CHECK(spec.provenance == EffectProvenance::Manual);

    // No entries means a pure-intercept truth.
    const EffectSpec zero = effects_manual(3.0, {}, names);
    CHECK(zero.beta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("manual effects reject duplicates and unknown columns") {
    const std::vector<std::string> names{"a", "b"};
    CHECK_THROWS_AS(effects_manual(0, {{"a", 1.0}, {"a", 2.0}}, names), InvalidArgument);
    CHECK_THROWS_AS(effects_manual(0, {{"z", 1.0}}, names), InvalidArgument);
}

TEST_CASE("lasso-estimated effects are sparse and carry their provenance") {
    const Dataset train = training_dataset(120, 8, 1);
    CvSpec cv;
    cv.seed = 3;
    const EffectSpec spec = effects_from_lasso(train, cv);
    CHECK(spec.provenance == EffectProvenance::EstimatedLasso);
    CHECK(spec.column_names == train.column_names);
    CHECK(std::abs(spec.beta(0)) > 0.5);  // true effect 1.5 survives selection
    CHECK(spec.noise_sd == 0.0);

    // A grid pinned above lambda_max forces the all-zero solution with the
    // intercept at the outcome mean.
    CvSpec high;
    high.lambda_grid = {2.0 * lasso_lambda_max(train.X, *train.y)};
    const EffectSpec zero = effects_from_lasso(train, high);
    CHECK(zero.beta.cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.mu == doctest::Approx(train.y->mean()).epsilon(1e-14));
}

TEST_CASE("ridge-estimated effects are dense") {
    const Dataset train = training_dataset(90, 6, 2);
    CvSpec cv;
    cv.seed = 4;
    const EffectSpec spec = effects_from_ridge(train, cv);
    CHECK(spec.provenance == EffectProvenance::EstimatedRidge);
    int nonzero = 0;
    for (Eigen::Index j = 0; j < spec.beta.size(); ++j)
        if (spec.beta(j) != 0.0) ++nonzero;
    CHECK(nonzero == 6);
}

TEST_CASE("estimated effects require a training outcome") {
    Dataset no_y = training_dataset(30, 3, 5);
    no_y.y.reset();
    no_y.outcome_name.clear();
    CvSpec cv;
    CHECK_THROWS_AS(effects_from_lasso(no_y, cv), InvalidArgument);
    CHECK_THROWS_AS(effects_from_ridge(no_y, cv), InvalidArgument);
}

TEST_CASE("sparsity summary on a hand vector") {
    EffectSpec spec;
    spec.mu = 0;
    spec.column_names = {"a", "b", "c", "d", "e"};
    spec.beta = Eigen::VectorXd(5);
    spec.beta << 0.0, 2.0, -3.0, 0.0, 1.0;
    const SparsitySummary s = sparsity_summary(spec);
    CHECK(s.nonzero == 3);
    CHECK(s.total == 5);
    CHECK(s.proportion_nonzero == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(s.median_nonzero == 1.0);
    CHECK(s.min_nonzero == -3.0);
    CHECK(s.max_nonzero == 2.0);
}

TEST_CASE("identity-link outcomes without noise are the exact linear predictor") {
    EffectSpec spec;
    spec.mu = 1.0;
    spec.column_names = {"a"};
    spec.beta = Eigen::VectorXd(1);
    spec.beta << 2.0;
    Eigen::MatrixXd X(2, 1);
    X << 1.0, 2.5;
    const Eigen::VectorXd y = generate_outcome(X, spec, 7);
    CHECK(y(0) == 3.0);
    CHECK(y(1) == 6.0);
}

TEST_CASE("outcome noise is seed-deterministic and scales exactly") {
    EffectSpec spec;
    spec.mu = 0.0;
    spec.column_names = {"a"};
    spec.beta = Eigen::VectorXd::Zero(1);
    spec.noise_sd = 1.0;
    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(50, 1);

    const Eigen::VectorXd y1 = generate_outcome(X, spec, 11);
    const Eigen::VectorXd y2 = generate_outcome(X, spec, 11);
    CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd y3 = generate_outcome(X, spec, 12);
    CHECK((y1 - y3).cwiseAbs().maxCoeff() > 0.0);

    // Doubling the noise level doubles each noise term bit-exactly: the
    // draw sequence is independent of the scale.
    spec.noise_sd = 2.0;
    const Eigen::VectorXd y4 = generate_outcome(X, spec, 11);
    for (Eigen::Index i = 0; i < 50; ++i) CHECK(y4(i) == 2.0 * y1(i));
}

TEST_CASE("duplicated rows produce bitwise identical noiseless outcomes") {
    EffectSpec spec;
    spec.mu = 0.25;
    spec.column_names = {"a", "b", "c"};
    spec.beta = Eigen::VectorXd(3);
    spec.beta << 0.1, -0.7, 3.0;
    Rng rng(9);
    Eigen::MatrixXd X(4, 3);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) X(i, j) = rng.normal();
    Eigen::MatrixXd dup(8, 3);
    dup << X, X;
    const Eigen::VectorXd y = generate_outcome(X, spec, 1);
    const Eigen::VectorXd yd = generate_outcome(dup, spec, 2);
    for (Eigen::Index i = 0; i < 4; ++i) {
        CHECK(yd(i) == y(i));
        CHECK(yd(i + 4) == y(i));
    }
}

TEST_CASE("logit link saturates at extreme intercepts") {
    EffectSpec spec;
    spec.mu = 50.0;
    spec.column_names = {"a"};
    spec.beta = Eigen::VectorXd::Zero(1);
    spec.link = Link::Logit;
    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(100, 1);
    const Eigen::VectorXd ones = generate_outcome(X, spec, 3);
    CHECK(ones.minCoeff() == 1.0);
    spec.mu = -50.0;
    const Eigen::VectorXd zeros = generate_outcome(X, spec, 3);
    CHECK(zeros.maxCoeff() == 0.0);
}

TEST_CASE("logit link produces bernoulli draws near the right rate") {
    EffectSpec spec;
    spec.mu = 0.0;  // probability one half
    spec.column_names = {"a"};
    spec.beta = Eigen::VectorXd::Zero(1);
    spec.link = Link::Logit;
    const Eigen::MatrixXd X = Eigen::MatrixXd::Zero(4000, 1);
    const Eigen::VectorXd y = generate_outcome(X, spec, 5);
    double mean = y.mean();
    CHECK(mean > 0.45);
    CHECK(mean < 0.55);
    for (Eigen::Index i = 0; i < y.size(); ++i) CHECK((y(i) == 0.0 || y(i) == 1.0));
}

TEST_CASE("achievable predictor range brackets resampled outcomes") {
    EffectSpec spec;
    spec.mu = 1.0;
    spec.column_names = {"a"};
    spec.beta = Eigen::VectorXd(1);
    spec.beta << 2.0;
    Eigen::MatrixXd X(2, 1);
    X << 0.0, 1.0;
    const Dataset ds = make_dataset(X, {"a"});
    const auto [lo, hi] = achievable_predictor_range(ds, spec);
    CHECK(lo == 1.0);
    CHECK(hi == 3.0);
}

TEST_CASE("effect specs validate their invariants") {
    EffectSpec spec;
    spec.mu = 0.0;
    spec.column_names = {"a", "b"};
    spec.beta = Eigen::VectorXd::Zero(2);
    CHECK_NOTHROW(spec.validate());
    spec.noise_sd = -0.1;
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
    spec.noise_sd = 0.0;
    spec.beta = Eigen::VectorXd::Zero(3);
    CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("generate_outcome rejects mismatched designs") {
    EffectSpec spec;
    spec.mu = 0.0;
    spec.column_names = {"a", "b"};
    spec.beta = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(generate_outcome(Eigen::MatrixXd::Zero(3, 3), spec, 1), DimensionMismatch);
}

TEST_CASE("quality check of a sample against itself is clean") {
    Rng rng(13);
    Eigen::VectorXd y(200);
    for (Eigen::Index i = 0; i < 200; ++i) y(i) = rng.normal();
    const QualityReport rep = quality_check(y, {y, y}, 10, 0.2);
    CHECK(rep.pooled.ks_statistic == 0.0);
    CHECK(rep.replicates[0].ks_statistic == 0.0);
    CHECK(rep.range_within_original);
    CHECK(rep.ks_below_threshold);
    CHECK(rep.binary == false);
    CHECK(rep.original.mean == doctest::Approx(y.mean()).epsilon(1e-14));
}

TEST_CASE("histogram counts sum to the sample sizes on shared edges") {
    Rng rng(14);
    Eigen::VectorXd y(150);
    for (Eigen::Index i = 0; i < 150; ++i) y(i) = rng.normal();
    Eigen::VectorXd r1(60), r2(90);
    for (Eigen::Index i = 0; i < 60; ++i) r1(i) = rng.normal() + 0.5;
    for (Eigen::Index i = 0; i < 90; ++i) r2(i) = rng.normal() - 0.5;
    const QualityReport rep = quality_check(y, {r1, r2}, 12, 0.2);
    REQUIRE(rep.bin_edges.size() == 13);
    long total = 0;
    for (long c : rep.original.histogram) total += c;
    CHECK(total == 150);
    total = 0;
    for (long c : rep.pooled.histogram) total += c;
    CHECK(total == 150);
    total = 0;
    for (long c : rep.replicates[0].histogram) total += c;
    CHECK(total == 60);
    // Shared edges cover the pooled range.
    CHECK(rep.bin_edges.front() <= std::min(y.minCoeff(), std::min(r1.minCoeff(), r2.minCoeff())));
    CHECK(rep.bin_edges.back() >= std::max(y.maxCoeff(), std::max(r1.maxCoeff(), r2.maxCoeff())));
}

TEST_CASE("ks statistic against a shifted constant matches the brute force") {
    Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 0.0);
    Eigen::VectorXd r = Eigen::VectorXd::Constant(10, 1.0);
    const QualityReport rep = quality_check(y, {r}, 4, 0.2);
    CHECK(rep.pooled.ks_statistic == 1.0);
    CHECK(!rep.ks_below_threshold);
    CHECK(!rep.range_within_original);
}

TEST_CASE("binary outcomes report prevalences") {
    Eigen::VectorXd y(10), r(10);
    y << 0, 0, 0, 1, 1, 1, 1, 0, 0, 0;
    r << 1, 1, 1, 1, 1, 1, 0, 0, 0, 0;
    const QualityReport rep = quality_check(y, {r}, 4, 0.5);
    CHECK(rep.binary);
    CHECK(rep.prevalence_original == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(rep.prevalence_pooled == doctest::Approx(0.6).epsilon(1e-15));
}

TEST_CASE("quality check rejects empty input") {
    Eigen::VectorXd y(3);
    y << 1, 2, 3;
    CHECK_THROWS_AS(quality_check(y, {}, 5, 0.2), InvalidArgument);
    CHECK_THROWS_AS(quality_check(y, {Eigen::VectorXd()}, 5, 0.2), InvalidArgument);
    CHECK_THROWS_AS(quality_check(Eigen::VectorXd(), {y}, 5, 0.2), InvalidArgument);
}

TEST_CASE("effects files round-trip bit for bit") {
    EffectSpec spec;
    spec.mu = 1.0 / 3.0;
    spec.column_names = {"alpha", "beta_2", "gamma"};
    spec.beta = Eigen::VectorXd(3);
    spec.beta << 0.1, -2.7182818284590452, 1e-12;
    spec.noise_sd = 0.7071067811865476;
    spec.link = Link::Identity;
    spec.provenance = EffectProvenance::Literature;

    const fs::path dir = fs::temp_directory_path() / "plasmode_ogm_io";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_effects(spec, dir / "effects.csv", dir / "effects.json");
    const EffectSpec back = read_effects(dir / "effects.csv", dir / "effects.json");

    CHECK(back.mu == spec.mu);
    CHECK(back.noise_sd == spec.noise_sd);
    CHECK(back.link == spec.link);
    CHECK(back.provenance == spec.provenance);
    CHECK(back.column_names == spec.column_names);
    for (Eigen::Index j = 0; j < 3; ++j) CHECK(back.beta(j) == spec.beta(j));
}

TEST_CASE("provenance and link names round-trip") {
    for (EffectProvenance p :
         {EffectProvenance::EstimatedLasso, EffectProvenance::EstimatedRidge,
          EffectProvenance::Manual, EffectProvenance::Literature})
        CHECK(parse_provenance(provenance_name(p)) == p);
    for (Link l : {Link::Identity, Link::Logit}) CHECK(parse_link(link_name(l)) == l);
    CHECK_THROWS_AS(parse_provenance("guess"), InvalidArgument);
    CHECK_THROWS_AS(parse_link("probit"), InvalidArgument);
}
