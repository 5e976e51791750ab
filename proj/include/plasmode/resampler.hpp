#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "plasmode/dataset.hpp"

namespace plasmode {

enum class Scheme { WithReplacement, WithoutReplacement, SampleSplit };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);

/// Resampling plan: draw N replicates of size m from an n-row source.
/// WithReplacement covers both the nonparametric bootstrap (m = n) and the
/// m-out-of-n bootstrap (m < n); the other two schemes require m <= n.
struct ResamplingPlan {
    Scheme scheme = Scheme::WithReplacement;
    Eigen::Index m = 0;
    int N = 1;
    std::uint64_t master_seed = 0;

    void validate(Eigen::Index n) const;
};

/// One replicate: 0-based row indices into the source dataset plus the seed
/// that produced them. For SampleSplit the untouched rows are kept in
/// `complement` (sorted ascending) for downstream evaluation.
struct Replicate {
    int index = 0;  // b in [1, N]
    std::vector<Eigen::Index> row_indices;
    std::vector<Eigen::Index> complement;
    std::uint64_t seed = 0;
};

/// Draws m row indices from [0, n). WithReplacement: i.i.d. uniform.
/// WithoutReplacement and SampleSplit: the first m entries of a seeded
/// uniform permutation, in permutation order.
std::vector<Eigen::Index> draw_indices(Scheme scheme, Eigen::Index n, Eigen::Index m,
                                       std::uint64_t seed);

/// Copies the selected rows into a new covariate-only dataset. Row i of the
/// result is row row_indices[i] of ds, bit for bit; the outcome is never
/// copied (plasmode outcomes are generated separately). Row ids record
/// provenance as "b<replicate>_r<source-id>".
Dataset materialize(const Dataset& ds, const Replicate& rep);

/// Streams N replicates to `consume` in replicate order b = 1..N. Replicate
/// b draws with derive_seed(plan.master_seed, b), so the stream is a pure
/// function of (ds, plan) for any thread count: with threads > 1 replicate
/// construction is parallel but consumption stays ordered and serial.
void generate_replicates(const Dataset& ds, const ResamplingPlan& plan,
                         const std::function<void(const Replicate&, const Dataset&)>& consume,
                         int threads = 1);

}  // namespace plasmode
