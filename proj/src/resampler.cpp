#include "plasmode/resampler.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>
#include <utility>

#include "plasmode/errors.hpp"
#include "plasmode/rng.hpp"

namespace plasmode {

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::WithReplacement: return "with_replacement";
        case Scheme::WithoutReplacement: return "without_replacement";
        case Scheme::SampleSplit: return "sample_split";
    }
    throw InvalidArgument("unreachable scheme value");
}

Scheme parse_scheme(const std::string& name) {
    if (name == "with_replacement") return Scheme::WithReplacement;
    if (name == "without_replacement") return Scheme::WithoutReplacement;
    if (name == "sample_split") return Scheme::SampleSplit;
    throw InvalidArgument("unknown resampling scheme: '" + name +
                          "' (expected with_replacement, without_replacement or sample_split)");
}

void ResamplingPlan::validate(Eigen::Index n) const {
    if (m < 1) throw InvalidArgument("resampling size m must be positive");
    if (N < 1) throw InvalidArgument("replicate count N must be positive");
    if (scheme != Scheme::WithReplacement && m > n)
        throw InvalidArgument("m = " + std::to_string(m) + " exceeds n = " + std::to_string(n) +
                              " for " + scheme_name(scheme));
}

std::vector<Eigen::Index> draw_indices(Scheme scheme, Eigen::Index n, Eigen::Index m,
                                       std::uint64_t seed) {
    if (n < 1) throw InvalidArgument("cannot resample from an empty dataset");
    ResamplingPlan probe{scheme, m, 1, seed};
    probe.validate(n);

    Rng rng(seed);
    std::vector<Eigen::Index> out;
    out.reserve(static_cast<std::size_t>(m));

    if (scheme == Scheme::WithReplacement) {
        for (Eigen::Index i = 0; i < m; ++i)
            out.push_back(static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(n))));
        return out;
    }

    // First m entries of a Fisher-Yates permutation, kept in draw order.
    std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto j = i + static_cast<Eigen::Index>(
                               rng.uniform_below(static_cast<std::uint64_t>(n - i)));
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        out.push_back(pool[static_cast<std::size_t>(i)]);
    }
    return out;
}

Dataset materialize(const Dataset& ds, const Replicate& rep) {
    const Eigen::Index n = ds.n();
    const auto m = static_cast<Eigen::Index>(rep.row_indices.size());
    Dataset out;
    out.column_names = ds.column_names;
    out.X.resize(m, ds.p());
    out.row_ids.reserve(rep.row_indices.size());
    const std::string prefix = "b" + std::to_string(rep.index) + "_r";
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index src = rep.row_indices[static_cast<std::size_t>(i)];
        if (src < 0 || src >= n)
            throw InvalidArgument("replicate index out of range: " + std::to_string(src) +
                                  " for n = " + std::to_string(n));
        out.X.row(i) = ds.X.row(src);
        out.row_ids.push_back(prefix + ds.row_ids[static_cast<std::size_t>(src)]);
    }
    return out;
}

namespace {

Replicate build_replicate(const Dataset& ds, const ResamplingPlan& plan, int b) {
    Replicate rep;
    rep.index = b;
    rep.seed = derive_seed(plan.master_seed, static_cast<std::uint64_t>(b));
    rep.row_indices = draw_indices(plan.scheme, ds.n(), plan.m, rep.seed);
    if (plan.scheme == Scheme::SampleSplit) {
        std::vector<bool> taken(static_cast<std::size_t>(ds.n()), false);
        for (Eigen::Index i : rep.row_indices) taken[static_cast<std::size_t>(i)] = true;
        for (Eigen::Index i = 0; i < ds.n(); ++i)
            if (!taken[static_cast<std::size_t>(i)]) rep.complement.push_back(i);
    }
    return rep;
}

}  // namespace

void generate_replicates(const Dataset& ds, const ResamplingPlan& plan,
                         const std::function<void(const Replicate&, const Dataset&)>& consume,
                         int threads) {
    plan.validate(ds.n());

    if (threads <= 1) {
        for (int b = 1; b <= plan.N; ++b) {
            const Replicate rep = build_replicate(ds, plan, b);
            consume(rep, materialize(ds, rep));
        }
        return;
    }

    // Parallel construction, ordered serial consumption: workers fill a
    // block of slots, then the block is drained in replicate order. Output
    // is therefore identical for every thread count.
    const int block = threads * 2;
    for (int start = 1; start <= plan.N; start += block) {
        const int end = std::min(plan.N, start + block - 1);
        std::vector<std::optional<std::pair<Replicate, Dataset>>> slots(
            static_cast<std::size_t>(end - start + 1));
        std::atomic<int> next{start};
        std::exception_ptr failure;
        std::mutex failure_mutex;

        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                try {
                    for (;;) {
                        const int b = next.fetch_add(1);
                        if (b > end) return;
                        Replicate rep = build_replicate(ds, plan, b);
                        Dataset data = materialize(ds, rep);
                        slots[static_cast<std::size_t>(b - start)].emplace(std::move(rep),
                                                                           std::move(data));
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);

        for (auto& slot : slots) consume(slot->first, slot->second);
    }
}

}  // namespace plasmode
