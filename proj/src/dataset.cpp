#include "plasmode/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "plasmode/errors.hpp"
#include "plasmode/rng.hpp"

namespace plasmode {

void Dataset::validate() const {
    if (X.rows() < 2) throw InvalidArgument("dataset needs at least 2 rows");
    if (X.cols() < 1) throw InvalidArgument("dataset needs at least 1 column");
    if (!X.allFinite()) throw InvalidArgument("dataset contains non-finite covariate values");
    if (static_cast<Eigen::Index>(column_names.size()) != X.cols())
        throw InvalidArgument("column name count does not match column count");
    if (static_cast<Eigen::Index>(row_ids.size()) != X.rows())
        throw InvalidArgument("row id count does not match row count");
    std::unordered_set<std::string> seen;
    for (const auto& name : column_names) {
        if (!seen.insert(name).second)
            throw InvalidArgument("duplicate column name: " + name);
    }
    if (y) {
        if (y->size() != X.rows())
            throw InvalidArgument("outcome length does not match row count");
        if (!y->allFinite())
            throw InvalidArgument("outcome contains non-finite values");
        if (outcome_name.empty())
            throw InvalidArgument("outcome present but unnamed");
    } else if (!outcome_name.empty()) {
        throw InvalidArgument("outcome name set but no outcome vector");
    }
}

Dataset make_dataset(Eigen::MatrixXd X, std::vector<std::string> column_names,
                     std::vector<std::string> row_ids,
                     std::optional<Eigen::VectorXd> y, std::string outcome_name) {
    Dataset ds;
    ds.X = std::move(X);
    ds.column_names = std::move(column_names);
    if (row_ids.empty()) {
        row_ids.reserve(static_cast<std::size_t>(ds.X.rows()));
        char buf[32];
        for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
            std::snprintf(buf, sizeof(buf), "r%06lld", static_cast<long long>(i + 1));
            row_ids.emplace_back(buf);
        }
    }
    ds.row_ids = std::move(row_ids);
    ds.y = std::move(y);
    ds.outcome_name = std::move(outcome_name);
    ds.validate();
    return ds;
}

namespace {

Dataset take_rows(const Dataset& ds, const std::vector<Eigen::Index>& rows) {
    Dataset out;
    out.column_names = ds.column_names;
    out.outcome_name = ds.outcome_name;
    out.X.resize(static_cast<Eigen::Index>(rows.size()), ds.p());
    if (ds.y) out.y = Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()));
    out.row_ids.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.X.row(static_cast<Eigen::Index>(i)) = ds.X.row(rows[i]);
        if (ds.y) (*out.y)(static_cast<Eigen::Index>(i)) = (*ds.y)(rows[i]);
        out.row_ids.push_back(ds.row_ids[static_cast<std::size_t>(rows[i])]);
    }
    return out;
}

}  // namespace

SplitResult split_train_test(const Dataset& ds, std::pair<int, int> ratio,
                             std::uint64_t seed) {
    const auto [a, b] = ratio;
    if (a < 1 || b < 1) throw InvalidArgument("split ratio parts must be >= 1");
    const Eigen::Index n = ds.n();
    if (n < a + b) throw InvalidArgument("too few rows for the requested split");

    // ceil(n*a/(a+b)) in exact integer arithmetic
    const long long num = static_cast<long long>(n) * a;
    const long long den = a + b;
    const Eigen::Index train_n = static_cast<Eigen::Index>((num + den - 1) / den);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    for (std::size_t i = 0; i + 1 < perm.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform_below(perm.size() - i));
        std::swap(perm[i], perm[j]);
    }

    std::vector<Eigen::Index> train_rows(perm.begin(), perm.begin() + train_n);
    std::vector<Eigen::Index> test_rows(perm.begin() + train_n, perm.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());

    SplitResult res;
    res.train = take_rows(ds, train_rows);
    res.test = take_rows(ds, test_rows);
    res.ratio = ratio;
    res.seed = seed;
    return res;
}

Dataset select_columns(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 1 || k > ds.p())
        throw InvalidArgument("column count k out of range [1, p]");
    std::vector<Eigen::Index> cols(static_cast<std::size_t>(ds.p()));
    for (Eigen::Index j = 0; j < ds.p(); ++j) cols[static_cast<std::size_t>(j)] = j;
    Rng rng(seed);
    for (int i = 0; i < k; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(rng.uniform_below(cols.size() - static_cast<std::size_t>(i)));
        std::swap(cols[static_cast<std::size_t>(i)], cols[j]);
    }
    std::vector<Eigen::Index> kept(cols.begin(), cols.begin() + k);
    std::sort(kept.begin(), kept.end());

    Dataset out;
    out.row_ids = ds.row_ids;
    out.outcome_name = ds.outcome_name;
    out.y = ds.y;
    out.X.resize(ds.n(), k);
    out.column_names.reserve(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < kept.size(); ++j) {
        out.X.col(static_cast<Eigen::Index>(j)) = ds.X.col(kept[j]);
        out.column_names.push_back(ds.column_names[static_cast<std::size_t>(kept[j])]);
    }
    return out;
}

}  // namespace plasmode
