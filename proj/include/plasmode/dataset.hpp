#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace plasmode {

/// Numeric covariate table with named columns, opaque row ids and an
/// optional outcome vector. Immutable by convention once built: every
/// operation below returns a fresh Dataset.
struct Dataset {
    std::vector<std::string> row_ids;
    std::vector<std::string> column_names;
    Eigen::MatrixXd X;                  // n x p
    std::optional<Eigen::VectorXd> y;   // length n when present
    std::string outcome_name;           // empty iff !y

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }

    /// Throws InvalidArgument on any violated invariant: n >= 2, p >= 1,
    /// finite entries, unique column names, id/outcome lengths matching n.
    void validate() const;
};

/// Builds a Dataset (assigning synthetic row ids "r000001"... when `row_ids`
/// is empty) and validates it.
Dataset make_dataset(Eigen::MatrixXd X, std::vector<std::string> column_names,
                     std::vector<std::string> row_ids = {},
                     std::optional<Eigen::VectorXd> y = std::nullopt,
                     std::string outcome_name = {});

struct SplitResult {
    Dataset train;
    Dataset test;
    std::pair<int, int> ratio;
    std::uint64_t seed;
};

/// Splits rows once into train/test by a seeded uniform permutation; train
/// receives ceil(n*a/(a+b)) rows. Original row order is preserved inside
/// each part. Throws InvalidArgument if n < a+b.
SplitResult split_train_test(const Dataset& ds, std::pair<int, int> ratio,
                             std::uint64_t seed);

/// Keeps k columns drawn uniformly without replacement (seeded); relative
/// column order is preserved. Throws InvalidArgument unless 1 <= k <= p.
Dataset select_columns(const Dataset& ds, int k, std::uint64_t seed);

}  // namespace plasmode
