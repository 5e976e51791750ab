#pragma once

#include <vector>

namespace plasmode {

/// First Wasserstein distance between the empirical distributions of a and
/// b. Equal lengths reduce to the mean absolute difference of order
/// statistics; unequal lengths use the quantile-function integral
/// int_0^1 |F_a^{-1}(u) - F_b^{-1}(u)| du. Inputs need not be sorted.
double wasserstein1(std::vector<double> a, std::vector<double> b);

/// Two-sample Kolmogorov-Smirnov statistic: the largest gap between the two
/// empirical CDFs, evaluated at every pooled sample point. Always in [0,1].
double ks_distance(std::vector<double> a, std::vector<double> b);

}  // namespace plasmode
