#include "plasmode/distance.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "plasmode/errors.hpp"

namespace plasmode {

namespace {

void require_nonempty(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw InvalidArgument("distance between empty samples");
}

}  // namespace

double wasserstein1(std::vector<double> a, std::vector<double> b) {
    require_nonempty(a, b);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    if (na == nb) {
        double sum = 0.0;
        for (std::size_t i = 0; i < na; ++i) sum += std::abs(a[i] - b[i]);
        return sum / static_cast<double>(na);
    }

    // Both empirical quantile functions are step functions, constant between
    // breakpoints i/na and j/nb. Walk the merged breakpoints; compare the
    // next break of each side exactly via cross-multiplication.
    double total = 0.0;
    double u_prev = 0.0;
    std::size_t ia = 0;
    std::size_t ib = 0;
    while (ia < na && ib < nb) {
        const unsigned long long lhs = static_cast<unsigned long long>(ia + 1) * nb;
        const unsigned long long rhs = static_cast<unsigned long long>(ib + 1) * na;
        double u_next;
        if (lhs <= rhs)
            u_next = static_cast<double>(ia + 1) / static_cast<double>(na);
        else
            u_next = static_cast<double>(ib + 1) / static_cast<double>(nb);
        total += (u_next - u_prev) * std::abs(a[ia] - b[ib]);
        if (lhs <= rhs) ++ia;
        if (lhs >= rhs) ++ib;
        u_prev = u_next;
    }
    return total;
}

double ks_distance(std::vector<double> a, std::vector<double> b) {
    require_nonempty(a, b);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    std::vector<double> pooled;
    pooled.reserve(a.size() + b.size());
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    for (double v : pooled) {
        const double fa =
            static_cast<double>(std::upper_bound(a.begin(), a.end(), v) - a.begin()) / na;
        const double fb =
            static_cast<double>(std::upper_bound(b.begin(), b.end(), v) - b.begin()) / nb;
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace plasmode
