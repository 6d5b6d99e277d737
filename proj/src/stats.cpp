#include "pianoeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/SpecialFunctions>

namespace pianoeval {

std::vector<double> mid_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i + 1;
        while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of positions i+1 .. j
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

KWResult kruskal_wallis(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw std::invalid_argument("Kruskal-Wallis needs at least 2 groups");
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) throw std::invalid_argument("Kruskal-Wallis group is empty");
        for (double v : g)
            if (!std::isfinite(v)) throw std::invalid_argument("Kruskal-Wallis values must be finite");
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const double n = static_cast<double>(pooled.size());
    if (pooled.size() < 3) throw std::invalid_argument("Kruskal-Wallis needs at least 3 values");

    KWResult out;
    out.df = static_cast<int>(groups.size()) - 1;
    if (std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); })) return out;

    const auto ranks = mid_ranks(pooled);
    double weighted = 0.0;  // sum over groups of R_g^2 / n_g
    std::size_t at = 0;
    for (const auto& g : groups) {
        double r = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) r += ranks[at++];
        weighted += r * r / static_cast<double>(g.size());
    }
    // H = 12 S / (n (n + 1)) - 3 (n + 1), written over a single denominator
    out.h_uncorrected = (12.0 * weighted - 3.0 * n * (n + 1.0) * (n + 1.0)) / (n * (n + 1.0));

    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    double ties = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    out.h = std::max(0.0, out.h_uncorrected / (1.0 - ties / (n * n * n - n)));
    out.p = chi_square_sf(out.h, out.df);
    return out;
}

double chi_square_sf(double x, int df) {
    if (df < 1) throw std::invalid_argument("chi-square degrees of freedom must be >= 1");
    if (std::isnan(x)) throw std::invalid_argument("chi-square statistic is NaN");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return std::clamp(Eigen::numext::igammac(0.5 * df, 0.5 * x), 0.0, 1.0);
}

}  // namespace pianoeval
