#pragma once

#include <span>
#include <vector>

namespace pianoeval {

inline constexpr double kSignificanceAlpha = 0.05;

struct KWResult {
    double h = 0.0;              // tie-corrected statistic
    double h_uncorrected = 0.0;  // before the tie correction
    int df = 1;
    double p = 1.0;

    bool significant(double alpha = kSignificanceAlpha) const { return p < alpha; }
};

/// Mid-ranks (1-based) of the values; tied values share the mean of their positions.
std::vector<double> mid_ranks(std::span<const double> values);

/// Kruskal-Wallis H test. Needs >= 2 non-empty groups and >= 3 values in total.
KWResult kruskal_wallis(std::span<const std::vector<double>> groups);

/// Chi-square survival function, Q(df / 2, x / 2).
double chi_square_sf(double x, int df);

}  // namespace pianoeval
