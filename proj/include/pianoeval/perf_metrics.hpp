#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "pianoeval/midi.hpp"
#include "pianoeval/series.hpp"
#include "pianoeval/streams.hpp"
#include "pianoeval/tonal_tension.hpp"

namespace pianoeval {

struct GridConfig {
    double step = 0.1;
    int min_samples = 8;
};

/// Sample time comparisons on the grid tolerate this much float drift (seconds).
inline constexpr double kGridSlack = 1e-9;

inline constexpr std::size_t kMusicalMetricCount = 8;
inline constexpr std::array<std::string_view, kMusicalMetricCount> kMusicalMetricNames = {
    "melody_ioi", "accompaniment_ioi", "melody_kor", "bass_kor",
    "ratio_kor",  "cloud_diameter",    "cloud_momentum", "dynamics"};

/// The eight correlations; nullopt marks an undefined metric.
struct MusicalMetrics {
    std::optional<double> melody_ioi;
    std::optional<double> accompaniment_ioi;
    std::optional<double> melody_kor;
    std::optional<double> bass_kor;
    std::optional<double> ratio_kor;
    std::optional<double> cloud_diameter;
    std::optional<double> cloud_momentum;
    std::optional<double> dynamics;

    /// Values in `kMusicalMetricNames` order.
    std::array<std::optional<double>, kMusicalMetricCount> values() const;
    static MusicalMetrics from_values(const std::array<std::optional<double>, kMusicalMetricCount>& v);

    friend bool operator==(const MusicalMetrics&, const MusicalMetrics&) = default;
};

/// Consecutive-onset intervals; intervals shorter than chord_eps count as 0.
FeatureSeries ioi_series(std::span<const Note> stream, double chord_eps = 0.030);

/// Key overlap ratio (offset_i - onset_{i+1}) / (onset_{i+1} - onset_i); positive means overlap.
FeatureSeries kor_series(std::span<const Note> stream, double min_ioi = 0.001);

std::vector<double> grid_times(double t0, double t1, double step);

/// Previous-value hold onto t0, t0 + step, ... <= t1; nullopt before the first sample.
std::vector<std::optional<double>> resample_to_grid(const FeatureSeries& series, double t0, double t1, double step);

/// Sample Pearson correlation; nullopt when fewer than 2 points or either side has zero variance.
template <class DerivedA, class DerivedB>
std::optional<double> pearson(const Eigen::DenseBase<DerivedA>& a, const Eigen::DenseBase<DerivedB>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
    if (a.size() < 2) return std::nullopt;
    const Eigen::ArrayXd x = a.derived().template cast<double>().array();
    const Eigen::ArrayXd y = b.derived().template cast<double>().array();
    const Eigen::ArrayXd dx = x - x.mean();
    const Eigen::ArrayXd dy = y - y.mean();
    const double n = static_cast<double>(x.size());
    const double sx = dx.square().sum();
    const double sy = dy.square().sum();
    // variance indistinguishable from rounding noise counts as zero
    auto flat = [n](double ss, const Eigen::ArrayXd& v) {
        const double scale = v.abs().maxCoeff();
        return scale == 0.0 || std::sqrt(ss / n) <= 1e-12 * scale;
    };
    if (flat(sx, x) || flat(sy, y)) return std::nullopt;
    const double r = (dx * dy).sum() / std::sqrt(sx * sy);
    return std::clamp(r, -1.0, 1.0);
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Log loudness ratio ln(vel_melody(t) / vel_bass(t)) sampled at k * step.
FeatureSeries dynamics_series(std::span<const Note> melody, std::span<const Note> bass, const GridConfig& grid = {},
                              double hold_horizon = 2.0);

/// Melody KOR over bass KOR on a common grid; points with |bass KOR| < 1e-6 are dropped.
FeatureSeries ratio_kor_series(const FeatureSeries& melody_kor, const FeatureSeries& bass_kor,
                               const GridConfig& grid = {});

/// Resamples both series over the overlap of their time extents and correlates the defined points.
std::optional<double> correlate_series(const FeatureSeries& ref, const FeatureSeries& est, const GridConfig& grid = {});

struct MusicalConfig {
    StreamConfig streams;
    GridConfig grid;
    WindowConfig windows;
    SpiralParams<double> spiral;
    double kor_min_ioi = 0.001;
    double dynamics_hold = 2.0;
};

void validate(const MusicalConfig& cfg);

/// Every feature series the correlations are built from, for one performance.
struct FeatureSet {
    FeatureSeries melody_ioi;
    FeatureSeries accompaniment_ioi;
    FeatureSeries melody_kor;
    FeatureSeries bass_kor;
    FeatureSeries ratio_kor;
    FeatureSeries cloud_diameter;
    FeatureSeries cloud_momentum;
    FeatureSeries dynamics;
};

FeatureSet extract_features(const Performance& perf, const MusicalConfig& cfg = {});

MusicalMetrics compute_musical_metrics(const Performance& ref, const Performance& est, const MusicalConfig& cfg = {});

}  // namespace pianoeval
