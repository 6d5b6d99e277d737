#pragma once

// Spiral-array pitch geometry and the two windowed harmonic-tension features
// (cloud diameter and cloud momentum).

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pianoeval/midi.hpp"
#include "pianoeval/series.hpp"

namespace pianoeval {

template <typename Scalar = double>
struct SpiralParams {
    Scalar radius = Scalar(1);
    Scalar rise = std::sqrt(Scalar(2) / Scalar(15));
};

template <typename Scalar = double>
using SpiralPoint = Eigen::Matrix<Scalar, 3, 1>;

/// Per-pitch-class weight vector, index = pitch class (C = 0).
template <typename Scalar = double>
using PitchClassWeights = Eigen::Array<Scalar, 12, 1>;

/// Position on the line of fifths with spelling discarded: C=0, G=1, D=2, ..., F=11.
constexpr int fifths_index(int midi_pitch) { return (7 * (midi_pitch % 12)) % 12; }

template <typename Scalar>
SpiralPoint<Scalar> pitch_to_spiral(int midi_pitch, const SpiralParams<Scalar>& params = {}) {
    const int k = fifths_index(midi_pitch);
    // one quarter turn per fifth; tabulated so x^2 + y^2 == r^2 holds exactly
    static constexpr int kSin[4] = {0, 1, 0, -1};
    static constexpr int kCos[4] = {1, 0, -1, 0};
    return SpiralPoint<Scalar>(params.radius * Scalar(kSin[k % 4]), params.radius * Scalar(kCos[k % 4]),
                               Scalar(k) * params.rise);
}

/// 3 x 12 matrix whose column pc is the spiral point of pitch class pc.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 12> pitch_class_points(const SpiralParams<Scalar>& params = {}) {
    Eigen::Matrix<Scalar, 3, 12> pts;
    for (int pc = 0; pc < 12; ++pc) pts.col(pc) = pitch_to_spiral(pc, params);
    return pts;
}

/// Weighted centroid of the pitch-class points; nullopt when no weight is present.
template <typename Scalar>
std::optional<SpiralPoint<Scalar>> center_of_effect(const PitchClassWeights<Scalar>& weights,
                                                    const SpiralParams<Scalar>& params = {}) {
    const Scalar total = weights.sum();
    if (!(total > Scalar(0))) return std::nullopt;
    return SpiralPoint<Scalar>(pitch_class_points(params) * (weights / total).matrix());
}

/// Largest distance between any two pitch classes with positive weight; nullopt when none.
template <typename Scalar>
std::optional<Scalar> cloud_diameter(const PitchClassWeights<Scalar>& weights, const SpiralParams<Scalar>& params = {}) {
    const auto pts = pitch_class_points(params);
    bool any = false;
    Scalar best = Scalar(0);
    for (int a = 0; a < 12; ++a) {
        if (!(weights(a) > Scalar(0))) continue;
        any = true;
        for (int b = a + 1; b < 12; ++b)
            if (weights(b) > Scalar(0)) best = std::max(best, (pts.col(a) - pts.col(b)).norm());
    }
    if (!any) return std::nullopt;
    return best;
}

enum class CeWeighting { duration, duration_velocity };

struct WindowConfig {
    double window_length = 1.0;
    double hop = 0.5;
    CeWeighting weighting = CeWeighting::duration;
};

/// Overlaps shorter than this (seconds) do not count as sounding in a window.
inline constexpr double kMinimumOverlap = 1e-9;

/// Sounding-time weights per pitch class of `notes` within [start, end).
PitchClassWeights<double> window_weights(std::span<const Note> notes, double start, double end,
                                         CeWeighting weighting = CeWeighting::duration);

/// Weights for every window t_i = i * hop, i = 0 .. ceil(end_time / hop) - 1, as a 12 x W array.
Eigen::Array<double, 12, Eigen::Dynamic> windowed_weights(const Performance& perf, const WindowConfig& cfg);

FeatureSeries cloud_diameter_series(const Performance& perf, const WindowConfig& cfg = {},
                                    const SpiralParams<double>& params = {});

FeatureSeries cloud_momentum(const Performance& perf, const WindowConfig& cfg = {},
                             const SpiralParams<double>& params = {});

}  // namespace pianoeval
