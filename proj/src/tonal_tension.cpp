#include "pianoeval/tonal_tension.hpp"

#include <algorithm>
#include <stdexcept>

namespace pianoeval {

namespace {

void validate(const WindowConfig& cfg) {
    if (!(cfg.window_length > 0.0) || !(cfg.hop > 0.0) || cfg.hop > cfg.window_length)
        throw std::invalid_argument("window config requires window_length > 0 and 0 < hop <= window_length");
}

template <typename Scalar>
void validate(const SpiralParams<Scalar>& p) {
    if (!(p.radius > 0) || !(p.rise > 0)) throw std::invalid_argument("spiral radius and rise must be positive");
}

double note_weight(const Note& n, double overlap, CeWeighting weighting) {
    return weighting == CeWeighting::duration_velocity ? overlap * n.velocity : overlap;
}

std::int64_t window_count(double end_time, double hop) {
    if (end_time <= 0.0) return 0;
    const double x = end_time / hop;
    const double r = std::round(x);
    return static_cast<std::int64_t>(std::abs(x - r) < 1e-9 ? r : std::ceil(x));
}

}  // namespace

PitchClassWeights<double> window_weights(std::span<const Note> notes, double start, double end,
                                         CeWeighting weighting) {
    PitchClassWeights<double> w = PitchClassWeights<double>::Zero();
    for (const auto& n : notes) {
        const double overlap = std::min(n.offset, end) - std::max(n.onset, start);
        if (overlap > kMinimumOverlap) w(n.pitch % 12) += note_weight(n, overlap, weighting);
    }
    return w;
}

Eigen::Array<double, 12, Eigen::Dynamic> windowed_weights(const Performance& perf, const WindowConfig& cfg) {
    validate(cfg);
    const auto count = window_count(perf.end_time, cfg.hop);
    Eigen::Array<double, 12, Eigen::Dynamic> weights = Eigen::Array<double, 12, Eigen::Dynamic>::Zero(12, count);
    for (const auto& n : perf.notes) {
        auto first = static_cast<std::int64_t>(std::floor((n.onset - cfg.window_length) / cfg.hop));
        auto last = static_cast<std::int64_t>(std::ceil(n.offset / cfg.hop));
        first = std::max<std::int64_t>(first, 0);
        last = std::min<std::int64_t>(last, count - 1);
        for (auto i = first; i <= last; ++i) {
            const double start = static_cast<double>(i) * cfg.hop;
            const double overlap = std::min(n.offset, start + cfg.window_length) - std::max(n.onset, start);
            if (overlap > kMinimumOverlap) weights(n.pitch % 12, i) += note_weight(n, overlap, cfg.weighting);
        }
    }
    return weights;
}

FeatureSeries cloud_diameter_series(const Performance& perf, const WindowConfig& cfg,
                                    const SpiralParams<double>& params) {
    validate(params);
    const auto weights = windowed_weights(perf, cfg);
    FeatureSeries out;
    for (Eigen::Index i = 0; i < weights.cols(); ++i)
        if (auto d = cloud_diameter<double>(weights.col(i), params)) out.push(static_cast<double>(i) * cfg.hop, *d);
    return out;
}

FeatureSeries cloud_momentum(const Performance& perf, const WindowConfig& cfg, const SpiralParams<double>& params) {
    validate(params);
    const auto weights = windowed_weights(perf, cfg);
    FeatureSeries out;
    std::optional<SpiralPoint<double>> previous;
    for (Eigen::Index i = 0; i < weights.cols(); ++i) {
        auto ce = center_of_effect<double>(weights.col(i), params);
        if (ce && previous) out.push(static_cast<double>(i) * cfg.hop, (*ce - *previous).norm());
        previous = ce;  // an empty window breaks the chain
    }
    return out;
}

}  // namespace pianoeval
