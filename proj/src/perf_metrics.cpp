#include "pianoeval/perf_metrics.hpp"

#include <algorithm>
#include <limits>

namespace pianoeval {

std::array<std::optional<double>, kMusicalMetricCount> MusicalMetrics::values() const {
    return {melody_ioi, accompaniment_ioi, melody_kor, bass_kor, ratio_kor, cloud_diameter, cloud_momentum, dynamics};
}

MusicalMetrics MusicalMetrics::from_values(const std::array<std::optional<double>, kMusicalMetricCount>& v) {
    return MusicalMetrics{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7]};
}

FeatureSeries ioi_series(std::span<const Note> stream, double chord_eps) {
    FeatureSeries out;
    for (std::size_t i = 1; i < stream.size(); ++i) {
        const double ioi = stream[i].onset - stream[i - 1].onset;
        out.push(stream[i].onset, ioi < chord_eps ? 0.0 : ioi);
    }
    return out;
}

FeatureSeries kor_series(std::span<const Note> stream, double min_ioi) {
    FeatureSeries out;
    for (std::size_t i = 1; i < stream.size(); ++i) {
        const Note& cur = stream[i - 1];
        const double next_onset = stream[i].onset;
        const double ioi = next_onset - cur.onset;
        if (ioi < min_ioi) continue;
        out.push(next_onset, (cur.offset - next_onset) / ioi);
    }
    return out;
}

std::vector<double> grid_times(double t0, double t1, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
    std::vector<double> times;
    if (!(t0 <= t1 + kGridSlack)) return times;
    for (std::size_t k = 0;; ++k) {
        const double t = t0 + static_cast<double>(k) * step;
        if (t > t1 + kGridSlack) break;
        times.push_back(t);
    }
    return times;
}

std::vector<std::optional<double>> resample_to_grid(const FeatureSeries& series, double t0, double t1, double step) {
    const auto times = grid_times(t0, t1, step);
    std::vector<std::optional<double>> out(times.size());
    std::size_t next = 0;  // first sample not yet at or before the grid time
    for (std::size_t k = 0; k < times.size(); ++k) {
        while (next < series.size() && series[next].time <= times[k] + kGridSlack) ++next;
        if (next > 0) out[k] = series[next - 1].value;
    }
    return out;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    using Map = Eigen::Map<const Eigen::ArrayXd>;
    if (a.size() != b.size()) throw std::invalid_argument("pearson: length mismatch");
    return pearson(Map(a.data(), static_cast<Eigen::Index>(a.size())), Map(b.data(), static_cast<Eigen::Index>(b.size())));
}

namespace {

// Velocity heard from a monophonic-by-onset stream at time t, scanning back only as far
// as a note could still be sounding or within the hold horizon.
class VelocityTrack {
public:
    VelocityTrack(std::span<const Note> stream, double hold) : stream_(stream), hold_(hold) {
        for (const auto& n : stream) max_duration_ = std::max(max_duration_, n.duration());
    }

    std::optional<int> at(double t) {
        while (prefix_ < stream_.size() && stream_[prefix_].onset <= t + kGridSlack) ++prefix_;
        const Note* sounding = nullptr;
        const Note* ended = nullptr;
        const double horizon = t - hold_ - max_duration_;
        for (std::size_t i = prefix_; i-- > 0;) {
            const Note& n = stream_[i];
            if (n.onset < horizon) break;
            if (n.offset > t) {
                if (!sounding) sounding = &n;  // latest onset wins
            } else if (n.offset >= t - hold_ && (!ended || n.offset > ended->offset)) {
                ended = &n;
            }
        }
        if (sounding) return sounding->velocity;
        if (ended) return ended->velocity;
        return std::nullopt;
    }

private:
    std::span<const Note> stream_;
    double hold_;
    double max_duration_ = 0.0;
    std::size_t prefix_ = 0;
};

double stream_end(std::span<const Note> a, std::span<const Note> b) {
    double end = 0.0;
    for (const auto& n : a) end = std::max(end, n.offset);
    for (const auto& n : b) end = std::max(end, n.offset);
    return end;
}

}  // namespace

FeatureSeries dynamics_series(std::span<const Note> melody, std::span<const Note> bass, const GridConfig& grid,
                              double hold_horizon) {
    FeatureSeries out;
    if (melody.empty() || bass.empty()) return out;
    VelocityTrack mel(melody, hold_horizon), low(bass, hold_horizon);
    const double end = stream_end(melody, bass);
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * grid.step;
        if (t > end + kGridSlack) break;
        const auto vm = mel.at(t);
        const auto vb = low.at(t);
        if (vm && vb) out.push(t, std::log(static_cast<double>(*vm) / static_cast<double>(*vb)));
    }
    return out;
}

FeatureSeries ratio_kor_series(const FeatureSeries& melody_kor, const FeatureSeries& bass_kor, const GridConfig& grid) {
    FeatureSeries out;
    if (melody_kor.empty() || bass_kor.empty()) return out;
    const double t0 = std::max(melody_kor[0].time, bass_kor[0].time);
    const double t1 = std::min(melody_kor.samples().back().time, bass_kor.samples().back().time);
    const auto times = grid_times(t0, t1, grid.step);
    const auto m = resample_to_grid(melody_kor, t0, t1, grid.step);
    const auto b = resample_to_grid(bass_kor, t0, t1, grid.step);
    for (std::size_t k = 0; k < times.size(); ++k)
        if (m[k] && b[k] && std::abs(*b[k]) >= 1e-6) out.push(times[k], *m[k] / *b[k]);
    return out;
}

std::optional<double> correlate_series(const FeatureSeries& ref, const FeatureSeries& est, const GridConfig& grid) {
    if (ref.empty() || est.empty()) return std::nullopt;
    const double t0 = std::max(ref[0].time, est[0].time);
    const double t1 = std::min(ref.samples().back().time, est.samples().back().time);
    const auto a = resample_to_grid(ref, t0, t1, grid.step);
    const auto b = resample_to_grid(est, t0, t1, grid.step);
    std::vector<double> x, y;
    x.reserve(a.size());
    y.reserve(a.size());
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a[k] && b[k]) {
            x.push_back(*a[k]);
            y.push_back(*b[k]);
        }
    if (x.size() < static_cast<std::size_t>(grid.min_samples)) return std::nullopt;
    return pearson(x, y);
}

void validate(const MusicalConfig& cfg) {
    if (!(cfg.streams.chord_epsilon > 0.0)) throw std::invalid_argument("chord_epsilon must be > 0");
    if (!(cfg.grid.step > 0.0)) throw std::invalid_argument("grid step must be > 0");
    if (cfg.grid.min_samples < 2) throw std::invalid_argument("min_samples must be >= 2");
    if (!(cfg.windows.window_length > 0.0) || !(cfg.windows.hop > 0.0) || cfg.windows.hop > cfg.windows.window_length)
        throw std::invalid_argument("window config requires window_length > 0 and 0 < hop <= window_length");
    if (!(cfg.spiral.radius > 0.0) || !(cfg.spiral.rise > 0.0))
        throw std::invalid_argument("spiral radius and rise must be > 0");
    if (!(cfg.kor_min_ioi >= 0.0)) throw std::invalid_argument("kor_min_ioi must be >= 0");
    if (!(cfg.dynamics_hold >= 0.0)) throw std::invalid_argument("dynamics hold horizon must be >= 0");
}

FeatureSet extract_features(const Performance& perf, const MusicalConfig& cfg) {
    const Streams s = split_streams(perf, cfg.streams);
    FeatureSet f;
    f.melody_ioi = ioi_series(s.melody, cfg.streams.chord_epsilon);
    f.accompaniment_ioi = ioi_series(s.accompaniment, cfg.streams.chord_epsilon);
    f.melody_kor = kor_series(s.melody, cfg.kor_min_ioi);
    f.bass_kor = kor_series(s.bass, cfg.kor_min_ioi);
    f.ratio_kor = ratio_kor_series(f.melody_kor, f.bass_kor, cfg.grid);
    f.cloud_diameter = cloud_diameter_series(perf, cfg.windows, cfg.spiral);
    f.cloud_momentum = cloud_momentum(perf, cfg.windows, cfg.spiral);
    f.dynamics = dynamics_series(s.melody, s.bass, cfg.grid, cfg.dynamics_hold);
    return f;
}

MusicalMetrics compute_musical_metrics(const Performance& ref, const Performance& est, const MusicalConfig& cfg) {
    validate(cfg);
    const FeatureSet a = extract_features(ref, cfg);
    const FeatureSet b = extract_features(est, cfg);
    const auto& g = cfg.grid;
    return MusicalMetrics{
        correlate_series(a.melody_ioi, b.melody_ioi, g),         correlate_series(a.accompaniment_ioi, b.accompaniment_ioi, g),
        correlate_series(a.melody_kor, b.melody_kor, g),         correlate_series(a.bass_kor, b.bass_kor, g),
        correlate_series(a.ratio_kor, b.ratio_kor, g),           correlate_series(a.cloud_diameter, b.cloud_diameter, g),
        correlate_series(a.cloud_momentum, b.cloud_momentum, g), correlate_series(a.dynamics, b.dynamics, g),
    };
}

}  // namespace pianoeval
