#include "generators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace testsupport {

using pianoeval::Note;
using pianoeval::Performance;

Performance random_performance(Rng& rng, const PerformanceShape& shape) {
    std::uniform_int_distribution<int> count(shape.min_notes, shape.max_notes);
    std::uniform_real_distribution<double> tempo(0.6, 1.6);
    std::uniform_real_distribution<double> ioi(shape.min_ioi, shape.max_ioi);
    std::uniform_int_distribution<int> chord(1, shape.max_chord);
    std::uniform_int_distribution<int> pitch(shape.min_pitch, shape.max_pitch);
    std::uniform_int_distribution<int> velocity(20, 120);
    std::uniform_real_distribution<double> hold(0.3, 1.8);
    std::uniform_real_distribution<double> spread(0.0, 0.015);

    const int target = count(rng);
    const double scale = tempo(rng);
    std::vector<Note> notes;
    double t = 0.05;
    while (static_cast<int>(notes.size()) < target) {
        const double step = ioi(rng) * scale;
        const int k = std::min(chord(rng), target - static_cast<int>(notes.size()));
        std::vector<int> used;
        for (int j = 0; j < k; ++j) {
            int p = pitch(rng);
            while (std::find(used.begin(), used.end(), p) != used.end()) p = pitch(rng);
            used.push_back(p);
            const double on = t + (j == 0 ? 0.0 : spread(rng));
            notes.push_back({on, on + step * hold(rng) + 0.02, p, velocity(rng)});
        }
        t += step;
    }
    // keep same-pitch notes from overlapping so that the file form is unambiguous
    std::sort(notes.begin(), notes.end(), pianoeval::note_less);
    for (std::size_t i = 0; i < notes.size(); ++i)
        for (std::size_t j = i + 1; j < notes.size(); ++j)
            if (notes[j].pitch == notes[i].pitch) {
                notes[i].offset = std::min(notes[i].offset, notes[j].onset - 0.005);
                break;
            }
    for (auto& n : notes) n.offset = std::max(n.offset, n.onset + 0.01);
    return Performance::from_notes(std::move(notes));
}

std::vector<Note> random_small_notes(Rng& rng, int max_notes) {
    std::uniform_int_distribution<int> count(0, max_notes);
    std::uniform_int_distribution<int> slot(0, 40);
    std::uniform_int_distribution<int> pitch(60, 64);
    std::uniform_int_distribution<int> length(1, 12);
    std::uniform_int_distribution<int> velocity(1, 127);
    const int n = count(rng);
    std::vector<Note> notes;
    for (int i = 0; i < n; ++i) {
        const double on = slot(rng) * 0.025;
        notes.push_back({on, on + length(rng) * 0.05, pitch(rng), velocity(rng)});
    }
    std::sort(notes.begin(), notes.end(), pianoeval::note_less);
    return notes;
}

Performance jitter_onsets(const Performance& perf, double sigma, Rng& rng) {
    std::vector<Note> notes = perf.notes;
    if (sigma > 0.0) {
        std::normal_distribution<double> d(0.0, sigma);
        for (auto& n : notes) {
            const double dt = d(rng);
            const double dur = n.duration();
            n.onset = std::max(0.0, n.onset + dt);
            n.offset = n.onset + dur;
        }
    }
    return Performance::from_notes(std::move(notes));
}

Performance velocity_noise(const Performance& perf, double sigma, Rng& rng) {
    std::vector<Note> notes = perf.notes;
    if (sigma > 0.0) {
        std::normal_distribution<double> d(0.0, sigma);
        for (auto& n : notes) n.velocity = std::clamp(static_cast<int>(std::lround(n.velocity + d(rng))), 1, 127);
    }
    return Performance::from_notes(std::move(notes));
}

pianoeval::AudioBuffer test_tone(double seconds, int sample_rate, int channels) {
    const auto frames = static_cast<Eigen::Index>(seconds * sample_rate);
    pianoeval::AudioBuffer a;
    a.sample_rate = sample_rate;
    a.samples.resize(frames, channels);
    for (Eigen::Index i = 0; i < frames; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        for (int c = 0; c < channels; ++c)
            a.samples(i, c) = static_cast<float>(0.4 * std::sin(2 * std::numbers::pi * 220.0 * t + c) +
                                                 0.2 * std::sin(2 * std::numbers::pi * 554.37 * t) +
                                                 0.1 * std::sin(2 * std::numbers::pi * 1318.5 * t));
    }
    return a;
}

}  // namespace testsupport
