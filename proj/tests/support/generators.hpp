#pragma once

// Seeded random inputs for property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "pianoeval/audio.hpp"
#include "pianoeval/midi.hpp"

namespace testsupport {

using Rng = std::mt19937_64;

struct PerformanceShape {
    int min_notes = 10;
    int max_notes = 500;
    double min_ioi = 0.06;        // between successive cluster onsets, seconds
    double max_ioi = 0.6;
    int max_chord = 4;
    int min_pitch = 28;
    int max_pitch = 100;
};

/// Melody-over-chords texture: clusters of 1..max_chord notes with distinct pitches,
/// time scale drawn per performance to vary the tempo.
pianoeval::Performance random_performance(Rng& rng, const PerformanceShape& shape = {});

/// Small note list with onset times on a coarse grid so that ties and near-tolerance pairs occur.
std::vector<pianoeval::Note> random_small_notes(Rng& rng, int max_notes = 12);

/// Perturbs an estimate: gaussian onset jitter (seconds), offsets move with onsets.
pianoeval::Performance jitter_onsets(const pianoeval::Performance& perf, double sigma, Rng& rng);

/// Gaussian velocity noise, clamped to 1..127.
pianoeval::Performance velocity_noise(const pianoeval::Performance& perf, double sigma, Rng& rng);

/// Sum of a few sinusoids, `seconds` long, mono.
pianoeval::AudioBuffer test_tone(double seconds, int sample_rate = 16000, int channels = 1);

}  // namespace testsupport
