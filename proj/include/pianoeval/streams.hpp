#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pianoeval/midi.hpp"

namespace pianoeval {

struct StreamConfig {
    /// Onsets closer than this to a cluster's first onset belong to that cluster (seconds).
    double chord_epsilon = 0.030;
};

/// Half-open index range [begin, end) into a sorted note list.
struct OnsetCluster {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    friend bool operator==(const OnsetCluster&, const OnsetCluster&) = default;
};

std::vector<OnsetCluster> cluster_onsets(std::span<const Note> sorted_notes, double eps);
inline std::vector<OnsetCluster> cluster_onsets(const Performance& perf, double eps) {
    return cluster_onsets(perf.notes, eps);
}

/// Skyline: the highest note of every onset cluster. Offsets are left untouched.
std::vector<Note> extract_melody(const Performance& perf, const StreamConfig& cfg = {});

/// Lowest note of every onset cluster.
std::vector<Note> extract_bass(const Performance& perf, const StreamConfig& cfg = {});

/// Thrown when a melody note handed to `extract_accompaniment` is not in the performance.
class StreamContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

std::vector<Note> extract_accompaniment(const Performance& perf, std::span<const Note> melody);

struct Streams {
    std::vector<Note> melody;
    std::vector<Note> bass;
    std::vector<Note> accompaniment;
};

Streams split_streams(const Performance& perf, const StreamConfig& cfg = {});

}  // namespace pianoeval
