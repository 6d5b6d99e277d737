#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "pianoeval/midi.hpp"

namespace pianoeval {

inline constexpr int kPitchCount = 128;

/// Binary pitch x frame activity. Column t is frame t, row p is MIDI pitch p.
using RollMatrix = Eigen::Array<std::uint8_t, kPitchCount, Eigen::Dynamic>;

struct PianoRoll {
    RollMatrix active;
    double frame_length = 0.010;

    Eigen::Index frames() const { return active.cols(); }
};

/// floor / ceil of t / frame_length, snapping ratios within 1e-9 of an integer.
std::int64_t frame_floor(double t, double frame_length);
std::int64_t frame_ceil(double t, double frame_length);

PianoRoll build_piano_roll(const Performance& perf, double frame_length = 0.010);

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const PRF&, const PRF&) = default;
};

/// Precision/recall/F1 from counts, with 0 for an empty denominator.
PRF prf_from_counts(std::size_t true_positive, std::size_t n_est, std::size_t n_ref);

PRF frame_metrics(const PianoRoll& ref, const PianoRoll& est);

enum class MatchMode { onset, onset_offset, onset_offset_velocity };

struct MatchTolerances {
    double onset = 0.05;
    double offset_min = 0.05;
    double offset_ratio = 0.2;
    double velocity = 0.1;
};

/// Slack added to every tolerance comparison so that values on the boundary survive float rounding.
inline constexpr double kToleranceSlack = 1e-9;

struct NoteMatching {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (ref index, est index)
    std::vector<std::size_t> unmatched_ref;
    std::vector<std::size_t> unmatched_est;
};

/// Undirected bipartite graph as an adjacency list from ref index to est indices.
using CandidateGraph = std::vector<std::vector<std::size_t>>;

/// Pairs satisfying the onset (and, if requested, offset and velocity) criteria.
CandidateGraph candidate_pairs(std::span<const Note> ref, std::span<const Note> est, MatchMode mode,
                               const MatchTolerances& tol = {});

/// Maximum-cardinality matching (Hopcroft-Karp). Each ref is seeded with its first free candidate.
std::vector<std::pair<std::size_t, std::size_t>> maximum_matching(const CandidateGraph& graph, std::size_t n_est);

NoteMatching match_notes(std::span<const Note> ref, std::span<const Note> est, MatchMode mode,
                         const MatchTolerances& tol = {});

PRF note_metrics(std::span<const Note> ref, std::span<const Note> est, MatchMode mode,
                 const MatchTolerances& tol = {});

}  // namespace pianoeval
