#include "pianoeval/streams.hpp"

#include <algorithm>

namespace pianoeval {

std::vector<OnsetCluster> cluster_onsets(std::span<const Note> sorted_notes, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("chord_epsilon must be positive");
    std::vector<OnsetCluster> clusters;
    std::size_t i = 0;
    while (i < sorted_notes.size()) {
        const double anchor = sorted_notes[i].onset;
        std::size_t j = i + 1;
        while (j < sorted_notes.size() && sorted_notes[j].onset - anchor < eps) ++j;
        clusters.push_back({i, j});
        i = j;
    }
    return clusters;
}

namespace {

// Picks one note per cluster; `better(a, b)` is true when a beats b on pitch.
// Equal pitch falls back to longer duration, then to the earlier note in sort order.
template <class PitchBetter>
std::vector<Note> skyline(const Performance& perf, const StreamConfig& cfg, PitchBetter better) {
    std::vector<Note> line;
    const auto clusters = cluster_onsets(perf.notes, cfg.chord_epsilon);
    line.reserve(clusters.size());
    for (const auto& c : clusters) {
        std::size_t best = c.begin;
        for (std::size_t k = c.begin + 1; k < c.end; ++k) {
            const Note& cand = perf.notes[k];
            const Note& cur = perf.notes[best];
            if (better(cand.pitch, cur.pitch) || (cand.pitch == cur.pitch && cand.duration() > cur.duration()))
                best = k;
        }
        line.push_back(perf.notes[best]);
    }
    return line;
}

}  // namespace

std::vector<Note> extract_melody(const Performance& perf, const StreamConfig& cfg) {
    return skyline(perf, cfg, [](int a, int b) { return a > b; });
}

std::vector<Note> extract_bass(const Performance& perf, const StreamConfig& cfg) {
    return skyline(perf, cfg, [](int a, int b) { return a < b; });
}

std::vector<Note> extract_accompaniment(const Performance& perf, std::span<const Note> melody) {
    std::vector<Note> remaining(melody.begin(), melody.end());
    std::sort(remaining.begin(), remaining.end(), note_less);

    std::vector<Note> out;
    out.reserve(perf.notes.size() >= melody.size() ? perf.notes.size() - melody.size() : 0);
    std::size_t j = 0;
    for (const Note& n : perf.notes) {
        if (j < remaining.size() && note_less(remaining[j], n))
            throw StreamContractError("melody note absent from performance");
        if (j < remaining.size() && remaining[j] == n)
            ++j;
        else
            out.push_back(n);
    }
    if (j != remaining.size()) throw StreamContractError("melody note absent from performance");
    return out;
}

Streams split_streams(const Performance& perf, const StreamConfig& cfg) {
    Streams s;
    s.melody = extract_melody(perf, cfg);
    s.bass = extract_bass(perf, cfg);
    s.accompaniment = extract_accompaniment(perf, s.melody);
    return s;
}

}  // namespace pianoeval
