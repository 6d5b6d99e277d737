#include <doctest.h>

#include <algorithm>

#include "generators.hpp"
#include "pianoeval/streams.hpp"

using namespace pianoeval;

namespace {

Performance at_onsets(std::initializer_list<double> onsets) {
    std::vector<Note> notes;
    int pitch = 60;
    for (double t : onsets) notes.push_back({t, t + 0.2, pitch++, 64});
    return Performance::from_notes(notes);
}

// C4 E4 at 0.0, D5 at 0.5, B3 G4 at 1.0
Performance three_clusters() {
    return Performance::from_notes(
        {{0.0, 0.4, 60, 64}, {0.0, 0.4, 64, 64}, {0.5, 0.9, 74, 64}, {1.0, 1.5, 59, 64}, {1.0, 1.5, 67, 64}});
}

}  // namespace

TEST_CASE("cluster_onsets") {
    CHECK(cluster_onsets(at_onsets({0.00, 0.01, 0.50}), 0.03) == std::vector<OnsetCluster>{{0, 2}, {2, 3}});
    CHECK(cluster_onsets(Performance{}, 0.03).empty());
    // anchored at the first onset, not chained
    CHECK(cluster_onsets(at_onsets({0.00, 0.02, 0.04}), 0.03) == std::vector<OnsetCluster>{{0, 2}, {2, 3}});
    CHECK_THROWS(cluster_onsets(at_onsets({0.0}), 0.0));
}

TEST_CASE("melody and bass") {
    const auto chord = Performance::from_notes({{0.0, 1.0, 60, 64}, {0.0, 1.0, 64, 64}, {0.0, 1.0, 67, 64}});
    CHECK(extract_melody(chord).at(0).pitch == 67);
    CHECK(extract_bass(chord).at(0).pitch == 60);

    const auto single = Performance::from_notes({{0.3, 0.6, 50, 20}});
    CHECK(extract_melody(single) == single.notes);
    CHECK(extract_bass(single) == single.notes);

    auto pitches = [](const std::vector<Note>& v) {
        std::vector<int> p;
        for (const auto& n : v) p.push_back(n.pitch);
        return p;
    };
    CHECK(pitches(extract_melody(three_clusters())) == std::vector<int>{64, 74, 67});
    CHECK(pitches(extract_bass(three_clusters())) == std::vector<int>{60, 74, 59});
}

TEST_CASE("equal-pitch tie prefers the longer note") {
    const auto perf = Performance::from_notes({{0.0, 0.3, 72, 50}, {0.01, 0.9, 72, 60}, {0.0, 0.5, 48, 40}});
    CHECK(extract_melody(perf).at(0).velocity == 60);
}

TEST_CASE("melody offsets are not truncated") {
    const auto perf = Performance::from_notes({{0.0, 2.0, 80, 64}, {0.5, 0.7, 81, 64}});
    const auto mel = extract_melody(perf);
    REQUIRE(mel.size() == 2);
    CHECK(mel[0].offset == 2.0);
}

TEST_CASE("accompaniment") {
    const auto perf = three_clusters();
    CHECK(extract_accompaniment(perf, perf.notes).empty());
    CHECK(extract_accompaniment(perf, {}) == perf.notes);
    const std::vector<Note> mel{perf.notes[1], perf.notes[4]};
    const auto acc = extract_accompaniment(perf, mel);
    CHECK(acc == std::vector<Note>{perf.notes[0], perf.notes[2], perf.notes[3]});
    const std::vector<Note> foreign{{9.0, 9.5, 10, 10}};
    CHECK_THROWS_AS(extract_accompaniment(perf, foreign), StreamContractError);
}

TEST_CASE("property: partition, dominance and determinism") {
    testsupport::Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const auto perf = testsupport::random_performance(rng, {1, 120});
        const auto s = split_streams(perf);
        CHECK(s.melody.size() + s.accompaniment.size() == perf.size());

        std::vector<Note> merged = s.melody;
        merged.insert(merged.end(), s.accompaniment.begin(), s.accompaniment.end());
        std::sort(merged.begin(), merged.end(), note_less);
        CHECK(merged == perf.notes);

        const auto clusters = cluster_onsets(perf, StreamConfig{}.chord_epsilon);
        REQUIRE(clusters.size() == s.melody.size());
        REQUIRE(clusters.size() == s.bass.size());
        for (std::size_t c = 0; c < clusters.size(); ++c)
            for (std::size_t i = clusters[c].begin; i < clusters[c].end; ++i) {
                CHECK(s.melody[c].pitch >= perf.notes[i].pitch);
                CHECK(s.bass[c].pitch <= perf.notes[i].pitch);
            }
        for (std::size_t i = 1; i < s.melody.size(); ++i) CHECK(s.melody[i].onset > s.melody[i - 1].onset);

        const auto again = split_streams(perf);
        CHECK(again.melody == s.melody);
        CHECK(again.bass == s.bass);
        CHECK(again.accompaniment == s.accompaniment);
    }
}
