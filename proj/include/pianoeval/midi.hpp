#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pianoeval {

/// A physical note event. Times are in seconds.
struct Note {
    double onset = 0.0;
    double offset = 0.0;
    int pitch = 0;
    int velocity = 1;

    double duration() const { return offset - onset; }

    friend bool operator==(const Note&, const Note&) = default;
};

/// Total order used everywhere a note list is sorted: onset, pitch, offset, velocity.
bool note_less(const Note& a, const Note& b);

/// Ordered note list. Construct through `from_notes` to get the sort and end_time invariants.
struct Performance {
    std::vector<Note> notes;
    double end_time = 0.0;

    static Performance from_notes(std::vector<Note> notes);

    bool empty() const { return notes.empty(); }
    std::size_t size() const { return notes.size(); }
};

struct TempoEvent {
    std::int64_t tick = 0;
    std::int64_t microseconds_per_quarter = 500000;
};

/// Piecewise-constant tempo. Events are kept sorted with a first event at tick 0.
class TempoMap {
public:
    static constexpr std::int64_t kDefaultTempo = 500000;

    explicit TempoMap(int ticks_per_quarter = 480, std::vector<TempoEvent> events = {});

    int ticks_per_quarter() const { return ticks_per_quarter_; }
    const std::vector<TempoEvent>& events() const { return events_; }

    double seconds_at(std::int64_t tick) const;

private:
    int ticks_per_quarter_;
    std::vector<TempoEvent> events_;
    // microseconds x ticks_per_quarter accumulated up to each event, exact integers
    std::vector<std::int64_t> scaled_prefix_;
};

double ticks_to_seconds(std::int64_t tick, const TempoMap& map);

/// Controller-64 value change.
struct PedalEvent {
    double time = 0.0;
    int value = 0;
};

enum class PedalMode { ignore, extend };

/// Thrown for malformed Standard MIDI Files; carries the byte offset of the failure.
class MidiParseError : public std::runtime_error {
public:
    MidiParseError(const std::string& what, std::size_t byte_offset);
    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// Intermediate result of decoding an SMF before pedal processing.
struct MidiContents {
    Performance performance;
    std::vector<PedalEvent> pedals;
    TempoMap tempo_map;
};

MidiContents read_midi_contents(std::span<const std::uint8_t> bytes);

Performance parse_midi(std::span<const std::uint8_t> bytes, PedalMode pedal_mode = PedalMode::extend);

/// Minimum note length assigned to degenerate notes, seconds.
inline constexpr double kMinimumNoteDuration = 0.001;

Performance apply_sustain_pedal(const Performance& perf, std::span<const PedalEvent> pedals,
                                int threshold = 64);

}  // namespace pianoeval
