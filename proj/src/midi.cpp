#include "pianoeval/midi.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <optional>
#include <tuple>

namespace pianoeval {

bool note_less(const Note& a, const Note& b) {
    return std::tie(a.onset, a.pitch, a.offset, a.velocity) < std::tie(b.onset, b.pitch, b.offset, b.velocity);
}

Performance Performance::from_notes(std::vector<Note> notes) {
    std::stable_sort(notes.begin(), notes.end(), note_less);
    double end = 0.0;
    for (const auto& n : notes) end = std::max(end, n.offset);
    return Performance{std::move(notes), end};
}

// ---------------------------------------------------------------------------
// Tempo map

TempoMap::TempoMap(int ticks_per_quarter, std::vector<TempoEvent> events)
    : ticks_per_quarter_(ticks_per_quarter) {
    if (ticks_per_quarter <= 0) throw std::invalid_argument("ticks_per_quarter must be positive");
    std::stable_sort(events.begin(), events.end(),
                     [](const TempoEvent& a, const TempoEvent& b) { return a.tick < b.tick; });
    for (const auto& e : events) {
        if (e.tick < 0) throw std::invalid_argument("tempo event at negative tick");
        if (e.microseconds_per_quarter <= 0) throw std::invalid_argument("tempo must be positive");
        // the last of several changes on one tick wins
        if (!events_.empty() && events_.back().tick == e.tick)
            events_.back() = e;
        else
            events_.push_back(e);
    }
    if (events_.empty() || events_.front().tick != 0)
        events_.insert(events_.begin(), TempoEvent{0, kDefaultTempo});

    scaled_prefix_.resize(events_.size());
    scaled_prefix_[0] = 0;
    for (std::size_t i = 1; i < events_.size(); ++i) {
        const auto span = events_[i].tick - events_[i - 1].tick;
        scaled_prefix_[i] = scaled_prefix_[i - 1] + span * events_[i - 1].microseconds_per_quarter;
    }
}

double TempoMap::seconds_at(std::int64_t tick) const {
    if (tick <= 0) return 0.0;
    auto it = std::upper_bound(events_.begin(), events_.end(), tick,
                               [](std::int64_t t, const TempoEvent& e) { return t < e.tick; });
    const auto i = static_cast<std::size_t>(std::distance(events_.begin(), it)) - 1;
    const std::int64_t scaled =
        scaled_prefix_[i] + (tick - events_[i].tick) * events_[i].microseconds_per_quarter;
    return static_cast<double>(scaled) / (static_cast<double>(ticks_per_quarter_) * 1e6);
}

double ticks_to_seconds(std::int64_t tick, const TempoMap& map) { return map.seconds_at(tick); }

// ---------------------------------------------------------------------------
// SMF decoding

MidiParseError::MidiParseError(const std::string& what, std::size_t byte_offset)
    : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) + ")"),
      byte_offset_(byte_offset) {}

namespace {

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, std::size_t base)
        : bytes_(bytes), base_(base) {}

    std::size_t offset() const { return base_ + pos_; }
    bool at_end() const { return pos_ >= bytes_.size(); }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    std::uint8_t peek() const {
        require(1);
        return bytes_[pos_];
    }
    std::uint8_t u8() {
        require(1);
        return bytes_[pos_++];
    }
    std::uint32_t u16() {
        require(2);
        std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 8) | bytes_[pos_ + 1];
        pos_ += 2;
        return v;
    }
    std::uint32_t u32() {
        require(4);
        std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 24) | (std::uint32_t{bytes_[pos_ + 1]} << 16) |
                          (std::uint32_t{bytes_[pos_ + 2]} << 8) | bytes_[pos_ + 3];
        pos_ += 4;
        return v;
    }
    std::uint32_t varlen() {
        const auto start = offset();
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            const auto b = u8();
            v = (v << 7) | (b & 0x7F);
            if ((b & 0x80) == 0) return v;
        }
        throw MidiParseError("variable-length quantity longer than 4 bytes", start);
    }
    std::span<const std::uint8_t> take(std::size_t n) {
        require(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void skip(std::size_t n) { take(n); }

private:
    void require(std::size_t n) const {
        if (remaining() < n) throw MidiParseError("unexpected end of data", offset());
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t base_;
    std::size_t pos_ = 0;
};

enum class EventKind { note_on, note_off, sustain, tempo };

struct RawEvent {
    std::int64_t tick;
    EventKind kind;
    int channel;
    int data1;  // pitch, controller value, or unused
    int data2;  // velocity or unused
    std::int64_t tempo;
};

struct RawTrack {
    std::vector<RawEvent> events;
    std::int64_t end_tick = 0;
};

int data_byte(ByteReader& r) {
    const auto at = r.offset();
    const auto b = r.u8();
    if (b & 0x80) throw MidiParseError("status byte where a data byte was expected", at);
    return b;
}

RawTrack decode_track(ByteReader r) {
    RawTrack track;
    std::int64_t tick = 0;
    std::optional<std::uint8_t> running;

    while (!r.at_end()) {
        tick += r.varlen();
        const auto status_at = r.offset();
        std::uint8_t status = r.peek();
        if (status & 0x80) {
            r.u8();
        } else {
            if (!running) throw MidiParseError("dangling running status", status_at);
            status = *running;
        }

        if (status == 0xFF) {
            running.reset();
            const auto type = r.u8();
            const auto len = r.varlen();
            const auto payload_at = r.offset();
            auto payload = r.take(len);
            if (type == 0x2F) {
                track.end_tick = tick;
                return track;
            }
            if (type == 0x51) {
                if (len != 3) throw MidiParseError("tempo meta event with length " + std::to_string(len), payload_at);
                const std::int64_t uspq = (std::int64_t{payload[0]} << 16) | (std::int64_t{payload[1]} << 8) | payload[2];
                if (uspq == 0) throw MidiParseError("zero tempo", payload_at);
                track.events.push_back({tick, EventKind::tempo, 0, 0, 0, uspq});
            }
        } else if (status == 0xF0 || status == 0xF7) {
            running.reset();
            r.skip(r.varlen());
        } else if (status >= 0xF0) {
            // system common / realtime bytes are not valid in a file but appear in the wild
            running.reset();
            const int n = status == 0xF2 ? 2 : (status == 0xF1 || status == 0xF3) ? 1 : 0;
            for (int i = 0; i < n; ++i) data_byte(r);
        } else {
            running = status;
            const int kind = status & 0xF0;
            const int channel = status & 0x0F;
            const int d1 = data_byte(r);
            const int d2 = (kind == 0xC0 || kind == 0xD0) ? 0 : data_byte(r);
            if (kind == 0x90 && d2 > 0)
                track.events.push_back({tick, EventKind::note_on, channel, d1, d2, 0});
            else if (kind == 0x80 || kind == 0x90)
                track.events.push_back({tick, EventKind::note_off, channel, d1, 0, 0});
            else if (kind == 0xB0 && d1 == 64)
                track.events.push_back({tick, EventKind::sustain, channel, d2, 0, 0});
        }
        track.end_tick = tick;
    }
    return track;
}

void pair_notes(const RawTrack& track, const TempoMap& tempo, std::vector<Note>& out) {
    struct Open {
        std::int64_t tick;
        int velocity;
    };
    std::array<std::array<std::optional<Open>, 128>, 16> open{};

    auto close = [&](int channel, int pitch, std::int64_t tick) {
        auto& slot = open[channel][pitch];
        if (!slot) return;
        out.push_back(Note{tempo.seconds_at(slot->tick), tempo.seconds_at(tick), pitch, slot->velocity});
        slot.reset();
    };

    for (const auto& e : track.events) {
        if (e.kind == EventKind::note_on) {
            close(e.channel, e.data1, e.tick);
            open[e.channel][e.data1] = Open{e.tick, e.data2};
        } else if (e.kind == EventKind::note_off) {
            close(e.channel, e.data1, e.tick);
        }
    }
    for (int c = 0; c < 16; ++c)
        for (int p = 0; p < 128; ++p) close(c, p, std::max(track.end_tick, open[c][p] ? open[c][p]->tick : 0));
}

void enforce_minimum_duration(std::vector<Note>& notes) {
    for (auto& n : notes)
        if (n.offset <= n.onset) n.offset = n.onset + kMinimumNoteDuration;
}

}  // namespace

MidiContents read_midi_contents(std::span<const std::uint8_t> bytes) {
    ByteReader header(bytes, 0);
    if (bytes.size() < 14) throw MidiParseError("malformed header chunk: file too short", 0);
    auto id = header.take(4);
    if (!std::equal(id.begin(), id.end(), "MThd")) throw MidiParseError("malformed header chunk: missing MThd", 0);
    const auto header_len = header.u32();
    if (header_len < 6) throw MidiParseError("malformed header chunk: length " + std::to_string(header_len), 4);
    if (header_len > bytes.size() - 8) throw MidiParseError("malformed header chunk: length exceeds file", 4);
    const auto format = header.u16();
    header.u16();  // declared track count; actual MTrk chunks are authoritative
    const auto division = header.u16();
    if (format == 2) throw MidiParseError("unsupported SMF format 2", 8);
    if (format > 2) throw MidiParseError("malformed header chunk: format " + std::to_string(format), 8);
    if (division & 0x8000) throw MidiParseError("unsupported SMPTE time division", 12);
    if (division == 0) throw MidiParseError("malformed header chunk: zero ticks per quarter", 12);

    std::vector<RawTrack> tracks;
    std::size_t pos = 8 + header_len;
    while (bytes.size() - pos >= 8) {
        ByteReader chunk(bytes.subspan(pos, 8), pos);
        auto cid = chunk.take(4);
        const std::size_t len = chunk.u32();
        if (len > bytes.size() - pos - 8) throw MidiParseError("track length mismatch: chunk runs past end of file", pos + 4);
        if (std::equal(cid.begin(), cid.end(), "MTrk"))
            tracks.push_back(decode_track(ByteReader(bytes.subspan(pos + 8, len), pos + 8)));
        pos += 8 + len;
    }
    if (pos != bytes.size()) throw MidiParseError("track length mismatch: trailing partial chunk", pos);

    std::vector<TempoEvent> tempo_events;
    for (const auto& t : tracks)
        for (const auto& e : t.events)
            if (e.kind == EventKind::tempo) tempo_events.push_back({e.tick, e.tempo});
    TempoMap tempo(static_cast<int>(division), std::move(tempo_events));

    std::vector<Note> notes;
    std::vector<PedalEvent> pedals;
    for (const auto& t : tracks) {
        pair_notes(t, tempo, notes);
        for (const auto& e : t.events)
            if (e.kind == EventKind::sustain) pedals.push_back({tempo.seconds_at(e.tick), e.data1});
    }
    std::stable_sort(pedals.begin(), pedals.end(), [](const PedalEvent& a, const PedalEvent& b) { return a.time < b.time; });

    return MidiContents{Performance::from_notes(std::move(notes)), std::move(pedals), std::move(tempo)};
}

Performance parse_midi(std::span<const std::uint8_t> bytes, PedalMode pedal_mode) {
    auto contents = read_midi_contents(bytes);
    Performance perf = pedal_mode == PedalMode::extend
                           ? apply_sustain_pedal(contents.performance, contents.pedals)
                           : std::move(contents.performance);
    enforce_minimum_duration(perf.notes);
    return Performance::from_notes(std::move(perf.notes));
}

// ---------------------------------------------------------------------------
// Sustain pedal

Performance apply_sustain_pedal(const Performance& perf, std::span<const PedalEvent> pedals, int threshold) {
    struct Span {
        double down, up;
    };
    std::vector<Span> spans;
    double horizon = perf.end_time;
    bool down = false;
    double start = 0.0;
    for (const auto& p : pedals) {
        horizon = std::max(horizon, p.time);
        if (!down && p.value >= threshold) {
            down = true;
            start = p.time;
        } else if (down && p.value < threshold) {
            down = false;
            spans.push_back({start, p.time});
        }
    }
    if (down) spans.push_back({start, horizon});
    if (spans.empty()) return perf;

    std::array<std::vector<double>, 128> onsets_by_pitch;
    for (const auto& n : perf.notes) onsets_by_pitch[n.pitch].push_back(n.onset);

    std::vector<Note> out = perf.notes;
    for (auto& n : out) {
        auto it = std::upper_bound(spans.begin(), spans.end(), n.offset,
                                   [](double t, const Span& s) { return t < s.down; });
        if (it == spans.begin()) continue;
        const Span& s = *std::prev(it);
        if (n.offset >= s.up) continue;

        double target = s.up;
        const auto& same = onsets_by_pitch[n.pitch];
        auto next = std::upper_bound(same.begin(), same.end(), n.onset);
        if (next != same.end()) target = std::min(target, *next);
        n.offset = std::max(n.offset, target);
    }
    return Performance::from_notes(std::move(out));
}

}  // namespace pianoeval
