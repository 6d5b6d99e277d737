#include "pianoeval/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstring>
#include <limits>
#include <random>

#include <unsupported/Eigen/FFT>

namespace pianoeval {

// ---------------------------------------------------------------------------
// WAV

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(std::span<const std::uint8_t> b, std::size_t at) {
    return std::uint32_t{b[at]} | (std::uint32_t{b[at + 1]} << 8) | (std::uint32_t{b[at + 2]} << 16) |
           (std::uint32_t{b[at + 3]} << 24);
}
std::uint16_t le16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
    return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

AudioBuffer read_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
        throw WavError("not a RIFF/WAVE file");

    std::optional<std::uint16_t> format;
    std::uint16_t channels = 0, bits = 0, block_align = 0;
    std::uint32_t sample_rate = 0;
    std::optional<std::span<const std::uint8_t>> data;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::size_t len = le32(bytes, pos + 4);
        const std::size_t body = pos + 8;
        if (len > bytes.size() - body) throw WavError("truncated chunk at byte " + std::to_string(pos));
        if (tag_is(bytes, pos, "fmt ")) {
            if (len < 16) throw WavError("fmt chunk too short");
            format = le16(bytes, body);
            channels = le16(bytes, body + 2);
            sample_rate = le32(bytes, body + 4);
            block_align = le16(bytes, body + 12);
            bits = le16(bytes, body + 14);
            if (*format == kFormatExtensible) {
                if (len < 40) throw WavError("extensible fmt chunk too short");
                format = le16(bytes, body + 24);
            }
        } else if (tag_is(bytes, pos, "data")) {
            data = bytes.subspan(body, len);
        }
        pos = body + len + (len & 1);
    }
    if (!format) throw WavError("missing fmt chunk");
    if (!data) throw WavError("missing data chunk");
    if (channels < 1 || channels > 2) throw WavError("unsupported channel count " + std::to_string(channels));
    if (sample_rate == 0) throw WavError("zero sample rate");
    const bool pcm16 = *format == kFormatPcm && bits == 16;
    const bool float32 = *format == kFormatFloat && bits == 32;
    if (!pcm16 && !float32)
        throw WavError("unsupported codec (format " + std::to_string(*format) + ", " + std::to_string(bits) + " bits)");
    const std::size_t width = bits / 8;
    if (block_align != width * channels) throw WavError("inconsistent block alignment");
    if (data->size() % block_align != 0) throw WavError("truncated data chunk");

    const auto frames = static_cast<Eigen::Index>(data->size() / block_align);
    AudioBuffer out{static_cast<int>(sample_rate), SampleMatrix(frames, channels)};
    const auto raw = *data;
    for (Eigen::Index f = 0; f < frames; ++f)
        for (int c = 0; c < channels; ++c) {
            const std::size_t at = static_cast<std::size_t>(f) * block_align + c * width;
            if (pcm16) {
                out.samples(f, c) = static_cast<float>(static_cast<std::int16_t>(le16(raw, at))) / 32768.0f;
            } else {
                out.samples(f, c) = std::bit_cast<float>(le32(raw, at));
            }
        }
    if (!out.samples.allFinite()) throw WavError("non-finite samples");
    return out;
}

std::vector<std::uint8_t> write_wav(const AudioBuffer& audio, WavEncoding encoding) {
    const int channels = audio.channels();
    if (channels < 1 || channels > 2) throw WavError("unsupported channel count " + std::to_string(channels));
    const std::uint32_t width = encoding == WavEncoding::float32 ? 4 : 2;
    const std::uint32_t block = width * static_cast<std::uint32_t>(channels);
    const std::uint32_t data_len = block * static_cast<std::uint32_t>(audio.frames());

    std::vector<std::uint8_t> out;
    out.reserve(44 + data_len);
    put_tag(out, "RIFF");
    put32(out, 36 + data_len);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put32(out, 16);
    put16(out, encoding == WavEncoding::float32 ? kFormatFloat : kFormatPcm);
    put16(out, static_cast<std::uint16_t>(channels));
    put32(out, static_cast<std::uint32_t>(audio.sample_rate));
    put32(out, static_cast<std::uint32_t>(audio.sample_rate) * block);
    put16(out, static_cast<std::uint16_t>(block));
    put16(out, static_cast<std::uint16_t>(width * 8));
    put_tag(out, "data");
    put32(out, data_len);
    for (Eigen::Index f = 0; f < audio.frames(); ++f)
        for (int c = 0; c < channels; ++c) {
            const float v = audio.samples(f, c);
            if (encoding == WavEncoding::float32) {
                put32(out, std::bit_cast<std::uint32_t>(v));
            } else {
                const float scaled = std::round(std::clamp(v, -1.0f, 1.0f) * 32768.0f);
                put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::clamp(scaled, -32768.0f, 32767.0f))));
            }
        }
    return out;
}

// ---------------------------------------------------------------------------
// Noise

double signal_power(const AudioBuffer& audio) {
    if (audio.empty()) return 0.0;
    return audio.samples.cast<double>().square().mean();
}

AudioBuffer add_noise_snr(const AudioBuffer& audio, double snr_db, std::uint64_t seed) {
    if (std::isnan(snr_db) || snr_db == -std::numeric_limits<double>::infinity())
        throw std::invalid_argument("SNR must be finite or +inf");
    if (snr_db == std::numeric_limits<double>::infinity()) return audio;
    const double ps = signal_power(audio);
    if (!(ps > 0.0)) throw std::invalid_argument("SNR undefined for silent or empty audio");
    const double sigma = std::sqrt(ps / std::pow(10.0, snr_db / 10.0));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    AudioBuffer out = audio;
    for (Eigen::Index c = 0; c < out.samples.cols(); ++c)
        for (Eigen::Index f = 0; f < out.samples.rows(); ++f)
            out.samples(f, c) = static_cast<float>(static_cast<double>(out.samples(f, c)) + gauss(rng));
    return out;
}

// ---------------------------------------------------------------------------
// Convolution

namespace {

Eigen::ArrayXd direct_convolve(const Eigen::Ref<const Eigen::ArrayXd>& x, const Eigen::Ref<const Eigen::ArrayXd>& h) {
    Eigen::ArrayXd y = Eigen::ArrayXd::Zero(x.size() + h.size() - 1);
    for (Eigen::Index i = 0; i < x.size(); ++i) y.segment(i, h.size()) += x(i) * h;
    return y;
}

// Overlap-add with one transform of the impulse response.
Eigen::ArrayXd fft_convolve(const Eigen::Ref<const Eigen::ArrayXd>& x, const Eigen::Ref<const Eigen::ArrayXd>& h) {
    const Eigen::Index m = h.size();
    const auto fft_len = static_cast<Eigen::Index>(std::bit_ceil(static_cast<std::uint64_t>(std::max<Eigen::Index>(2 * m, 4096))));
    const Eigen::Index block = fft_len - m + 1;

    Eigen::FFT<double> fft;
    std::vector<double> buf(static_cast<std::size_t>(fft_len), 0.0);
    std::copy(h.data(), h.data() + m, buf.begin());
    std::vector<std::complex<double>> h_spec, x_spec;
    fft.fwd(h_spec, buf);

    Eigen::ArrayXd y = Eigen::ArrayXd::Zero(x.size() + m - 1);
    std::vector<double> time;
    for (Eigen::Index start = 0; start < x.size(); start += block) {
        const Eigen::Index n = std::min(block, x.size() - start);
        std::fill(buf.begin(), buf.end(), 0.0);
        std::copy(x.data() + start, x.data() + start + n, buf.begin());
        fft.fwd(x_spec, buf);
        for (std::size_t k = 0; k < x_spec.size(); ++k) x_spec[k] *= h_spec[k];
        fft.inv(time, x_spec);
        const Eigen::Index valid = std::min<Eigen::Index>(n + m - 1, y.size() - start);
        y.segment(start, valid) += Eigen::Map<const Eigen::ArrayXd>(time.data(), valid);
    }
    return y;
}

}  // namespace

Eigen::ArrayXd linear_convolve(const Eigen::Ref<const Eigen::ArrayXd>& x, const Eigen::Ref<const Eigen::ArrayXd>& h) {
    if (x.size() == 0 || h.size() == 0) return {};
    const double work = static_cast<double>(x.size()) * static_cast<double>(h.size());
    if (std::min(x.size(), h.size()) <= 64 || work <= 1 << 20) return direct_convolve(x, h);
    return fft_convolve(x, h);
}

AudioBuffer convolve_ir(const AudioBuffer& audio, const AudioBuffer& ir) {
    if (audio.sample_rate != ir.sample_rate)
        throw std::invalid_argument("impulse response sample rate " + std::to_string(ir.sample_rate) +
                                    " does not match audio sample rate " + std::to_string(audio.sample_rate));
    if (ir.empty()) throw std::invalid_argument("empty impulse response");
    if (ir.channels() != 1 && ir.channels() != audio.channels())
        throw std::invalid_argument("impulse response must be mono or match the audio channel count");
    if (audio.empty()) return audio;

    const Eigen::Index out_len = audio.frames() + ir.frames() - 1;
    Eigen::ArrayXXd wet(out_len, audio.channels());
    for (int c = 0; c < audio.channels(); ++c) {
        const Eigen::ArrayXd x = audio.samples.col(c).cast<double>();
        const Eigen::ArrayXd h = ir.samples.col(ir.channels() == 1 ? 0 : c).cast<double>();
        wet.col(c) = linear_convolve(x, h);
    }
    const double in_peak = audio.samples.abs().maxCoeff();
    const double out_peak = wet.abs().maxCoeff();
    if (out_peak > 0.0) wet *= in_peak / out_peak;
    return AudioBuffer{audio.sample_rate, wet.cast<float>()};
}

// ---------------------------------------------------------------------------
// Synthetic impulse responses

double decay_envelope(double t, double rt60) { return std::exp(-t * std::log(1000.0) / rt60); }

AudioBuffer synth_ir(double rt60, int sample_rate, std::uint64_t seed) {
    if (!(rt60 > 0.0)) throw std::invalid_argument("rt60 must be positive");
    if (sample_rate <= 0) throw std::invalid_argument("sample rate must be positive");
    const auto length = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(rt60 * sample_rate + 1e-9)));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    AudioBuffer ir{sample_rate, SampleMatrix(length, 1)};
    for (Eigen::Index n = 0; n < length; ++n) {
        const double t = static_cast<double>(n) / sample_rate;
        ir.samples(n, 0) = static_cast<float>(gauss(rng) * decay_envelope(t, rt60));
    }
    ir.samples(0, 0) = 1.0f;
    return ir;
}

// ---------------------------------------------------------------------------
// Condition grid

std::string format_level(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", value);
    return buf;
}

std::string snr_token(const std::optional<double>& snr_db) {
    return snr_db ? "snr" + format_level(*snr_db) : "snrnone";
}

std::string PerturbCondition::name() const { return snr_token(snr_db) + "_" + reverb_label; }

std::uint64_t cell_seed(std::uint64_t seed, std::uint64_t cell_index) {
    // splitmix64 finalizer over the combined state
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (cell_index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<std::pair<PerturbCondition, AudioBuffer>> apply_condition_grid(
    const AudioBuffer& audio, std::span<const std::optional<double>> snr_levels,
    std::span<const ReverbLevel> reverb_levels, std::uint64_t seed) {
    if (std::none_of(snr_levels.begin(), snr_levels.end(), [](const auto& s) { return !s.has_value(); }))
        throw std::invalid_argument("noise levels must include the 'none' level");
    if (std::none_of(reverb_levels.begin(), reverb_levels.end(), [](const auto& r) { return !r.ir.has_value(); }))
        throw std::invalid_argument("reverb levels must include the 'none' level");

    std::vector<std::pair<PerturbCondition, AudioBuffer>> out;
    out.reserve(snr_levels.size() * reverb_levels.size());
    std::uint64_t cell = 0;
    for (const auto& reverb : reverb_levels) {
        const AudioBuffer wet = reverb.ir ? convolve_ir(audio, *reverb.ir) : audio;
        for (const auto& snr : snr_levels) {
            PerturbCondition cond{snr, reverb.label, reverb.ir.has_value(), cell_seed(seed, cell++)};
            AudioBuffer result = snr ? add_noise_snr(wet, *snr, cond.seed) : wet;
            out.emplace_back(std::move(cond), std::move(result));
        }
    }
    return out;
}

}  // namespace pianoeval
