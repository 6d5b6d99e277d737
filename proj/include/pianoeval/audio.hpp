#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace pianoeval {

/// Planar audio: column c holds channel c, one row per frame.
using SampleMatrix = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic>;

struct AudioBuffer {
    int sample_rate = 44100;
    SampleMatrix samples;

    Eigen::Index frames() const { return samples.rows(); }
    int channels() const { return static_cast<int>(samples.cols()); }
    bool empty() const { return samples.size() == 0; }

    friend bool operator==(const AudioBuffer& a, const AudioBuffer& b) {
        return a.sample_rate == b.sample_rate && a.samples.rows() == b.samples.rows() &&
               a.samples.cols() == b.samples.cols() && (a.samples == b.samples).all();
    }
};

/// Unsupported or malformed WAV data.
class WavError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class WavEncoding { float32, pcm16 };

AudioBuffer read_wav(std::span<const std::uint8_t> bytes);
/// float32 is written unclamped; pcm16 clamps to [-1, 1].
std::vector<std::uint8_t> write_wav(const AudioBuffer& audio, WavEncoding encoding = WavEncoding::float32);

/// Mean of squared samples over all channels.
double signal_power(const AudioBuffer& audio);

/// Adds i.i.d. Gaussian noise of power signal_power / 10^(snr_db / 10). +inf leaves the input unchanged.
AudioBuffer add_noise_snr(const AudioBuffer& audio, double snr_db, std::uint64_t seed);

/// Full linear convolution, length x.size() + h.size() - 1 (empty if either input is empty).
Eigen::ArrayXd linear_convolve(const Eigen::Ref<const Eigen::ArrayXd>& x, const Eigen::Ref<const Eigen::ArrayXd>& h);

/// Convolves every channel with the impulse response (mono IRs apply to all channels) and
/// rescales the result so its peak matches the input peak.
AudioBuffer convolve_ir(const AudioBuffer& audio, const AudioBuffer& ir);

/// Amplitude of the exponential decay that reaches -60 dB at t = rt60.
double decay_envelope(double t, double rt60);

/// Exponentially decaying Gaussian noise, floor(rt60 * sample_rate) samples, first sample 1.
AudioBuffer synth_ir(double rt60, int sample_rate, std::uint64_t seed);

/// One reverb level of a condition grid; `ir` empty means dry.
struct ReverbLevel {
    std::string label;  // file-name token, e.g. "rtnone", "rt1.85"
    std::optional<AudioBuffer> ir;
};

struct PerturbCondition {
    std::optional<double> snr_db;  // nullopt = no noise
    std::string reverb_label;
    bool has_reverb = false;
    std::uint64_t seed = 0;

    /// File stem such as "snr12_rt1.85".
    std::string name() const;
};

std::string snr_token(const std::optional<double>& snr_db);
std::string format_level(double value);

/// Per-cell RNG seed derived from the grid seed and the cell index.
std::uint64_t cell_seed(std::uint64_t seed, std::uint64_t cell_index);

/// Cartesian product of reverb x noise levels, reverb applied first. Rows iterate reverb levels.
std::vector<std::pair<PerturbCondition, AudioBuffer>> apply_condition_grid(
    const AudioBuffer& audio, std::span<const std::optional<double>> snr_levels,
    std::span<const ReverbLevel> reverb_levels, std::uint64_t seed);

}  // namespace pianoeval
