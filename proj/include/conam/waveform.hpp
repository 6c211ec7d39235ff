// SPDX-License-Identifier: Apache-2.0
//
// Emission waveforms (log chirp, sine burst, multisine) and their 12-bit DAC
// quantization.

#ifndef CONAM_WAVEFORM_HPP
#define CONAM_WAVEFORM_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace conam {

inline constexpr double kDefaultSampleRate = 1.0e6; // [Hz]

inline constexpr std::uint16_t kDacMaxCode = 4095;
inline constexpr std::uint16_t kDacSilence = 2048;

enum class WindowKind { Rectangular, Hann, Tukey };

struct Window {
    WindowKind kind = WindowKind::Rectangular;
    double tukey_alpha = 0.1; // tapered fraction of the length, Tukey only

    static Window rectangular() { return {WindowKind::Rectangular, 0.0}; }
    static Window hann() { return {WindowKind::Hann, 0.0}; }
    static Window tukey(double alpha = 0.1) { return {WindowKind::Tukey, alpha}; }
};

// Symmetric windows end on their edge value (zero for Hann/Tukey); periodic
// ones are the DFT-even form used for spectral estimation.
std::vector<double> make_window(const Window& w, std::size_t n, bool symmetric = true);

class Waveform {
public:
    Waveform() = default;
    // Throws std::invalid_argument if sample_rate <= 0 or any sample is
    // non-finite or outside [-1, 1].
    Waveform(std::vector<double> samples, double sample_rate);

    std::span<const double> samples() const noexcept { return samples_; }
    double sample_rate() const noexcept { return sample_rate_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    double duration() const noexcept { return static_cast<double>(samples_.size()) / sample_rate_; }
    double operator[](std::size_t n) const { return samples_.at(n); }

    double peak() const noexcept;
    Waveform scaled(double gain) const;

    friend bool operator==(const Waveform&, const Waveform&) = default;

private:
    std::vector<double> samples_;
    double sample_rate_ = kDefaultSampleRate;
};

struct ChirpSpec {
    double f_start = 100e3;  // [Hz]
    double f_end = 20e3;     // [Hz]
    double duration = 5e-3;  // [s]
    double amplitude = 1.0;  // (0, 1]
    Window window = Window::tukey(0.1);

    void validate() const;
};

// Exponential sweep: phase(t) = 2 pi f0 T / ln r * (r^(t/T) - 1), r = f1 / f0.
double chirp_phase(const ChirpSpec& spec, double t);
double chirp_instantaneous_frequency(const ChirpSpec& spec, double t);

// round(duration * Fs) samples of A * w[n] * sin(phase(n / Fs)).
Waveform log_chirp(const ChirpSpec& spec, double sample_rate = kDefaultSampleRate);

Waveform sine_burst(double frequency, std::size_t cycles, double sample_rate = kDefaultSampleRate,
                    double amplitude = 1.0, const Window& window = Window::rectangular());

// Sum of sinusoids, peak-normalised to `amplitude`.
Waveform multisine(std::span<const double> freqs, std::span<const double> amps, std::span<const double> phases,
                   double duration, double sample_rate = kDefaultSampleRate, double amplitude = 1.0);

// 12-bit codes held in 16-bit words.
struct DacCodes {
    std::vector<std::uint16_t> codes;
};

// code = clamp(round((s + 1) / 2 * 4095), 0, 4095); s = 0 maps to 2048.
std::uint16_t quantize_sample(double s);
double dequantize_code(std::uint16_t code);
DacCodes quantize_to_dac(const Waveform& w);

// CSV `n,s`; the sample rate rides in a leading `# sample_rate_hz=` comment.
void write_waveform_csv(std::ostream& out, const Waveform& w);
Waveform read_waveform_csv(std::istream& in);

// Signed 16-bit little-endian samples (round(s * 32767)) plus a JSON sidecar
// `<path>.json` carrying the sample rate and length.
void write_waveform_raw(const std::filesystem::path& path, const Waveform& w);
Waveform read_waveform_raw(const std::filesystem::path& path);

} // namespace conam

#endif // CONAM_WAVEFORM_HPP
