// SPDX-License-Identifier: Apache-2.0
//
// Spectral and beam-pattern analytics: Welch PSD, spectrogram, lobe metrics,
// grating-lobe onset extraction and reduction of pan-tilt sweeps to maps.

#ifndef CONAM_ANALYSIS_HPP
#define CONAM_ANALYSIS_HPP

#include "conam/field.hpp"
#include "conam/waveform.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace conam {

struct PowerSpectrum {
    std::vector<double> freqs_hz;
    std::vector<double> psd; // one-sided density [1/Hz]

    double bin_width() const { return freqs_hz.size() > 1 ? freqs_hz[1] - freqs_hz[0] : 0.0; }
};

// Averaged, windowed periodogram, one-sided and normalised by the window
// power so that sum(psd) * df equals the mean-square signal.
PowerSpectrum welch_psd(std::span<const double> x, double sample_rate, std::size_t segment_len = 1024,
                        double overlap = 0.5, const Window& window = Window::hann());
PowerSpectrum welch_psd(const Waveform& w, std::size_t segment_len = 1024, double overlap = 0.5,
                        const Window& window = Window::hann());

struct Spectrogram {
    std::vector<double> times_s;  // frame centers
    std::vector<double> freqs_hz;
    std::vector<double> magnitude_db; // row-major: frames x bins, 20 log10(|X| / sum(w))

    std::size_t frames() const noexcept { return times_s.size(); }
    std::size_t bins() const noexcept { return freqs_hz.size(); }
    std::span<const double> frame(std::size_t i) const {
        return std::span<const double>(magnitude_db).subspan(i * bins(), bins());
    }
};

Spectrogram spectrogram(std::span<const double> x, double sample_rate, std::size_t frame_len = 256, std::size_t hop = 64,
                        const Window& window = Window::hann());
Spectrogram spectrogram(const Waveform& w, std::size_t frame_len = 256, std::size_t hop = 64,
                        const Window& window = Window::hann());

// Frequency of the strongest bin in each frame.
std::vector<double> spectrogram_ridge(const Spectrogram& s);

struct Lobe {
    double angle_deg;
    double level_db;
};

struct LobeReport {
    double main_direction_deg = 0.0;
    double main_level_db = 0.0;
    std::optional<double> beamwidth_3db_deg; // empty when a -3 dB edge falls off the axis
    std::optional<double> sidelobe_level_db; // empty when only the main lobe exists
    std::vector<Lobe> lobes;                 // every detected lobe, in angle order
};

// Peaks of a per-angle power pattern (dB). Local maxima are merged unless the
// pattern dips at least 3 dB below the lower of two neighbouring peaks
// between them. The pattern is re-referenced to its own maximum. Throws
// std::invalid_argument for fewer than 3 samples or a flat pattern.
LobeReport lobe_metrics(std::span<const double> pattern_db, std::span<const double> angles_deg);

// Lowest frequency whose slice (normalised to its own maximum) holds a
// non-main lobe above threshold_db; nullopt if none.
std::optional<double> grating_onset_from_map(const FieldGrid& grid, double threshold_db = -6.0);

struct AnglePattern {
    std::vector<double> angles_deg;
    std::vector<double> level_db; // max = 0 dB
};

// Sums linear power over rows with f_lo <= f <= f_hi, then normalises.
AnglePattern integrate_map(const FieldGrid& grid, double f_lo, double f_hi);

// Received spectrum per pan angle restricted to [f_min, f_max]; one column
// per sweep stop. segment_len = 0 takes a single rectangular periodogram of
// the whole record, which suits transient emissions: Welch segmentation
// weights the element copies of a swept signal unequally and fills in the
// side-lobe floor. A non-zero value selects Welch with that segment length.
FieldGrid sweep_map(std::span<const SweepPoint> sweep, double f_min, double f_max, Normalization norm,
                    std::size_t segment_len = 0);

// Raw received power within [f_lo, f_hi] per pan angle, normalised.
AnglePattern band_power_pattern(std::span<const SweepPoint> sweep, double f_lo, double f_hi,
                                std::size_t segment_len = 0);

nlohmann::json to_json(const LobeReport& r);

void write_psd_csv(std::ostream& out, const PowerSpectrum& p);
void write_spectrogram_csv(std::ostream& out, const Spectrogram& s);
void write_pattern_csv(std::ostream& out, const AnglePattern& p);

} // namespace conam

#endif // CONAM_ANALYSIS_HPP
