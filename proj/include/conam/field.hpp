// SPDX-License-Identifier: Apache-2.0
//
// Radiated-field prediction: narrowband array factors, frequency x angle
// energy maps and a virtual pan-tilt measurement with a point receiver.
//
// Angle convention for observation/pan angles: an observation azimuth psi is
// expressed in the same frame as the steering azimuth, so a beam steered to
// phi peaks at psi = phi. In the time-domain model the emitted rows carry the
// delays tau_m literally; the pan-tilt unit rotates the array by +psi, which
// puts the fixed microphone at physical bearing -psi in the array frame. For
// a planar array (all x_m = 0) the two descriptions are identical.

#ifndef CONAM_FIELD_HPP
#define CONAM_FIELD_HPP

#include "conam/emission.hpp"
#include "conam/geometry.hpp"
#include "conam/steering.hpp"
#include "conam/waveform.hpp"

#include <complex>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace conam {

enum class DelayMode { Continuous, Quantized };
enum class Normalization { Global, PerRow };

struct FieldGrid {
    std::vector<double> angles_deg;
    std::vector<double> freqs_hz;
    std::vector<double> energy_db; // row-major: freqs x angles

    std::size_t rows() const noexcept { return freqs_hz.size(); }
    std::size_t cols() const noexcept { return angles_deg.size(); }
    double at(std::size_t fi, std::size_t ai) const { return energy_db.at(fi * cols() + ai); }
    std::span<const double> row(std::size_t fi) const {
        return std::span<const double>(energy_db).subspan(fi * cols(), cols());
    }
    double max_db() const;
    // Throws std::invalid_argument if axes are empty or dimensions mismatch.
    void validate() const;
};

// Inclusive arithmetic axis lo, lo + step, ... <= hi (with a small tolerance
// so hi itself is kept when it lies on the lattice).
std::vector<double> make_axis(double lo, double hi, double step);

// AF = (1/M) sum_m w_m exp(j 2 pi f (p_m . u(obs) / c + delay_m)).
std::complex<double> narrowband_array_factor(const ArrayGeometry& g, std::span<const double> delays, double f,
                                             const SteerAngles& obs, double c = kDefaultSoundSpeed,
                                             std::span<const double> weights = {});
std::complex<double> narrowband_array_factor(const ArrayGeometry& g, const DelayProfile& p, double f,
                                             const SteerAngles& obs, double c = kDefaultSoundSpeed,
                                             std::span<const double> weights = {});
std::complex<double> narrowband_array_factor(const ArrayGeometry& g, const SampleDelayProfile& p, double f,
                                             const SteerAngles& obs, double c = kDefaultSoundSpeed,
                                             std::span<const double> weights = {});

struct MapOptions {
    double f_min = 20e3;
    double f_max = 100e3;
    double f_step = 500.0;
    double angle_min = -90.0; // [deg]
    double angle_max = 90.0;
    double angle_step = 1.0;
    double c = kDefaultSoundSpeed;
    DelayMode mode = DelayMode::Continuous;
    double sample_rate = kDefaultSampleRate; // quantized mode only
    Normalization norm = Normalization::Global;
    double obs_theta = 0.0; // observation elevation [rad]
    std::vector<double> weights;
};

// |AF|^2 in dB over the frequency and azimuth axes built from `opt`.
FieldGrid frequency_angle_map(const ArrayGeometry& g, const SteerAngles& steer, const MapOptions& opt = {});
// Same, on explicit axes (frequencies in Hz, angles in degrees).
FieldGrid frequency_angle_map(const ArrayGeometry& g, const SteerAngles& steer, std::span<const double> freqs_hz,
                              std::span<const double> angles_deg, const MapOptions& opt = {});

// Linear |AF|^2 on explicit axes, unnormalised. Row-major freqs x angles.
std::vector<double> array_power(const ArrayGeometry& g, std::span<const double> delays, std::span<const double> freqs_hz,
                                std::span<const double> angles_deg, double c, double obs_theta = 0.0,
                                std::span<const double> weights = {});

// Converts linear power to dB and normalises (global max or each row's max
// to 0 dB). Zero power is floored at -300 dB.
std::vector<double> power_to_db(std::span<const double> power, std::size_t rows, std::size_t cols, Normalization norm);

struct ReceiverSpec {
    double distance = 1.5;  // [m]
    SteerAngles direction;  // physical bearing from the array center
};

struct PropagationOptions {
    bool spreading = true;
    // Spreading gain is reference_distance / r, so the output stays within
    // [-1, 1] whenever every element is at least this far away.
    double reference_distance = 1.0;
    double attenuation_db_per_m = 0.0;
};

// Free-field point-source superposition: each row's zero-mean drive is
// delayed by r_m / c (linear interpolation), optionally scaled by spreading
// and absorption, summed and divided by M. Output sample 0 is the emission
// start; the length covers the slowest path.
Waveform synthesize_received_signal(const ArrayGeometry& g, const EmissionMatrix& m, const ReceiverSpec& r,
                                    double c = kDefaultSoundSpeed, const PropagationOptions& prop = {});

struct SweepPoint {
    double angle_deg;
    Waveform signal;
};

// Rotates the array through the pan angles (receiver on an arc at
// `distance`, bearing -angle in the array frame) and synthesizes the
// microphone signal at each stop. Stops are evaluated in parallel; results
// are in angle order and independent of thread count.
std::vector<SweepPoint> pan_tilt_sweep(const ArrayGeometry& g, const EmissionMatrix& m, double distance,
                                       double angle_min_deg, double angle_max_deg, double step_deg,
                                       double c = kDefaultSoundSpeed, const PropagationOptions& prop = {},
                                       unsigned threads = 0);

// Exports. CSV: header `freq_hz,<angle...>`, one row per frequency.
void write_field_grid_csv(std::ostream& out, const FieldGrid& grid);
FieldGrid read_field_grid_csv(std::istream& in);

// 8-bit binary PGM (P5), highest frequency on the top row, dB clipped to
// [floor_db, 0] and mapped linearly onto 0..255.
void write_field_grid_pgm(std::ostream& out, const FieldGrid& grid, double floor_db = -40.0);

} // namespace conam

#endif // CONAM_FIELD_HPP
