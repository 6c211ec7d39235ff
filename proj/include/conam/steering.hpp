// SPDX-License-Identifier: Apache-2.0
//
// Steering vectors, per-element transmit delays, integer-sample delay
// quantization and the analytic grating-lobe limits of a uniform projected
// aperture.

#ifndef CONAM_STEERING_HPP
#define CONAM_STEERING_HPP

#include "conam/geometry.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace conam {

inline constexpr double kDefaultSoundSpeed = 343.0; // dry air, 20 degC [m/s]
inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg2rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / kPi; }

// theta: elevation from the X-Y plane, phi: azimuth from the X axis [rad].
struct SteerAngles {
    double theta = 0.0;
    double phi = 0.0;

    static SteerAngles from_degrees(double theta_deg, double phi_deg) {
        return {deg2rad(theta_deg), deg2rad(phi_deg)};
    }
    static SteerAngles azimuth_deg(double phi_deg) { return from_degrees(0.0, phi_deg); }

    // Throws std::invalid_argument outside theta in [-pi/2, pi/2], phi in [-pi, pi].
    void validate() const;
};

Vec3 steering_vector(const SteerAngles& a);

struct DelayProfile {
    std::vector<double> tau; // [s], one per element in geometry order
    double speed_of_sound = kDefaultSoundSpeed;
};

struct SampleDelayProfile {
    std::vector<std::int64_t> k; // non-negative right shifts [samples]
    double offset = 0.0;         // min(tau) removed before flooring [s]
    double sample_rate = 0.0;    // [Hz]

    std::int64_t max_shift() const noexcept;
    // offset + k[m] / Fs, the realised delay of element m.
    std::vector<double> realised_delays() const;
};

// tau_m = -(p_m . u(theta, phi)) / c.
DelayProfile transmit_delays(const ArrayGeometry& g, const SteerAngles& a, double c = kDefaultSoundSpeed);

// Element-index form for a single row in the horizontal plane:
// tau_m = -m * d_y * sin(phi) / c. It is referenced to element 0 rather than
// the array center, so it differs from transmit_delays by a constant, which
// quantize_delays removes.
DelayProfile horizontal_plane_delays(std::size_t count, double d_y, double phi, double c = kDefaultSoundSpeed);

// k_m = floor((tau_m - min(tau)) * Fs), so min(k) = 0 and every shift is a
// realisable right shift.
SampleDelayProfile quantize_delays(const DelayProfile& p, double sample_rate);

// Spatial-Nyquist bound c / (2 d |sin phi|); std::nullopt means unbounded
// (sin phi == 0).
std::optional<double> nyquist_steering_limit(double d_proj, double phi, double c = kDefaultSoundSpeed);

// Lowest frequency at which a grating lobe enters the visible region for a
// beam steered to phi: c / (d (1 + |sin phi|)). Coincides with the Nyquist
// bound at phi = 90 deg.
double visible_grating_onset(double d_proj, double phi, double c = kDefaultSoundSpeed);

void write_delay_csv(std::ostream& out, const DelayProfile& p);
void write_sample_delay_csv(std::ostream& out, const SampleDelayProfile& p);
DelayProfile read_delay_csv(std::istream& in, double c = kDefaultSoundSpeed);

} // namespace conam

#endif // CONAM_STEERING_HPP
