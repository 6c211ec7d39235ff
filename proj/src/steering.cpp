// SPDX-License-Identifier: Apache-2.0

#include "conam/steering.hpp"

#include "conam/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace conam {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be positive and finite");
}

} // namespace

void SteerAngles::validate() const {
    if (!std::isfinite(theta) || !std::isfinite(phi)) throw std::invalid_argument("steering angles must be finite");
    if (theta < -kPi / 2 || theta > kPi / 2) throw std::invalid_argument("theta outside [-90, 90] deg");
    if (phi < -kPi || phi > kPi) throw std::invalid_argument("phi outside [-180, 180] deg");
}

Vec3 steering_vector(const SteerAngles& a) {
    a.validate();
    const double ct = std::cos(a.theta);
    return {ct * std::cos(a.phi), ct * std::sin(a.phi), std::sin(a.theta)};
}

std::int64_t SampleDelayProfile::max_shift() const noexcept {
    return k.empty() ? 0 : *std::max_element(k.begin(), k.end());
}

std::vector<double> SampleDelayProfile::realised_delays() const {
    std::vector<double> d(k.size());
    for (std::size_t m = 0; m < k.size(); ++m) d[m] = offset + static_cast<double>(k[m]) / sample_rate;
    return d;
}

DelayProfile transmit_delays(const ArrayGeometry& g, const SteerAngles& a, double c) {
    require_positive(c, "speed of sound");
    const Vec3 u = steering_vector(a);
    DelayProfile p;
    p.speed_of_sound = c;
    p.tau.reserve(g.size());
    for (const auto& pos : g.elements()) p.tau.push_back(-dot(pos, u) / c);
    return p;
}

DelayProfile horizontal_plane_delays(std::size_t count, double d_y, double phi, double c) {
    require_positive(c, "speed of sound");
    require_positive(d_y, "d_y");
    if (!std::isfinite(phi)) throw std::invalid_argument("phi must be finite");
    DelayProfile p;
    p.speed_of_sound = c;
    p.tau.resize(count);
    const double s = std::sin(phi);
    for (std::size_t m = 0; m < count; ++m) p.tau[m] = -static_cast<double>(m) * d_y * s / c;
    return p;
}

SampleDelayProfile quantize_delays(const DelayProfile& p, double sample_rate) {
    require_positive(sample_rate, "sample rate");
    if (p.tau.empty()) throw std::invalid_argument("quantize_delays: empty delay profile");
    for (double t : p.tau)
        if (!std::isfinite(t)) throw std::invalid_argument("quantize_delays: non-finite delay");

    SampleDelayProfile q;
    q.sample_rate = sample_rate;
    q.offset = *std::min_element(p.tau.begin(), p.tau.end());
    q.k.reserve(p.tau.size());
    for (double t : p.tau) q.k.push_back(static_cast<std::int64_t>(std::floor((t - q.offset) * sample_rate)));
    return q;
}

std::optional<double> nyquist_steering_limit(double d_proj, double phi, double c) {
    require_positive(d_proj, "projected pitch");
    require_positive(c, "speed of sound");
    const double s = std::abs(std::sin(phi));
    if (s == 0.0) return std::nullopt;
    return c / (2.0 * d_proj * s);
}

double visible_grating_onset(double d_proj, double phi, double c) {
    require_positive(d_proj, "projected pitch");
    require_positive(c, "speed of sound");
    if (!std::isfinite(phi)) throw std::invalid_argument("phi must be finite");
    return c / (d_proj * (1.0 + std::abs(std::sin(phi))));
}

void write_delay_csv(std::ostream& out, const DelayProfile& p) {
    out << "m,tau_s\n";
    for (std::size_t m = 0; m < p.tau.size(); ++m) out << m << ',' << text::format_double(p.tau[m]) << '\n';
}

void write_sample_delay_csv(std::ostream& out, const SampleDelayProfile& p) {
    out << "m,k\n";
    for (std::size_t m = 0; m < p.k.size(); ++m) out << m << ',' << p.k[m] << '\n';
}

DelayProfile read_delay_csv(std::istream& in, double c) {
    std::string line;
    if (!text::read_line(in, line) || line != "m,tau_s") throw std::runtime_error("delay csv: missing header 'm,tau_s'");
    DelayProfile p;
    p.speed_of_sound = c;
    while (text::read_line(in, line)) {
        if (line.empty()) continue;
        auto f = text::split(line);
        if (f.size() != 2) throw std::runtime_error("delay csv: expected 2 fields: " + line);
        if (text::parse_integer(f[0]) != static_cast<long long>(p.tau.size()))
            throw std::runtime_error("delay csv: element index out of order");
        p.tau.push_back(text::parse_double(f[1]));
    }
    return p;
}

} // namespace conam
