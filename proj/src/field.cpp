// SPDX-License-Identifier: Apache-2.0

#include "conam/field.hpp"

#include "conam/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace conam {

namespace {

constexpr double kDbFloor = -300.0;

void check_weights(std::span<const double> weights, std::size_t M) {
    if (weights.empty()) return;
    if (weights.size() != M) throw std::invalid_argument("weights length != element count");
    for (double w : weights)
        if (!(w >= 0.0 && w <= 1.0)) throw std::invalid_argument("weights must lie in [0, 1]");
}

std::vector<double> delays_for(const ArrayGeometry& g, const SteerAngles& steer, const MapOptions& opt) {
    const auto tau = transmit_delays(g, steer, opt.c);
    if (opt.mode == DelayMode::Continuous) return tau.tau;
    return quantize_delays(tau, opt.sample_rate).realised_delays();
}

} // namespace

double FieldGrid::max_db() const {
    if (energy_db.empty()) throw std::invalid_argument("FieldGrid: empty");
    return *std::max_element(energy_db.begin(), energy_db.end());
}

void FieldGrid::validate() const {
    if (angles_deg.empty() || freqs_hz.empty()) throw std::invalid_argument("FieldGrid: empty axis");
    if (energy_db.size() != angles_deg.size() * freqs_hz.size())
        throw std::invalid_argument("FieldGrid: matrix size does not match axes");
}

std::vector<double> make_axis(double lo, double hi, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw std::invalid_argument("axis step must be positive");
    if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo) throw std::invalid_argument("axis range is empty");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> axis(n);
    for (std::size_t i = 0; i < n; ++i) axis[i] = lo + static_cast<double>(i) * step;
    return axis;
}

std::complex<double> narrowband_array_factor(const ArrayGeometry& g, std::span<const double> delays, double f,
                                             const SteerAngles& obs, double c, std::span<const double> weights) {
    if (!(f > 0.0)) throw std::invalid_argument("narrowband_array_factor: frequency must be positive");
    if (!(c > 0.0)) throw std::invalid_argument("narrowband_array_factor: speed of sound must be positive");
    if (delays.size() != g.size()) throw std::invalid_argument("narrowband_array_factor: delay count != element count");
    check_weights(weights, g.size());
    const Vec3 u = steering_vector(obs);
    const double k = 2.0 * kPi * f;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m) {
        const double w = weights.empty() ? 1.0 : weights[m];
        const double phase = k * (dot(g[m], u) / c + delays[m]);
        re += w * std::cos(phase);
        im += w * std::sin(phase);
    }
    const double inv = 1.0 / static_cast<double>(g.size());
    return {re * inv, im * inv};
}

std::complex<double> narrowband_array_factor(const ArrayGeometry& g, const DelayProfile& p, double f,
                                             const SteerAngles& obs, double c, std::span<const double> weights) {
    return narrowband_array_factor(g, std::span<const double>(p.tau), f, obs, c, weights);
}

std::complex<double> narrowband_array_factor(const ArrayGeometry& g, const SampleDelayProfile& p, double f,
                                             const SteerAngles& obs, double c, std::span<const double> weights) {
    const auto d = p.realised_delays();
    return narrowband_array_factor(g, std::span<const double>(d), f, obs, c, weights);
}

std::vector<double> array_power(const ArrayGeometry& g, std::span<const double> delays, std::span<const double> freqs_hz,
                                std::span<const double> angles_deg, double c, double obs_theta,
                                std::span<const double> weights) {
    if (freqs_hz.empty() || angles_deg.empty()) throw std::invalid_argument("array_power: empty grid");
    std::vector<double> power(freqs_hz.size() * angles_deg.size());
    for (std::size_t fi = 0; fi < freqs_hz.size(); ++fi) {
        for (std::size_t ai = 0; ai < angles_deg.size(); ++ai) {
            const auto af = narrowband_array_factor(g, delays, freqs_hz[fi], SteerAngles{obs_theta, deg2rad(angles_deg[ai])},
                                                    c, weights);
            power[fi * angles_deg.size() + ai] = std::norm(af);
        }
    }
    return power;
}

std::vector<double> power_to_db(std::span<const double> power, std::size_t rows, std::size_t cols, Normalization norm) {
    if (power.size() != rows * cols) throw std::invalid_argument("power_to_db: size mismatch");
    std::vector<double> db(power.size());
    for (std::size_t i = 0; i < power.size(); ++i)
        db[i] = power[i] > 0.0 ? std::max(10.0 * std::log10(power[i]), kDbFloor) : kDbFloor;

    auto normalise = [&](std::size_t begin, std::size_t end) {
        const double mx = *std::max_element(db.begin() + static_cast<std::ptrdiff_t>(begin),
                                            db.begin() + static_cast<std::ptrdiff_t>(end));
        for (std::size_t i = begin; i < end; ++i) db[i] = std::max(db[i] - mx, kDbFloor);
    };
    if (norm == Normalization::Global)
        normalise(0, db.size());
    else
        for (std::size_t r = 0; r < rows; ++r) normalise(r * cols, (r + 1) * cols);
    return db;
}

FieldGrid frequency_angle_map(const ArrayGeometry& g, const SteerAngles& steer, std::span<const double> freqs_hz,
                              std::span<const double> angles_deg, const MapOptions& opt) {
    if (freqs_hz.empty() || angles_deg.empty()) throw std::invalid_argument("frequency_angle_map: empty grid");
    const auto delays = delays_for(g, steer, opt);
    const auto power = array_power(g, delays, freqs_hz, angles_deg, opt.c, opt.obs_theta, opt.weights);

    FieldGrid grid;
    grid.freqs_hz.assign(freqs_hz.begin(), freqs_hz.end());
    grid.angles_deg.assign(angles_deg.begin(), angles_deg.end());
    grid.energy_db = power_to_db(power, grid.rows(), grid.cols(), opt.norm);
    return grid;
}

FieldGrid frequency_angle_map(const ArrayGeometry& g, const SteerAngles& steer, const MapOptions& opt) {
    const auto freqs = make_axis(opt.f_min, opt.f_max, opt.f_step);
    const auto angles = make_axis(opt.angle_min, opt.angle_max, opt.angle_step);
    return frequency_angle_map(g, steer, freqs, angles, opt);
}

Waveform synthesize_received_signal(const ArrayGeometry& g, const EmissionMatrix& mat, const ReceiverSpec& r, double c,
                                    const PropagationOptions& prop) {
    if (!(r.distance > 0.0) || !std::isfinite(r.distance))
        throw std::invalid_argument("synthesize_received_signal: receiver distance must be positive");
    if (!(c > 0.0)) throw std::invalid_argument("synthesize_received_signal: speed of sound must be positive");
    if (mat.rows() != g.size()) throw std::invalid_argument("synthesize_received_signal: matrix rows != element count");
    if (prop.spreading && !(prop.reference_distance > 0.0))
        throw std::invalid_argument("synthesize_received_signal: reference distance must be positive");
    if (!(prop.attenuation_db_per_m >= 0.0)) throw std::invalid_argument("attenuation must be non-negative");

    const Vec3 u = steering_vector(r.direction);
    const Vec3 rx{r.distance * u.x, r.distance * u.y, r.distance * u.z};
    const double fs = mat.sample_rate();
    const std::size_t M = g.size();
    const std::size_t N = mat.cols();

    double radius = 0.0;
    for (const auto& p : g.elements()) radius = std::max(radius, norm(p));
    const auto tail = static_cast<std::size_t>(std::ceil((r.distance + radius) / c * fs)) + 2;
    std::vector<double> out(N + tail, 0.0);

    for (std::size_t m = 0; m < M; ++m) {
        const Vec3 d{rx.x - g[m].x, rx.y - g[m].y, rx.z - g[m].z};
        const double dist = norm(d);
        if (!(dist > 1e-9)) throw std::invalid_argument("synthesize_received_signal: receiver coincides with element " +
                                                        std::to_string(m));
        if (prop.spreading && dist < prop.reference_distance)
            throw std::invalid_argument("synthesize_received_signal: element closer than the spreading reference distance");
        double gain = 1.0 / static_cast<double>(M);
        if (prop.spreading) gain *= prop.reference_distance / dist;
        if (prop.attenuation_db_per_m > 0.0) gain *= std::pow(10.0, -prop.attenuation_db_per_m * dist / 20.0);

        const auto x = mat.row_drive(m);
        const double lag = dist / c * fs;
        const auto whole = static_cast<std::ptrdiff_t>(std::floor(lag));
        const double frac = lag - static_cast<double>(whole);
        // out[n] = x(n - lag) = (1 - frac) x[n - whole] + frac x[n - whole - 1]
        for (std::size_t i = 0; i < N; ++i) {
            if (x[i] == 0.0) continue;
            const auto n0 = static_cast<std::ptrdiff_t>(i) + whole;
            if (n0 >= 0 && static_cast<std::size_t>(n0) < out.size()) out[static_cast<std::size_t>(n0)] += gain * (1.0 - frac) * x[i];
            if (n0 + 1 >= 0 && static_cast<std::size_t>(n0 + 1) < out.size())
                out[static_cast<std::size_t>(n0 + 1)] += gain * frac * x[i];
        }
    }
    // Code 0 drives to -4096/4095, so a full-scale negative peak at the
    // reference distance can overshoot by 2.4e-4.
    for (auto& s : out) s = std::clamp(s, -1.0, 1.0);
    return Waveform(std::move(out), fs);
}

std::vector<SweepPoint> pan_tilt_sweep(const ArrayGeometry& g, const EmissionMatrix& m, double distance,
                                       double angle_min_deg, double angle_max_deg, double step_deg, double c,
                                       const PropagationOptions& prop, unsigned threads) {
    if (!(step_deg > 0.0)) throw std::invalid_argument("pan_tilt_sweep: step must be positive");
    if (!(angle_max_deg >= angle_min_deg)) throw std::invalid_argument("pan_tilt_sweep: empty angle range");
    const auto angles = make_axis(angle_min_deg, angle_max_deg, step_deg);
    for (double a : angles)
        if (a < -180.0 || a > 180.0) throw std::invalid_argument("pan_tilt_sweep: pan angle outside [-180, 180] deg");

    std::vector<Waveform> signals(angles.size());
    auto work = [&](std::size_t begin, std::size_t stride) {
        for (std::size_t i = begin; i < angles.size(); i += stride) {
            ReceiverSpec rx{distance, SteerAngles{0.0, deg2rad(-angles[i])}};
            signals[i] = synthesize_received_signal(g, m, rx, c, prop);
        }
    };

    unsigned n = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    n = static_cast<unsigned>(std::min<std::size_t>(n, angles.size()));
    if (n <= 1) {
        work(0, 1);
    } else {
        std::vector<std::exception_ptr> errors(n);
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < n; ++t)
                pool.emplace_back([&, t] {
                    try {
                        work(t, n);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::vector<SweepPoint> out;
    out.reserve(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) out.push_back({angles[i], std::move(signals[i])});
    return out;
}

void write_field_grid_csv(std::ostream& out, const FieldGrid& grid) {
    grid.validate();
    out << "freq_hz";
    for (double a : grid.angles_deg) out << ',' << text::format_double(a);
    out << '\n';
    for (std::size_t fi = 0; fi < grid.rows(); ++fi) {
        out << text::format_double(grid.freqs_hz[fi]);
        for (double v : grid.row(fi)) out << ',' << text::format_double(v);
        out << '\n';
    }
}

FieldGrid read_field_grid_csv(std::istream& in) {
    std::string line;
    if (!text::read_line(in, line)) throw std::runtime_error("grid csv: empty input");
    auto head = text::split(line);
    if (head.empty() || head[0] != "freq_hz") throw std::runtime_error("grid csv: header must start with 'freq_hz'");
    FieldGrid grid;
    for (std::size_t i = 1; i < head.size(); ++i) grid.angles_deg.push_back(text::parse_double(head[i]));
    while (text::read_line(in, line)) {
        if (line.empty()) continue;
        auto f = text::split(line);
        if (f.size() != head.size()) throw std::runtime_error("grid csv: ragged row");
        grid.freqs_hz.push_back(text::parse_double(f[0]));
        for (std::size_t i = 1; i < f.size(); ++i) grid.energy_db.push_back(text::parse_double(f[i]));
    }
    grid.validate();
    return grid;
}

void write_field_grid_pgm(std::ostream& out, const FieldGrid& grid, double floor_db) {
    grid.validate();
    if (!(floor_db < 0.0)) throw std::invalid_argument("pgm floor must be negative");
    out << "P5\n" << grid.cols() << ' ' << grid.rows() << "\n255\n";
    for (std::size_t r = grid.rows(); r-- > 0;) {
        for (double v : grid.row(r)) {
            const double t = (std::clamp(v, floor_db, 0.0) - floor_db) / -floor_db;
            out.put(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
        }
    }
}

} // namespace conam
