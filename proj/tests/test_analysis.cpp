// SPDX-License-Identifier: Apache-2.0

#include "conam/analysis.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>

using namespace conam;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> tone(double f, std::size_t n, double fs, double amp = 1.0, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(kTwoPi * f * static_cast<double>(i) / fs + phase);
    return x;
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

double integrate(const PowerSpectrum& p) {
    double s = 0.0;
    for (double v : p.psd) s += v;
    return s * p.bin_width();
}

// Brute-force uniform-line pattern, evaluated independently of the library.
std::vector<double> line_pattern_db(std::size_t m, double d, double f, double c, const std::vector<double>& angles) {
    std::vector<double> out;
    double top = 0.0;
    for (double a : angles) {
        std::complex<double> acc = 0.0;
        for (std::size_t i = 0; i < m; ++i)
            acc += std::polar(1.0, kTwoPi * f * static_cast<double>(i) * d * std::sin(a * std::numbers::pi / 180) / c);
        out.push_back(std::norm(acc));
        top = std::max(top, out.back());
    }
    for (auto& v : out) v = 10 * std::log10(std::max(v / top, 1e-30));
    return out;
}

} // namespace

TEST_CASE("welch psd of a tone") {
    const double fs = 1e6;
    const auto x = tone(40e3, 20000, fs);
    const auto p = welch_psd(x, fs);
    CHECK(p.freqs_hz.size() == 513);
    CHECK(p.bin_width() == doctest::Approx(fs / 1024));
    CHECK(std::abs(p.freqs_hz[argmax(p.psd)] - 40e3) <= p.bin_width());
    CHECK(integrate(p) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("property: welch satisfies Parseval within 1 %") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 0.3);
    std::uniform_real_distribution<double> freq(10e3, 400e3), amp(0.1, 1.0), ph(0, kTwoPi);
    for (int trial = 0; trial < 20; ++trial) {
        auto x = tone(freq(rng), 16384, 1e6, amp(rng), ph(rng));
        for (auto& v : x) v += noise(rng);
        double ms = 0.0;
        for (double v : x) ms += v * v;
        ms /= static_cast<double>(x.size());
        for (const auto& w : {Window::hann(), Window::rectangular()}) {
            const auto p = welch_psd(x, 1e6, 1024, 0.5, w);
            CHECK(integrate(p) == doctest::Approx(ms).epsilon(0.01));
        }
    }
}

TEST_CASE("welch preconditions") {
    const auto x = tone(40e3, 500, 1e6);
    CHECK_THROWS_AS(welch_psd(x, 1e6, 1024), std::invalid_argument);
    CHECK_THROWS_AS(welch_psd(x, 1e6, 256, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(welch_psd(x, 1e6, 256, -0.1), std::invalid_argument);
    CHECK_NOTHROW(welch_psd(x, 1e6, 500, 0.0));
}

TEST_CASE("multisine peaks") {
    const std::vector<double> f{25e3, 40e3, 55e3, 70e3, 85e3}, a(5, 1.0), ph{0, 1, 2, 3, 4};
    const auto w = multisine(f, a, ph, 16.384e-3, 1e6);
    const auto p = welch_psd(w);
    for (double fk : f) {
        const auto bin = static_cast<std::size_t>(std::lround(fk / p.bin_width()));
        // each tone stands well above a bin half-way between tones
        const auto gap = static_cast<std::size_t>(std::lround((fk + 7.5e3) / p.bin_width()));
        CHECK(10 * std::log10(p.psd[bin] / p.psd[gap]) > 40.0);
    }
}

TEST_CASE("chirp psd is concentrated in band") {
    const auto w = log_chirp(ChirpSpec{}, 1e6);
    const auto p = welch_psd(w);
    double in = 0.0, out = 0.0;
    std::size_t nin = 0, nout = 0;
    for (std::size_t i = 0; i < p.psd.size(); ++i) {
        const double f = p.freqs_hz[i];
        if (f >= 20e3 && f <= 100e3) {
            in += p.psd[i];
            ++nin;
        } else if (f > 150e3) {
            out += p.psd[i];
            ++nout;
        }
    }
    CHECK(10 * std::log10((in / static_cast<double>(nin)) / (out / static_cast<double>(nout))) > 20.0);
}

TEST_CASE("spectrogram") {
    SUBCASE("tone gives a flat ridge that matches welch") {
        const auto x = tone(40e3, 8192, 1e6);
        const auto s = spectrogram(x, 1e6);
        CHECK(s.bins() == 129);
        const auto ridge = spectrogram_ridge(s);
        const double df = s.freqs_hz[1];
        for (double r : ridge) CHECK(std::abs(r - 40e3) <= df);
        const auto p = welch_psd(x, 1e6, 256);
        CHECK(ridge[ridge.size() / 2] == p.freqs_hz[argmax(p.psd)]);
        // full-scale tone, Hann coherent gain normalised
        CHECK(s.frame(3)[argmax(s.frame(3))] == doctest::Approx(20 * std::log10(0.5)).epsilon(0.2));
    }
    SUBCASE("log chirp ridge descends and follows the sweep law") {
        const ChirpSpec spec;
        const auto s = spectrogram(log_chirp(spec, 1e6));
        const auto ridge = spectrogram_ridge(s);
        const double df = s.freqs_hz[1];
        for (std::size_t i = 0; i < ridge.size(); ++i) {
            const double want = 100e3 * std::pow(0.2, s.times_s[i] / spec.duration);
            CHECK(std::abs(ridge[i] - want) <= df);
        }
        CHECK(ridge.front() > ridge.back());
    }
    CHECK_THROWS_AS(spectrogram(tone(1e3, 100, 1e6), 1e6, 256, 64), std::invalid_argument);
    CHECK_THROWS_AS(spectrogram(tone(1e3, 1000, 1e6), 1e6, 256, 0), std::invalid_argument);
}

TEST_CASE("lobe metrics of a uniform 32-element line") {
    const auto angles = make_axis(-90, 90, 0.1);
    const auto pat = line_pattern_db(32, 3.05e-3, 40e3, 343.0, angles);
    const auto r = lobe_metrics(pat, angles);
    CHECK(r.main_direction_deg == doctest::Approx(0.0));
    CHECK(r.main_level_db == 0.0);
    REQUIRE(r.sidelobe_level_db.has_value());
    CHECK(std::abs(*r.sidelobe_level_db + 13.2) <= 0.3);
    REQUIRE(r.beamwidth_3db_deg.has_value());
    // uniform aperture: 0.886 lambda / (M d) radians
    const double approx = 0.886 * (343.0 / 40e3) / (32 * 3.05e-3) * 180 / std::numbers::pi;
    CHECK(*r.beamwidth_3db_deg == doctest::Approx(approx).epsilon(0.02));
    for (const auto& l : r.lobes) CHECK(l.level_db <= 0.0);

    const auto j = to_json(r);
    CHECK(j.at("main_direction_deg").get<double>() == doctest::Approx(0.0));
    CHECK(j.at("lobes").size() == r.lobes.size());
}

TEST_CASE("lobe metrics edge cases") {
    const std::vector<double> angles{-1, 0, 1};
    CHECK_THROWS_AS(lobe_metrics(std::vector<double>{0, 0, 0}, angles), std::invalid_argument);
    CHECK_THROWS_AS(lobe_metrics(std::vector<double>{0, -1}, std::vector<double>{0, 1}), std::invalid_argument);

    SUBCASE("shallow dips merge") {
        const std::vector<double> ax{0, 1, 2, 3, 4, 5, 6};
        const std::vector<double> pat{-20, -1, -2, 0, -20, -25, -30};
        const auto r = lobe_metrics(pat, ax);
        CHECK(r.main_direction_deg == 3.0);
        CHECK_FALSE(r.sidelobe_level_db.has_value());
    }
    SUBCASE("deep dips separate") {
        const std::vector<double> ax{0, 1, 2, 3, 4, 5, 6};
        const std::vector<double> pat{-20, -4, -10, 0, -20, -25, -30};
        const auto r = lobe_metrics(pat, ax);
        REQUIRE(r.sidelobe_level_db.has_value());
        CHECK(*r.sidelobe_level_db == -4.0);
    }
}

TEST_CASE("property: main direction is invariant under monotone rescaling") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> lvl(-40, 0), scale(0.2, 5), shift(-30, 30);
    const auto ax = make_axis(-90, 90, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> pat(ax.size());
        for (auto& v : pat) v = lvl(rng);
        const auto base = lobe_metrics(pat, ax).main_direction_deg;
        const double s = scale(rng), o = shift(rng);
        std::vector<double> t(pat);
        for (auto& v : t) v = s * v + o;
        CHECK(lobe_metrics(t, ax).main_direction_deg == base);
        for (auto& v : t) v = std::exp(v / 10);
        CHECK(lobe_metrics(t, ax).main_direction_deg == base);
    }
}

TEST_CASE("steered main direction matches the array factor argmax") {
    const auto g = default_array();
    const auto angles = make_axis(-90, 90, 0.5);
    for (double phi : {-40.0, -10.0, 25.0}) {
        const std::vector<double> f{40e3};
        const auto grid = frequency_angle_map(g, SteerAngles::azimuth_deg(phi), f, angles);
        CHECK(std::abs(lobe_metrics(grid.row(0), angles).main_direction_deg - phi) <= 0.5);
    }
}

TEST_CASE("grating onset from simulated maps") {
    const auto g = default_array();
    const MapOptions opt;
    SUBCASE("steered to 90 deg") {
        const auto onset = grating_onset_from_map(frequency_angle_map(g, SteerAngles::azimuth_deg(90), opt));
        REQUIRE(onset.has_value());
        CHECK(std::abs(*onset - 343.0 / (2 * 3.05e-3)) <= 2e3);
    }
    SUBCASE("steered to -40 deg") {
        const auto onset = grating_onset_from_map(frequency_angle_map(g, SteerAngles::azimuth_deg(-40), opt));
        REQUIRE(onset.has_value());
        CHECK(std::abs(*onset - 343.0 / (3.05e-3 * (1 + std::sin(40 * std::numbers::pi / 180)))) <= 3e3);
    }
    SUBCASE("broadside has none") {
        CHECK_FALSE(grating_onset_from_map(frequency_angle_map(g, {}, opt)).has_value());
    }
    SUBCASE("property: stricter threshold never raises the onset") {
        for (double phi : {90.0, 80.0, -40.0, 60.0}) {
            const auto grid = frequency_angle_map(g, SteerAngles::azimuth_deg(phi), opt);
            double prev = 0.0;
            for (double th : {-1.0, -3.0, -6.0, -10.0, -15.0, -20.0}) {
                const auto o = grating_onset_from_map(grid, th);
                const double v = o.value_or(1e12);
                if (th < -1.0) CHECK(v <= prev);
                prev = v;
            }
        }
    }
    CHECK_THROWS_AS(grating_onset_from_map(FieldGrid{}), std::invalid_argument);
    CHECK_THROWS_AS(grating_onset_from_map(frequency_angle_map(g, {}, opt), 0.0), std::invalid_argument);
}

TEST_CASE("integrate_map") {
    FieldGrid grid{{-10, 0, 10}, {1e3, 2e3}, {0, -3, -10, -10, -3, 0}};
    const auto p = integrate_map(grid, 0, 5e3);
    CHECK(p.level_db[0] == doctest::Approx(0.0));
    CHECK(p.level_db[2] == doctest::Approx(0.0));
    CHECK(p.level_db[1] == doctest::Approx(10 * std::log10(2 * std::pow(10.0, -0.3) / 1.1)).epsilon(1e-12));
    const auto one = integrate_map(grid, 1.5e3, 5e3);
    CHECK(one.level_db[0] == doctest::Approx(-10.0));
    CHECK(one.level_db[1] == doctest::Approx(-3.0));
    CHECK(one.level_db[2] == doctest::Approx(0.0));
    CHECK_THROWS(integrate_map(grid, 5e3, 6e3));
}

TEST_CASE("csv exports") {
    const auto p = welch_psd(tone(40e3, 2048, 1e6), 1e6, 256);
    std::stringstream a;
    write_psd_csv(a, p);
    CHECK(a.str().rfind("freq_hz,psd\n0,", 0) == 0);

    const auto s = spectrogram(tone(40e3, 1024, 1e6), 1e6, 256, 128);
    std::stringstream b;
    write_spectrogram_csv(b, s);
    const auto text = b.str();
    CHECK(text.rfind("time_s,0,", 0) == 0);
    CHECK(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')) == s.frames() + 1);

    std::stringstream c;
    write_pattern_csv(c, AnglePattern{{-1, 0, 1}, {-3, 0, -3}});
    CHECK(c.str() == "angle_deg,level_db\n-1,-3\n0,0\n1,-3\n");
}
