// SPDX-License-Identifier: Apache-2.0

#include "conam/waveform.hpp"

#include "conam/steering.hpp"
#include "conam/text_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace conam {

namespace {

void check_nyquist(double f, double fs, const char* who) {
    if (!(fs > 2.0 * f))
        throw std::invalid_argument(std::string(who) + ": sample rate must exceed twice the highest frequency");
}

} // namespace

std::vector<double> make_window(const Window& w, std::size_t n, bool symmetric) {
    std::vector<double> out(n, 1.0);
    if (n <= 1 || w.kind == WindowKind::Rectangular) return out;
    const double denom = symmetric ? static_cast<double>(n - 1) : static_cast<double>(n);

    switch (w.kind) {
    case WindowKind::Hann:
        for (std::size_t i = 0; i < n; ++i) out[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / denom);
        break;
    case WindowKind::Tukey: {
        const double a = w.tukey_alpha;
        if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("tukey alpha must lie in [0, 1]");
        if (a == 0.0) break;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = static_cast<double>(i) / denom;
            if (x < a / 2.0)
                out[i] = 0.5 * (1.0 + std::cos(2.0 * kPi / a * (x - a / 2.0)));
            else if (x > 1.0 - a / 2.0)
                out[i] = 0.5 * (1.0 + std::cos(2.0 * kPi / a * (x - 1.0 + a / 2.0)));
        }
        break;
    }
    case WindowKind::Rectangular:
        break;
    }
    return out;
}

Waveform::Waveform(std::vector<double> samples, double sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
        throw std::invalid_argument("Waveform: sample rate must be positive");
    for (double s : samples_)
        if (!std::isfinite(s) || s < -1.0 || s > 1.0)
            throw std::invalid_argument("Waveform: samples must be finite and within [-1, 1]");
}

double Waveform::peak() const noexcept {
    double p = 0.0;
    for (double s : samples_) p = std::max(p, std::abs(s));
    return p;
}

Waveform Waveform::scaled(double gain) const {
    std::vector<double> out(samples_);
    for (auto& s : out) s *= gain;
    return Waveform(std::move(out), sample_rate_);
}

void ChirpSpec::validate() const {
    if (!(f_start > 0.0) || !(f_end > 0.0)) throw std::invalid_argument("chirp: frequencies must be positive");
    if (f_start == f_end) throw std::invalid_argument("chirp: log sweep needs f_start != f_end");
    if (!(duration > 0.0)) throw std::invalid_argument("chirp: duration must be positive");
    if (!(amplitude > 0.0 && amplitude <= 1.0)) throw std::invalid_argument("chirp: amplitude must lie in (0, 1]");
}

double chirp_phase(const ChirpSpec& spec, double t) {
    const double r = spec.f_end / spec.f_start;
    const double T = spec.duration;
    return 2.0 * kPi * spec.f_start * (T / std::log(r)) * (std::pow(r, t / T) - 1.0);
}

double chirp_instantaneous_frequency(const ChirpSpec& spec, double t) {
    return spec.f_start * std::pow(spec.f_end / spec.f_start, t / spec.duration);
}

Waveform log_chirp(const ChirpSpec& spec, double sample_rate) {
    spec.validate();
    check_nyquist(std::max(spec.f_start, spec.f_end), sample_rate, "log_chirp");
    const auto n = static_cast<std::size_t>(std::llround(spec.duration * sample_rate));
    const auto win = make_window(spec.window, n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i)
        s[i] = spec.amplitude * win[i] * std::sin(chirp_phase(spec, static_cast<double>(i) / sample_rate));
    return Waveform(std::move(s), sample_rate);
}

Waveform sine_burst(double frequency, std::size_t cycles, double sample_rate, double amplitude, const Window& window) {
    if (!(frequency > 0.0)) throw std::invalid_argument("sine_burst: frequency must be positive");
    if (cycles == 0) throw std::invalid_argument("sine_burst: at least one cycle required");
    if (!(amplitude > 0.0 && amplitude <= 1.0)) throw std::invalid_argument("sine_burst: amplitude must lie in (0, 1]");
    check_nyquist(frequency, sample_rate, "sine_burst");
    const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(cycles) * sample_rate / frequency));
    const auto win = make_window(window, n);
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i)
        s[i] = amplitude * win[i] * std::sin(2.0 * kPi * frequency * static_cast<double>(i) / sample_rate);
    return Waveform(std::move(s), sample_rate);
}

Waveform multisine(std::span<const double> freqs, std::span<const double> amps, std::span<const double> phases,
                   double duration, double sample_rate, double amplitude) {
    if (freqs.empty()) throw std::invalid_argument("multisine: no frequencies");
    if (amps.size() != freqs.size() || phases.size() != freqs.size())
        throw std::invalid_argument("multisine: frequency, amplitude and phase lists differ in length");
    if (!(duration > 0.0)) throw std::invalid_argument("multisine: duration must be positive");
    if (!(amplitude > 0.0 && amplitude <= 1.0)) throw std::invalid_argument("multisine: amplitude must lie in (0, 1]");
    for (double f : freqs)
        if (!(f > 0.0)) throw std::invalid_argument("multisine: frequencies must be positive");
    check_nyquist(*std::max_element(freqs.begin(), freqs.end()), sample_rate, "multisine");

    const auto n = static_cast<std::size_t>(std::llround(duration * sample_rate));
    std::vector<double> s(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        for (std::size_t j = 0; j < freqs.size(); ++j) s[i] += amps[j] * std::sin(2.0 * kPi * freqs[j] * t + phases[j]);
    }
    double peak = 0.0;
    for (double v : s) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) throw std::invalid_argument("multisine: components cancel to silence");
    for (auto& v : s) v = std::clamp(v * (amplitude / peak), -1.0, 1.0);
    return Waveform(std::move(s), sample_rate);
}

std::uint16_t quantize_sample(double s) {
    if (!std::isfinite(s) || s < -1.0 || s > 1.0) throw std::invalid_argument("quantize_sample: sample outside [-1, 1]");
    const double code = std::round((s + 1.0) / 2.0 * kDacMaxCode);
    return static_cast<std::uint16_t>(std::clamp(code, 0.0, static_cast<double>(kDacMaxCode)));
}

double dequantize_code(std::uint16_t code) {
    if (code > kDacMaxCode) throw std::invalid_argument("dequantize_code: code exceeds 12 bits");
    return static_cast<double>(code) / kDacMaxCode * 2.0 - 1.0;
}

DacCodes quantize_to_dac(const Waveform& w) {
    DacCodes d;
    d.codes.reserve(w.size());
    for (double s : w.samples()) d.codes.push_back(quantize_sample(s));
    return d;
}

void write_waveform_csv(std::ostream& out, const Waveform& w) {
    out << "# sample_rate_hz=" << text::format_double(w.sample_rate()) << '\n';
    out << "n,s\n";
    const auto s = w.samples();
    for (std::size_t n = 0; n < s.size(); ++n) out << n << ',' << text::format_double(s[n]) << '\n';
}

Waveform read_waveform_csv(std::istream& in) {
    std::string line;
    const std::string prefix = "# sample_rate_hz=";
    if (!text::read_line(in, line) || line.rfind(prefix, 0) != 0)
        throw std::runtime_error("waveform csv: missing '# sample_rate_hz=' line");
    const double fs = text::parse_double(std::string_view(line).substr(prefix.size()));
    if (!text::read_line(in, line) || line != "n,s") throw std::runtime_error("waveform csv: missing header 'n,s'");
    std::vector<double> s;
    while (text::read_line(in, line)) {
        if (line.empty()) continue;
        auto f = text::split(line);
        if (f.size() != 2) throw std::runtime_error("waveform csv: expected 2 fields: " + line);
        if (text::parse_integer(f[0]) != static_cast<long long>(s.size()))
            throw std::runtime_error("waveform csv: sample index out of order");
        s.push_back(text::parse_double(f[1]));
    }
    return Waveform(std::move(s), fs);
}

void write_waveform_raw(const std::filesystem::path& path, const Waveform& w) {
    text::write_file_atomic(
        path,
        [&](std::ostream& out) {
            for (double s : w.samples()) {
                const auto v = static_cast<std::int16_t>(std::lround(s * 32767.0));
                const auto u = static_cast<std::uint16_t>(v);
                const char bytes[2] = {static_cast<char>(u & 0xff), static_cast<char>(u >> 8)};
                out.write(bytes, 2);
            }
        },
        true);
    nlohmann::json meta = {{"format", "s16le"},
                           {"scale", 32767},
                           {"sample_rate_hz", w.sample_rate()},
                           {"length", w.size()}};
    auto sidecar = path;
    sidecar += ".json";
    text::write_file_atomic(sidecar, [&](std::ostream& out) { out << meta.dump(2) << '\n'; });
}

Waveform read_waveform_raw(const std::filesystem::path& path) {
    auto sidecar = path;
    sidecar += ".json";
    std::ifstream meta_in(sidecar);
    if (!meta_in) throw std::runtime_error("missing sidecar " + sidecar.string());
    const auto meta = nlohmann::json::parse(meta_in);
    if (meta.value("format", "") != "s16le") throw std::runtime_error("raw waveform: unsupported format");
    const double fs = meta.at("sample_rate_hz").get<double>();
    const auto len = meta.at("length").get<std::size_t>();

    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<double> s;
    s.reserve(len);
    unsigned char bytes[2];
    while (in.read(reinterpret_cast<char*>(bytes), 2)) {
        const auto u = static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
        s.push_back(std::clamp(static_cast<std::int16_t>(u) / 32767.0, -1.0, 1.0));
    }
    if (s.size() != len) throw std::runtime_error("raw waveform: length does not match sidecar");
    return Waveform(std::move(s), fs);
}

} // namespace conam
