// SPDX-License-Identifier: Apache-2.0

#include "conam/analysis.hpp"

#include "conam/text_io.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <ostream>
#include <stdexcept>

namespace conam {

namespace {

// Real-to-complex transform of fixed length. FFTW planning is not
// thread-safe; plans are made on the calling thread only.
class RealFft {
public:
    explicit RealFft(std::size_t n)
        : n_(n), in_(fftw_alloc_real(n)), out_(fftw_alloc_complex(n / 2 + 1)) {
        if (!in_ || !out_) throw std::bad_alloc();
        plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE);
        if (!plan_) throw std::runtime_error("fftw: plan creation failed");
    }
    ~RealFft() { fftw_destroy_plan(plan_); }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t bins() const noexcept { return n_ / 2 + 1; }

    // |X_k|^2 of the windowed frame.
    void power(std::span<const double> frame, std::span<const double> window, std::vector<double>& out) {
        for (std::size_t i = 0; i < n_; ++i) in_.get()[i] = frame[i] * window[i];
        fftw_execute(plan_);
        out.resize(bins());
        for (std::size_t k = 0; k < bins(); ++k) {
            const double re = out_.get()[k][0];
            const double im = out_.get()[k][1];
            out[k] = re * re + im * im;
        }
    }

private:
    struct Free {
        void operator()(void* p) const noexcept { fftw_free(p); }
    };
    std::size_t n_;
    std::unique_ptr<double, Free> in_;
    std::unique_ptr<fftw_complex, Free> out_;
    fftw_plan plan_ = nullptr;
};

std::vector<double> bin_freqs(std::size_t n, double fs) {
    std::vector<double> f(n / 2 + 1);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = static_cast<double>(k) * fs / static_cast<double>(n);
    return f;
}

double to_db(double p) { return p > 0.0 ? std::max(10.0 * std::log10(p), -300.0) : -300.0; }

PowerSpectrum record_spectrum(const Waveform& w, std::size_t segment_len) {
    if (segment_len == 0) return welch_psd(w.samples(), w.sample_rate(), w.size(), 0.0, Window::rectangular());
    return welch_psd(w, segment_len);
}

} // namespace

PowerSpectrum welch_psd(std::span<const double> x, double fs, std::size_t segment_len, double overlap,
                        const Window& window) {
    if (!(fs > 0.0)) throw std::invalid_argument("welch_psd: sample rate must be positive");
    if (segment_len < 2) throw std::invalid_argument("welch_psd: segment must hold at least 2 samples");
    if (segment_len > x.size()) throw std::invalid_argument("welch_psd: segment longer than signal");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw std::invalid_argument("welch_psd: overlap must lie in [0, 1)");

    const auto win = make_window(window, segment_len, false);
    double win_power = 0.0;
    for (double w : win) win_power += w * w;
    const auto step = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(segment_len * (1.0 - overlap))));

    RealFft fft(segment_len);
    PowerSpectrum out;
    out.freqs_hz = bin_freqs(segment_len, fs);
    out.psd.assign(fft.bins(), 0.0);
    std::vector<double> power;
    std::size_t segments = 0;
    for (std::size_t start = 0; start + segment_len <= x.size(); start += step) {
        fft.power(x.subspan(start, segment_len), win, power);
        for (std::size_t k = 0; k < power.size(); ++k) out.psd[k] += power[k];
        ++segments;
    }

    const double scale = 1.0 / (fs * win_power * static_cast<double>(segments));
    const bool even = segment_len % 2 == 0;
    for (std::size_t k = 0; k < out.psd.size(); ++k) {
        const bool unpaired = k == 0 || (even && k == out.psd.size() - 1);
        out.psd[k] *= scale * (unpaired ? 1.0 : 2.0);
    }
    return out;
}

PowerSpectrum welch_psd(const Waveform& w, std::size_t segment_len, double overlap, const Window& window) {
    return welch_psd(w.samples(), w.sample_rate(), segment_len, overlap, window);
}

Spectrogram spectrogram(std::span<const double> x, double fs, std::size_t frame_len, std::size_t hop,
                        const Window& window) {
    if (!(fs > 0.0)) throw std::invalid_argument("spectrogram: sample rate must be positive");
    if (frame_len < 2 || hop == 0) throw std::invalid_argument("spectrogram: degenerate framing");
    if (frame_len > x.size()) throw std::invalid_argument("spectrogram: frame longer than signal");

    const auto win = make_window(window, frame_len, false);
    double win_sum = 0.0;
    for (double w : win) win_sum += w;

    RealFft fft(frame_len);
    Spectrogram s;
    s.freqs_hz = bin_freqs(frame_len, fs);
    std::vector<double> power;
    for (std::size_t start = 0; start + frame_len <= x.size(); start += hop) {
        fft.power(x.subspan(start, frame_len), win, power);
        s.times_s.push_back((static_cast<double>(start) + 0.5 * static_cast<double>(frame_len)) / fs);
        for (double p : power) s.magnitude_db.push_back(to_db(p / (win_sum * win_sum)));
    }
    return s;
}

Spectrogram spectrogram(const Waveform& w, std::size_t frame_len, std::size_t hop, const Window& window) {
    return spectrogram(w.samples(), w.sample_rate(), frame_len, hop, window);
}

std::vector<double> spectrogram_ridge(const Spectrogram& s) {
    std::vector<double> ridge;
    ridge.reserve(s.frames());
    for (std::size_t i = 0; i < s.frames(); ++i) {
        const auto f = s.frame(i);
        const auto k = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
        ridge.push_back(s.freqs_hz[k]);
    }
    return ridge;
}

LobeReport lobe_metrics(std::span<const double> pattern_db, std::span<const double> angles_deg) {
    const std::size_t n = pattern_db.size();
    if (n < 3) throw std::invalid_argument("lobe_metrics: need at least 3 samples");
    if (angles_deg.size() != n) throw std::invalid_argument("lobe_metrics: pattern and angle axis differ in length");

    const double top = *std::max_element(pattern_db.begin(), pattern_db.end());
    const double bottom = *std::min_element(pattern_db.begin(), pattern_db.end());
    if (!(top - bottom > 1e-9)) throw std::invalid_argument("lobe_metrics: flat pattern has no lobes");
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = pattern_db[i] - top;

    // Candidate peaks: plateau runs higher than both neighbours (the axis
    // ends count as lower), represented by the run's middle sample.
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && p[j + 1] == p[i]) ++j;
        const bool left_lower = i == 0 || p[i - 1] < p[i];
        const bool right_lower = j + 1 == n || p[j + 1] < p[i];
        if (left_lower && right_lower) peaks.push_back((i + j) / 2);
        i = j + 1;
    }

    // Merge neighbours not separated by a 3 dB dip.
    bool merged = true;
    while (merged && peaks.size() > 1) {
        merged = false;
        for (std::size_t q = 0; q + 1 < peaks.size(); ++q) {
            const std::size_t a = peaks[q];
            const std::size_t b = peaks[q + 1];
            const double dip = *std::min_element(p.begin() + static_cast<std::ptrdiff_t>(a),
                                                 p.begin() + static_cast<std::ptrdiff_t>(b) + 1);
            if (dip > std::min(p[a], p[b]) - 3.0) {
                peaks.erase(peaks.begin() + static_cast<std::ptrdiff_t>(p[a] >= p[b] ? q + 1 : q));
                merged = true;
                break;
            }
        }
    }

    std::size_t main = peaks.front();
    for (auto i : peaks)
        if (p[i] > p[main]) main = i;

    LobeReport r;
    r.main_direction_deg = angles_deg[main];
    r.main_level_db = p[main];
    for (auto i : peaks) {
        r.lobes.push_back({angles_deg[i], p[i]});
        if (i != main) r.sidelobe_level_db = std::max(r.sidelobe_level_db.value_or(-1e300), p[i]);
    }

    const double edge = p[main] - 3.0;
    auto crossing = [&](std::size_t from, int dir) -> std::optional<double> {
        std::size_t i = from;
        while (true) {
            if ((dir < 0 && i == 0) || (dir > 0 && i + 1 == n)) return std::nullopt;
            const std::size_t j = dir < 0 ? i - 1 : i + 1;
            if (p[j] <= edge) {
                const double t = (p[i] - edge) / (p[i] - p[j]);
                return angles_deg[i] + t * (angles_deg[j] - angles_deg[i]);
            }
            i = j;
        }
    };
    const auto lo = crossing(main, -1);
    const auto hi = crossing(main, +1);
    if (lo && hi) r.beamwidth_3db_deg = *hi - *lo;
    return r;
}

std::optional<double> grating_onset_from_map(const FieldGrid& grid, double threshold_db) {
    grid.validate();
    if (!(threshold_db < 0.0)) throw std::invalid_argument("grating_onset_from_map: threshold must be negative");

    std::vector<std::size_t> order(grid.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return grid.freqs_hz[a] < grid.freqs_hz[b]; });

    for (auto fi : order) {
        const auto row = grid.row(fi);
        const double top = *std::max_element(row.begin(), row.end());
        const double bottom = *std::min_element(row.begin(), row.end());
        if (row.size() < 3 || !(top - bottom > 1e-9)) continue;
        const auto report = lobe_metrics(row, grid.angles_deg);
        if (report.sidelobe_level_db && *report.sidelobe_level_db > threshold_db) return grid.freqs_hz[fi];
    }
    return std::nullopt;
}

AnglePattern integrate_map(const FieldGrid& grid, double f_lo, double f_hi) {
    grid.validate();
    AnglePattern out;
    out.angles_deg = grid.angles_deg;
    std::vector<double> sum(grid.cols(), 0.0);
    std::size_t used = 0;
    for (std::size_t fi = 0; fi < grid.rows(); ++fi) {
        const double f = grid.freqs_hz[fi];
        if (f < f_lo || f > f_hi) continue;
        ++used;
        const auto row = grid.row(fi);
        for (std::size_t ai = 0; ai < grid.cols(); ++ai) sum[ai] += std::pow(10.0, row[ai] / 10.0);
    }
    if (used == 0) throw std::invalid_argument("integrate_map: no frequencies inside the band");
    out.level_db = power_to_db(sum, 1, sum.size(), Normalization::Global);
    return out;
}

FieldGrid sweep_map(std::span<const SweepPoint> sweep, double f_min, double f_max, Normalization norm,
                    std::size_t segment_len) {
    if (sweep.empty()) throw std::invalid_argument("sweep_map: empty sweep");
    if (!(f_max > f_min)) throw std::invalid_argument("sweep_map: empty band");

    FieldGrid grid;
    std::vector<std::vector<double>> columns;
    for (const auto& pt : sweep) {
        const auto psd = record_spectrum(pt.signal, segment_len);
        std::vector<double> col;
        std::vector<double> freqs;
        for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k) {
            if (psd.freqs_hz[k] < f_min || psd.freqs_hz[k] > f_max) continue;
            freqs.push_back(psd.freqs_hz[k]);
            col.push_back(psd.psd[k]);
        }
        if (grid.freqs_hz.empty())
            grid.freqs_hz = std::move(freqs);
        else if (freqs != grid.freqs_hz)
            throw std::invalid_argument("sweep_map: sweep stops differ in sample rate");
        grid.angles_deg.push_back(pt.angle_deg);
        columns.push_back(std::move(col));
    }
    if (grid.freqs_hz.empty()) throw std::invalid_argument("sweep_map: no PSD bins inside the band");

    std::vector<double> power(grid.freqs_hz.size() * grid.angles_deg.size());
    for (std::size_t fi = 0; fi < grid.rows(); ++fi)
        for (std::size_t ai = 0; ai < grid.cols(); ++ai) power[fi * grid.cols() + ai] = columns[ai][fi];
    grid.energy_db = power_to_db(power, grid.rows(), grid.cols(), norm);
    return grid;
}

AnglePattern band_power_pattern(std::span<const SweepPoint> sweep, double f_lo, double f_hi, std::size_t segment_len) {
    if (sweep.empty()) throw std::invalid_argument("band_power_pattern: empty sweep");
    AnglePattern out;
    std::vector<double> power;
    for (const auto& pt : sweep) {
        const auto psd = record_spectrum(pt.signal, segment_len);
        double sum = 0.0;
        for (std::size_t k = 0; k < psd.freqs_hz.size(); ++k)
            if (psd.freqs_hz[k] >= f_lo && psd.freqs_hz[k] <= f_hi) sum += psd.psd[k] * psd.bin_width();
        out.angles_deg.push_back(pt.angle_deg);
        power.push_back(sum);
    }
    out.level_db = power_to_db(power, 1, power.size(), Normalization::Global);
    return out;
}

nlohmann::json to_json(const LobeReport& r) {
    nlohmann::json j;
    j["main_direction_deg"] = r.main_direction_deg;
    j["main_level_db"] = r.main_level_db;
    j["beamwidth_3db_deg"] = r.beamwidth_3db_deg ? nlohmann::json(*r.beamwidth_3db_deg) : nlohmann::json(nullptr);
    j["sidelobe_level_db"] = r.sidelobe_level_db ? nlohmann::json(*r.sidelobe_level_db) : nlohmann::json(nullptr);
    j["lobes"] = nlohmann::json::array();
    for (const auto& l : r.lobes) j["lobes"].push_back({{"angle_deg", l.angle_deg}, {"level_db", l.level_db}});
    return j;
}

void write_psd_csv(std::ostream& out, const PowerSpectrum& p) {
    out << "freq_hz,psd\n";
    for (std::size_t k = 0; k < p.freqs_hz.size(); ++k)
        out << text::format_double(p.freqs_hz[k]) << ',' << text::format_double(p.psd[k]) << '\n';
}

void write_spectrogram_csv(std::ostream& out, const Spectrogram& s) {
    out << "time_s";
    for (double f : s.freqs_hz) out << ',' << text::format_double(f);
    out << '\n';
    for (std::size_t i = 0; i < s.frames(); ++i) {
        out << text::format_double(s.times_s[i]);
        for (double v : s.frame(i)) out << ',' << text::format_double(v);
        out << '\n';
    }
}

void write_pattern_csv(std::ostream& out, const AnglePattern& p) {
    out << "angle_deg,level_db\n";
    for (std::size_t i = 0; i < p.angles_deg.size(); ++i)
        out << text::format_double(p.angles_deg[i]) << ',' << text::format_double(p.level_db[i]) << '\n';
}

} // namespace conam
