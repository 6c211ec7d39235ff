// SPDX-License-Identifier: Apache-2.0

#include "conam/emission.hpp"

#include "conam/text_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace conam {

EmissionMatrix::EmissionMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint16_t> codes,
                               double sample_rate, std::optional<EmissionProvenance> provenance)
    : rows_(rows), cols_(cols), codes_(std::move(codes)), sample_rate_(sample_rate),
      provenance_(std::move(provenance)) {
    if (rows_ == 0 || cols_ == 0) throw std::invalid_argument("EmissionMatrix: M and N must be non-zero");
    if (codes_.size() != rows_ * cols_) throw std::invalid_argument("EmissionMatrix: code count != M * N");
    if (!(sample_rate_ > 0.0) || !std::isfinite(sample_rate_))
        throw std::invalid_argument("EmissionMatrix: sample rate must be positive");
    for (auto c : codes_)
        if (c > kDacMaxCode) throw std::invalid_argument("EmissionMatrix: code exceeds 12 bits");
}

std::span<const std::uint16_t> EmissionMatrix::row(std::size_t m) const {
    if (m >= rows_) throw std::out_of_range("EmissionMatrix::row");
    return std::span<const std::uint16_t>(codes_).subspan(m * cols_, cols_);
}

std::vector<double> EmissionMatrix::row_drive(std::size_t m) const {
    const auto r = row(m);
    std::vector<double> out(r.size());
    for (std::size_t n = 0; n < r.size(); ++n)
        out[n] = (static_cast<double>(r[n]) - static_cast<double>(kDacSilence)) * 2.0 / kDacMaxCode;
    return out;
}

EmissionMatrix assemble_emission_matrix(const ArrayGeometry& g, const SteerAngles& a, const Waveform& w, double c,
                                        std::span<const double> weights) {
    if (w.empty()) throw std::invalid_argument("assemble_emission_matrix: empty waveform");
    const std::size_t M = g.size();
    if (!weights.empty()) {
        if (weights.size() != M) throw std::invalid_argument("assemble_emission_matrix: weights length != element count");
        for (double wt : weights)
            if (!(wt >= 0.0 && wt <= 1.0)) throw std::invalid_argument("assemble_emission_matrix: weights must lie in [0, 1]");
    }

    const auto shifts = quantize_delays(transmit_delays(g, a, c), w.sample_rate());
    const auto max_k = static_cast<std::size_t>(shifts.max_shift());
    const std::size_t N = w.size() + max_k;

    std::vector<std::uint16_t> codes(M * N, kDacSilence);
    const auto unit = quantize_to_dac(w);
    for (std::size_t m = 0; m < M; ++m) {
        const bool unit_weight = weights.empty() || weights[m] == 1.0;
        const auto row = unit_weight ? unit : quantize_to_dac(w.scaled(weights[m]));
        const auto k = static_cast<std::size_t>(shifts.k[m]);
        std::copy(row.codes.begin(), row.codes.end(), codes.begin() + static_cast<std::ptrdiff_t>(m * N + k));
    }
    return EmissionMatrix(M, N, std::move(codes), w.sample_rate(), EmissionProvenance{a, g.digest()});
}

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'N', 'M', 'A'};
constexpr std::size_t kHeaderSize = 16;

template <typename T>
void put_le(std::ostream& out, T v) {
    char bytes[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    out.write(bytes, sizeof(T));
}

template <typename T>
T get_le(const unsigned char* p) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return static_cast<T>(v);
}

} // namespace

void write_dacmat(std::ostream& out, const EmissionMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw FormatError("dacmat: M and N must be non-zero");
    if (m.rows() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("dacmat: M does not fit in u16");
    if (m.cols() > std::numeric_limits<std::uint32_t>::max()) throw FormatError("dacmat: N does not fit in u32");
    const double fs = m.sample_rate();
    if (fs != std::floor(fs) || fs > std::numeric_limits<std::uint32_t>::max())
        throw FormatError("dacmat: sample rate must be an integral number of Hz below 2^32");

    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint16_t>(out, kDacmatVersion);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(m.rows()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(fs));
    for (auto c : m.codes()) put_le<std::uint16_t>(out, c);
    if (!out) throw std::runtime_error("dacmat: write failed");
}

EmissionMatrix read_dacmat(std::istream& in) {
    unsigned char header[kHeaderSize];
    in.read(reinterpret_cast<char*>(header), kHeaderSize);
    if (in.gcount() != static_cast<std::streamsize>(kHeaderSize)) throw FormatError("dacmat: truncated header");
    if (!std::equal(kMagic.begin(), kMagic.end(), header, [](char a, unsigned char b) { return static_cast<unsigned char>(a) == b; }))
        throw FormatError("dacmat: bad magic");
    const auto version = get_le<std::uint16_t>(header + 4);
    if (version != kDacmatVersion) throw FormatError("dacmat: unsupported version " + std::to_string(version));
    const auto M = get_le<std::uint16_t>(header + 6);
    const auto N = get_le<std::uint32_t>(header + 8);
    const auto fs = get_le<std::uint32_t>(header + 12);
    if (M == 0 || N == 0) throw FormatError("dacmat: M and N must be non-zero");
    if (fs == 0) throw FormatError("dacmat: zero sample rate");

    const std::size_t count = static_cast<std::size_t>(M) * N;
    std::vector<unsigned char> payload(count * 2);
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size())
        throw FormatError("dacmat: truncated payload, expected " + std::to_string(payload.size()) + " bytes");

    std::vector<std::uint16_t> codes(count);
    for (std::size_t i = 0; i < count; ++i) {
        codes[i] = get_le<std::uint16_t>(payload.data() + 2 * i);
        if (codes[i] > kDacMaxCode) throw FormatError("dacmat: code " + std::to_string(codes[i]) + " exceeds 12 bits");
    }
    return EmissionMatrix(M, N, std::move(codes), static_cast<double>(fs));
}

void write_dacmat(const std::filesystem::path& path, const EmissionMatrix& m) {
    text::write_file_atomic(path, [&](std::ostream& out) { write_dacmat(out, m); }, true);
}

EmissionMatrix read_dacmat(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_dacmat(in);
}

} // namespace conam
