// SPDX-License-Identifier: Apache-2.0
//
// The M x N matrix of DAC codes driving the array, one row per element, and
// its `.dacmat` binary interchange format:
//
//   offset  size  field
//   0       4     magic "CNMA"
//   4       2     format version (u16, = 1)
//   6       2     M, element rows (u16)
//   8       4     N, samples per row (u32)
//   12      4     sample rate in Hz (u32)
//   16      2MN   codes, u16, row-major
//
// All multi-byte fields are little-endian.

#ifndef CONAM_EMISSION_HPP
#define CONAM_EMISSION_HPP

#include "conam/geometry.hpp"
#include "conam/steering.hpp"
#include "conam/waveform.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace conam {

inline constexpr std::uint16_t kDacmatVersion = 1;

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EmissionProvenance {
    SteerAngles angles;
    std::uint64_t geometry_digest = 0;
};

class EmissionMatrix {
public:
    EmissionMatrix() = default;
    // Throws std::invalid_argument when codes.size() != rows * cols, a code
    // exceeds 12 bits, or the sample rate is not positive.
    EmissionMatrix(std::size_t rows, std::size_t cols, std::vector<std::uint16_t> codes, double sample_rate,
                   std::optional<EmissionProvenance> provenance = std::nullopt);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double sample_rate() const noexcept { return sample_rate_; }
    std::span<const std::uint16_t> row(std::size_t m) const;
    std::span<const std::uint16_t> codes() const noexcept { return codes_; }
    const std::optional<EmissionProvenance>& provenance() const noexcept { return provenance_; }

    // Codes as zero-mean acoustic drive: (code - 2048) * 2 / 4095, so the
    // silence code maps to exactly zero.
    std::vector<double> row_drive(std::size_t m) const;

    // Equality ignores provenance; it is not part of the file format.
    friend bool operator==(const EmissionMatrix& a, const EmissionMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.sample_rate_ == b.sample_rate_ && a.codes_ == b.codes_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint16_t> codes_;
    double sample_rate_ = kDefaultSampleRate;
    std::optional<EmissionProvenance> provenance_;
};

// Row m is quantize_to_dac(weight_m * w) right-shifted by k_m samples of
// quantize_delays(transmit_delays(g, a, c), Fs) and padded with the silence
// code to N = len(w) + max(k).
EmissionMatrix assemble_emission_matrix(const ArrayGeometry& g, const SteerAngles& a, const Waveform& w,
                                        double c = kDefaultSoundSpeed, std::span<const double> weights = {});

void write_dacmat(std::ostream& out, const EmissionMatrix& m);
EmissionMatrix read_dacmat(std::istream& in);

void write_dacmat(const std::filesystem::path& path, const EmissionMatrix& m);
EmissionMatrix read_dacmat(const std::filesystem::path& path);

} // namespace conam

#endif // CONAM_EMISSION_HPP
