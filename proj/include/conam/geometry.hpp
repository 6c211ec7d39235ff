// SPDX-License-Identifier: Apache-2.0
//
// Element layout of a staggered two-row transmit array.
//
// Frame convention: X is depth (array normal, forward), Y is horizontal and
// Z is vertical. Elements lie in the Y-Z plane and positions are always
// referenced to the array centroid.

#ifndef CONAM_GEOMETRY_HPP
#define CONAM_GEOMETRY_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace conam {

struct Vec3 {
    double x = 0.0; // depth [m]
    double y = 0.0; // horizontal [m]
    double z = 0.0; // vertical [m]

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

double dot(const Vec3& a, const Vec3& b) noexcept;
double norm(const Vec3& v) noexcept;

// Defaults describe the 32-element device: 16 elements per row at 6.1 mm,
// the second row shifted horizontally by half a pitch.
struct StaggeredLayout {
    std::size_t rows = 2;
    std::size_t cols = 16;
    double pitch_y = 6.1e-3;   // in-row spacing [m]
    double stagger_y = 3.05e-3; // horizontal shift per row [m]
    double row_dz = 6.1e-3;    // vertical row separation [m]
};

class ArrayGeometry {
public:
    // Takes arbitrary positions; they are translated so the centroid is the
    // origin. Throws std::invalid_argument for an empty set, non-finite or
    // non-zero x components, or coincident elements.
    explicit ArrayGeometry(std::vector<Vec3> elements, StaggeredLayout layout = {});

    const std::vector<Vec3>& elements() const noexcept { return elements_; }
    std::size_t size() const noexcept { return elements_.size(); }
    const Vec3& operator[](std::size_t m) const { return elements_.at(m); }
    const StaggeredLayout& layout() const noexcept { return layout_; }

    Vec3 centroid() const noexcept;

    // 64-bit FNV-1a over the raw coordinate bytes; identifies a geometry in
    // emission provenance.
    std::uint64_t digest() const noexcept;

    friend bool operator==(const ArrayGeometry& a, const ArrayGeometry& b) {
        return a.elements_ == b.elements_;
    }

private:
    std::vector<Vec3> elements_;
    StaggeredLayout layout_;
};

// Row r, column i sits at y = i*pitch_y + r*stagger_y, z = r*row_dz before
// re-centering. Elements are ordered row-major.
ArrayGeometry build_staggered_array(const StaggeredLayout& layout);
ArrayGeometry build_staggered_array(std::size_t rows, std::size_t cols, double pitch_y,
                                    double stagger_y, double row_dz);

ArrayGeometry default_array();

// Smallest positive gap between the sorted distinct horizontal (y)
// coordinates. Throws std::invalid_argument when fewer than two distinct
// projections exist.
double projected_pitch(const ArrayGeometry& g);

ArrayGeometry mirrored_y(const ArrayGeometry& g);

// CSV with header `m,x_m,y_m,z_m`, SI units.
void write_geometry_csv(std::ostream& out, const ArrayGeometry& g);
ArrayGeometry read_geometry_csv(std::istream& in);

} // namespace conam

#endif // CONAM_GEOMETRY_HPP
