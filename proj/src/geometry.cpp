// SPDX-License-Identifier: Apache-2.0

#include "conam/geometry.hpp"

#include "conam/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace conam {

double dot(const Vec3& a, const Vec3& b) noexcept { return a.x * b.x + a.y * b.y + a.z * b.z; }

double norm(const Vec3& v) noexcept { return std::sqrt(dot(v, v)); }

namespace {

Vec3 mean_position(const std::vector<Vec3>& pts) {
    long double sx = 0, sy = 0, sz = 0;
    for (const auto& p : pts) {
        sx += p.x;
        sy += p.y;
        sz += p.z;
    }
    const auto n = static_cast<long double>(pts.size());
    return {static_cast<double>(sx / n), static_cast<double>(sy / n), static_cast<double>(sz / n)};
}

} // namespace

ArrayGeometry::ArrayGeometry(std::vector<Vec3> elements, StaggeredLayout layout)
    : elements_(std::move(elements)), layout_(layout) {
    if (elements_.empty()) throw std::invalid_argument("ArrayGeometry: no elements");
    double scale = 0.0;
    for (const auto& p : elements_) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw std::invalid_argument("ArrayGeometry: non-finite element position");
        if (p.x != 0.0) throw std::invalid_argument("ArrayGeometry: elements must lie in the Y-Z plane (x = 0)");
        scale = std::max({scale, std::abs(p.y), std::abs(p.z)});
    }

    // Translating an already-centered set would only shuffle rounding noise
    // into the coordinates; skip it so re-centering is idempotent.
    const Vec3 c = mean_position(elements_);
    const double noise = 8.0 * std::numeric_limits<double>::epsilon() * scale;
    if (std::abs(c.y) > noise || std::abs(c.z) > noise) {
        for (auto& p : elements_) {
            p.y -= c.y;
            p.z -= c.z;
        }
    }

    for (std::size_t a = 0; a < elements_.size(); ++a)
        for (std::size_t b = a + 1; b < elements_.size(); ++b)
            if (elements_[a] == elements_[b])
                throw std::invalid_argument("ArrayGeometry: elements " + std::to_string(a) + " and " +
                                            std::to_string(b) + " coincide");
}

Vec3 ArrayGeometry::centroid() const noexcept { return mean_position(elements_); }

std::uint64_t ArrayGeometry::digest() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : elements_) {
        for (double v : {p.x, p.y, p.z}) {
            char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            h = text::fnv1a({bytes, sizeof(double)}, h);
        }
    }
    return h;
}

ArrayGeometry build_staggered_array(const StaggeredLayout& layout) {
    if (layout.rows == 0 || layout.cols == 0)
        throw std::invalid_argument("build_staggered_array: rows and cols must be at least 1");
    if (!(layout.pitch_y > 0.0) || !std::isfinite(layout.pitch_y))
        throw std::invalid_argument("build_staggered_array: pitch_y must be positive");
    if (!(layout.stagger_y >= 0.0) || !(layout.row_dz >= 0.0) || !std::isfinite(layout.stagger_y) ||
        !std::isfinite(layout.row_dz))
        throw std::invalid_argument("build_staggered_array: stagger_y and row_dz must be non-negative");

    std::vector<Vec3> pts;
    pts.reserve(layout.rows * layout.cols);
    for (std::size_t r = 0; r < layout.rows; ++r)
        for (std::size_t i = 0; i < layout.cols; ++i)
            pts.push_back({0.0, static_cast<double>(i) * layout.pitch_y + static_cast<double>(r) * layout.stagger_y,
                           static_cast<double>(r) * layout.row_dz});
    return ArrayGeometry(std::move(pts), layout);
}

ArrayGeometry build_staggered_array(std::size_t rows, std::size_t cols, double pitch_y, double stagger_y,
                                    double row_dz) {
    return build_staggered_array(StaggeredLayout{rows, cols, pitch_y, stagger_y, row_dz});
}

ArrayGeometry default_array() { return build_staggered_array(StaggeredLayout{}); }

double projected_pitch(const ArrayGeometry& g) {
    std::vector<double> ys;
    ys.reserve(g.size());
    for (const auto& p : g.elements()) ys.push_back(p.y);
    std::sort(ys.begin(), ys.end());

    // Projections closer than this are the same acoustic column.
    double span = ys.back() - ys.front();
    const double same = 1e-9 * std::max(span, 1e-3);

    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < ys.size(); ++i) {
        const double gap = ys[i] - ys[i - 1];
        if (gap > same) best = std::min(best, gap);
    }
    if (!std::isfinite(best))
        throw std::invalid_argument("projected_pitch: fewer than two distinct projected positions");
    return best;
}

ArrayGeometry mirrored_y(const ArrayGeometry& g) {
    auto pts = g.elements();
    for (auto& p : pts) p.y = -p.y;
    return ArrayGeometry(std::move(pts), g.layout());
}

void write_geometry_csv(std::ostream& out, const ArrayGeometry& g) {
    out << "m,x_m,y_m,z_m\n";
    for (std::size_t m = 0; m < g.size(); ++m) {
        const auto& p = g[m];
        out << m << ',' << text::format_double(p.x) << ',' << text::format_double(p.y) << ','
            << text::format_double(p.z) << '\n';
    }
}

ArrayGeometry read_geometry_csv(std::istream& in) {
    std::string line;
    if (!text::read_line(in, line) || line != "m,x_m,y_m,z_m")
        throw std::runtime_error("geometry csv: missing header 'm,x_m,y_m,z_m'");
    std::vector<Vec3> pts;
    while (text::read_line(in, line)) {
        if (line.empty()) continue;
        auto f = text::split(line);
        if (f.size() != 4) throw std::runtime_error("geometry csv: expected 4 fields: " + line);
        if (text::parse_integer(f[0]) != static_cast<long long>(pts.size()))
            throw std::runtime_error("geometry csv: element index out of order");
        pts.push_back({text::parse_double(f[1]), text::parse_double(f[2]), text::parse_double(f[3])});
    }
    return ArrayGeometry(std::move(pts));
}

} // namespace conam
