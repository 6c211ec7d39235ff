// SPDX-License-Identifier: Apache-2.0

#include "conam/geometry.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace conam;

TEST_CASE("default staggered array projects onto a uniform 3.05 mm lattice") {
    const auto g = build_staggered_array(2, 16, 6.1e-3, 3.05e-3, 6.1e-3);
    REQUIRE(g.size() == 32);

    std::vector<double> ys;
    for (const auto& p : g.elements()) ys.push_back(p.y);
    std::sort(ys.begin(), ys.end());
    for (std::size_t i = 1; i < ys.size(); ++i) CHECK(ys[i] - ys[i - 1] == doctest::Approx(3.05e-3).epsilon(1e-12));

    CHECK(std::abs(projected_pitch(g) - 6.1e-3 / 2) < 1e-15);
}

TEST_CASE("elements are row-major, planar and centered") {
    const auto g = default_array();
    for (const auto& p : g.elements()) CHECK(p.x == 0.0);
    const auto c = g.centroid();
    CHECK(std::abs(c.y) < 1e-17);
    CHECK(std::abs(c.z) < 1e-17);
    // Row 0 occupies the first 16 slots, row 1 sits one row_dz higher.
    CHECK(g[16].z - g[0].z == doctest::Approx(6.1e-3));
    CHECK(g[16].y - g[0].y == doctest::Approx(3.05e-3));
    CHECK(g[1].y - g[0].y == doctest::Approx(6.1e-3));
}

TEST_CASE("trivial layouts") {
    const auto one = build_staggered_array(1, 1, 5e-3, 0.0, 0.0);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == Vec3{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(projected_pitch(one), std::invalid_argument);

    const double d = 4e-3;
    const auto pair = build_staggered_array(1, 2, d, 0.0, 0.0);
    CHECK(pair[0].y == doctest::Approx(-d / 2));
    CHECK(pair[1].y == doctest::Approx(d / 2));
    CHECK(projected_pitch(build_staggered_array(1, 8, d, 0.0, 0.0)) == doctest::Approx(d));
}

TEST_CASE("invalid layouts are rejected") {
    CHECK_THROWS_AS(build_staggered_array(0, 16, 6.1e-3, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_staggered_array(2, 0, 6.1e-3, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_staggered_array(2, 16, 0.0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_staggered_array(2, 16, -1e-3, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_staggered_array(2, 16, 6.1e-3, -1e-3, 0), std::invalid_argument);
    // stagger of a full pitch with no vertical offset stacks elements
    CHECK_THROWS_AS(build_staggered_array(2, 4, 6.1e-3, 6.1e-3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ArrayGeometry({{1e-3, 0, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(ArrayGeometry({}), std::invalid_argument);
}

TEST_CASE("property: re-centering is idempotent and mirroring keeps the pitch") {
    std::mt19937_64 rng(20240917);
    std::uniform_int_distribution<std::size_t> count(1, 6);
    std::uniform_real_distribution<double> len(0.5e-3, 12e-3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = build_staggered_array(count(rng), count(rng) + 1, len(rng), len(rng) / 3, len(rng));
        const ArrayGeometry again(g.elements());
        CHECK(again == g);
        CHECK(projected_pitch(mirrored_y(g)) == doctest::Approx(projected_pitch(g)).epsilon(1e-9));
    }
}

TEST_CASE("geometry csv") {
    const auto g = default_array();
    std::stringstream ss;
    write_geometry_csv(ss, g);
    const auto text = ss.str();
    CHECK(text.rfind("m,x_m,y_m,z_m\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 33);

    const auto back = read_geometry_csv(ss);
    CHECK(back == g);
    std::stringstream again;
    write_geometry_csv(again, back);
    CHECK(again.str() == text);

    std::stringstream bad("m,x,y,z\n0,0,0,0\n");
    CHECK_THROWS(read_geometry_csv(bad));
}

TEST_CASE("digest distinguishes geometries") {
    CHECK(default_array().digest() == default_array().digest());
    CHECK(default_array().digest() != build_staggered_array(2, 16, 6.0e-3, 3.0e-3, 6.1e-3).digest());
}
