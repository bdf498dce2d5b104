#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

#include "halftrace/cubical.hpp"
#include "halftrace/errors.hpp"

using namespace halftrace;
using namespace halftrace::cubical;

namespace {

Cubication make(int m, double kappa, std::vector<int> lo, std::vector<int> hi,
                std::vector<double> shift = {}) {
    Cubication cub;
    cub.ambient_dim = m;
    cub.kappa = kappa;
    cub.window.lo = std::move(lo);
    cub.window.hi = std::move(hi);
    cub.shift = std::move(shift);
    cub.shift.resize(static_cast<std::size_t>(m), 0.0);
    return cub;
}

// brute force: all ell-faces of dual cubes [0,k]^m + k*a as sorted corner sets
std::set<std::vector<std::vector<int>>> brute_force_dual_faces(const Cubication& cub, int ell) {
    const int m = cub.ambient_dim;
    std::set<std::vector<std::vector<int>>> faces;
    std::vector<int> a(static_cast<std::size_t>(m));
    std::function<void(int)> rec = [&](int axis) {
        if (axis == m) {
            for (int mask = 0; mask < (1 << m); ++mask) {
                if (__builtin_popcount(static_cast<unsigned>(mask)) != ell) continue;
                int nfixed = 0;
                for (int i = 0; i < m; ++i)
                    if (!((mask >> i) & 1)) ++nfixed;
                for (int sides = 0; sides < (1 << nfixed); ++sides) {
                    std::vector<std::vector<int>> corners;
                    for (int c = 0; c < (1 << ell); ++c) {
                        std::vector<int> corner(static_cast<std::size_t>(m));
                        int fb = 0, cb = 0;
                        for (int i = 0; i < m; ++i) {
                            if ((mask >> i) & 1)
                                corner[static_cast<std::size_t>(i)] =
                                    a[static_cast<std::size_t>(i)] + ((c >> cb) & 1), ++cb;
                            else
                                corner[static_cast<std::size_t>(i)] =
                                    a[static_cast<std::size_t>(i)] + ((sides >> fb) & 1), ++fb;
                        }
                        corners.push_back(std::move(corner));
                    }
                    std::sort(corners.begin(), corners.end());
                    bool meets = true;
                    for (int i = 0; i < m; ++i) {
                        const int lo = corners.front()[static_cast<std::size_t>(i)];
                        const int hi = corners.back()[static_cast<std::size_t>(i)];
                        const double wlo = cub.window.lo[static_cast<std::size_t>(i)] - 0.5;
                        const double whi = cub.window.hi[static_cast<std::size_t>(i)] + 0.5;
                        if (!(lo < whi && wlo < hi)) meets = false;
                    }
                    if (meets) faces.insert(std::move(corners));
                }
            }
            return;
        }
        for (int k = cub.window.lo[static_cast<std::size_t>(axis)] - 2;
             k <= cub.window.hi[static_cast<std::size_t>(axis)] + 2; ++k) {
            a[static_cast<std::size_t>(axis)] = k;
            rec(axis + 1);
        }
    };
    rec(0);
    return faces;
}

}  // namespace

TEST_CASE("single-cube window yields one clipped half cell") {
    const auto cub = make(2, 1.0, {0, 0}, {0, 0});
    const auto cells = enumerate_skeleton(cub, 2, SkeletonFamily::Plus);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].kind == CellKind::PrimalClippedHalf);
    CHECK(cells[0].anchor == std::vector<int>{0, 0});
    CHECK(cell_measure(cells[0]) == doctest::Approx(0.5));
    const auto c = cell_center(cells[0]);
    CHECK(c[0] == doctest::Approx(0.0));
    CHECK(c[1] == doctest::Approx(0.0));  // center of the unclipped face sits on the boundary
}

TEST_CASE("boundary trace of the straddling square is the segment [-1/2,1/2] x {0}") {
    const auto cub = make(2, 1.0, {0, 0}, {0, 0});
    const auto cells = enumerate_skeleton(cub, 1, SkeletonFamily::Zero);
    REQUIRE(cells.size() == 1);
    CHECK(cells[0].kind == CellKind::BoundaryTrace);
    CHECK(cells[0].dim == 1);
    const auto [lo, hi] = cells[0].axis_span2(0);
    CHECK(lo == -1);
    CHECK(hi == 1);
    const auto [ylo, yhi] = cells[0].axis_span2(1);
    CHECK(ylo == 0);
    CHECK(yhi == 0);
    CHECK(cell_measure(cells[0]) == doctest::Approx(1.0));
}

TEST_CASE("dual 1-faces match brute-force enumeration in a 3x3x2 window") {
    const auto cub = make(3, 1.0, {0, 0, 0}, {2, 2, 1});
    const auto cells = enumerate_skeleton(cub, 1, SkeletonFamily::Dual);
    const auto oracle = brute_force_dual_faces(cub, 1);
    CHECK(cells.size() == oracle.size());

    std::set<std::vector<std::vector<int>>> got;
    for (const auto& cell : cells) {
        std::vector<std::vector<int>> corners;
        for (int c = 0; c < (1 << cell.dim); ++c) {
            std::vector<int> corner(cell.anchor);
            for (std::size_t fa = 0; fa < cell.free_axes.size(); ++fa)
                corner[static_cast<std::size_t>(cell.free_axes[fa])] += (c >> fa) & 1;
            corners.push_back(std::move(corner));
        }
        std::sort(corners.begin(), corners.end());
        got.insert(std::move(corners));
    }
    CHECK(got == oracle);
}

TEST_CASE("cell centers") {
    SUBCASE("symmetric 2-face") {
        CubicalCell cell;
        cell.dim = 2;
        cell.anchor = {0, 1};
        cell.free_axes = {0, 1};
        cell.kind = CellKind::PrimalFull;
        cell.side = 1.0;
        const auto c = cell_center(cell);
        CHECK(c[0] == doctest::Approx(0.0));
        CHECK(c[1] == doctest::Approx(1.0));
    }
    SUBCASE("edge midpoint") {
        // edge from (1/2,-1/2) to (1/2,1/2): free axis 1, fixed x0 at k0 - 1/2 with k0 = 1
        CubicalCell cell;
        cell.dim = 1;
        cell.anchor = {1, 0};
        cell.free_axes = {1};
        cell.kind = CellKind::PrimalFull;
        cell.side = 1.0;
        const auto c = cell_center(cell);
        CHECK(c[0] == doctest::Approx(0.5));
        CHECK(c[1] == doctest::Approx(0.0));
    }
    SUBCASE("kappa=2 face center equals brute-force vertex average") {
        CubicalCell cell;
        cell.dim = 1;
        cell.anchor = {1, 1};
        cell.free_axes = {0};
        cell.kind = CellKind::PrimalFull;
        cell.side = 2.0;
        const auto c = cell_center(cell);
        const double vx = ((2.0 * 0.5) + (2.0 * 1.5)) / 2.0;  // endpoints at 2(k0 -+ 1/2)
        const double vy = 2.0 * (1.0 - 0.5);
        CHECK(c[0] == doctest::Approx(vx));
        CHECK(c[1] == doctest::Approx(vy));
    }
    SUBCASE("rejects dual and trace cells") {
        CubicalCell cell;
        cell.dim = 1;
        cell.anchor = {0, 0};
        cell.free_axes = {0};
        cell.kind = CellKind::Dual;
        cell.side = 1.0;
        CHECK_THROWS_AS(cell_center(cell), DomainError);
        cell.kind = CellKind::BoundaryTrace;
        CHECK_THROWS_AS(cell_center(cell), DomainError);
    }
}

TEST_CASE("cell measures") {
    CubicalCell cell;
    cell.anchor = {0, 0, 1};
    cell.side = 0.25;
    cell.dim = 3;
    cell.free_axes = {0, 1, 2};
    cell.kind = CellKind::PrimalFull;
    CHECK(cell_measure(cell) == doctest::Approx(0.015625));
    cell.side = 1.0;
    CHECK(cell_measure(cell) == doctest::Approx(1.0));
    cell.dim = 2;
    cell.free_axes = {0, 1};
    CHECK(cell_measure(cell) == doctest::Approx(1.0));
    cell.free_axes = {0, 2};
    cell.anchor = {0, 0, 0};
    cell.kind = CellKind::PrimalClippedHalf;
    CHECK(cell_measure(cell) == doctest::Approx(0.5));
}

TEST_CASE("translation equivariance of enumeration") {
    const auto plain = make(3, 0.5, {-1, -1, 0}, {1, 1, 1});
    auto shifted = plain;
    shifted.shift = {0.125, 0.25, 0.0};
    for (int ell = 0; ell <= 3; ++ell) {
        const auto a = enumerate_skeleton(plain, ell, SkeletonFamily::Plus);
        const auto b = enumerate_skeleton(shifted, ell, SkeletonFamily::Plus);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i] == b[i]);  // identity ignores the shift
            if (a[i].kind == CellKind::BoundaryTrace || a[i].kind == CellKind::Dual) continue;
            const auto ca = cell_center(a[i]);
            const auto cb = cell_center(b[i]);
            for (int d = 0; d < 3; ++d)
                CHECK(cb[static_cast<std::size_t>(d)] ==
                      doctest::Approx(ca[static_cast<std::size_t>(d)] +
                                      shifted.shift[static_cast<std::size_t>(d)]));
        }
    }
}

TEST_CASE("face closure: window-interior faces of enumerated cells are enumerated") {
    const auto cub = make(2, 1.0, {-1, 0}, {1, 2});
    for (int ell : {1, 2}) {
        const auto cells = enumerate_skeleton(cub, ell, SkeletonFamily::Plus);
        const auto faces = enumerate_skeleton(cub, ell - 1, SkeletonFamily::Plus);
        for (const auto& cell : cells) {
            for (int drop : cell.free_axes) {
                for (int side = 0; side <= 1; ++side) {
                    CubicalCell face;
                    face.dim = ell - 1;
                    face.side = cell.side;
                    face.anchor = cell.anchor;
                    face.anchor[static_cast<std::size_t>(drop)] += side;
                    for (int a : cell.free_axes)
                        if (a != drop) face.free_axes.push_back(a);
                    face.kind = CellKind::PrimalFull;
                    const auto [ylo, yhi] = face.axis_span2(1);
                    if (ylo < 0) continue;  // below the half-space
                    bool meets = true;
                    for (int ax = 0; ax < 2; ++ax) {
                        const auto [lo, hi] = face.axis_span2(ax);
                        const int wlo = 2 * cub.window.lo[static_cast<std::size_t>(ax)] - 1;
                        const int whi = 2 * cub.window.hi[static_cast<std::size_t>(ax)] + 1;
                        if (!(lo < whi && wlo < hi)) meets = false;
                    }
                    if (!meets) continue;
                    const bool found =
                        std::any_of(faces.begin(), faces.end(), [&](const CubicalCell& f) {
                            return f.dim == face.dim && f.anchor == face.anchor &&
                                   f.free_axes == face.free_axes;
                        });
                    CHECK(found);
                }
            }
        }
    }
}

TEST_CASE("distinct cells of equal dimension have disjoint relative interiors") {
    const auto cub = make(2, 1.0, {-1, 0}, {1, 1});
    const auto cells = enumerate_skeleton(cub, 1, SkeletonFamily::Plus);
    for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t j = i + 1; j < cells.size(); ++j) {
            // midpoint of cell i in doubled units
            std::vector<double> mid(2);
            for (int a = 0; a < 2; ++a) {
                const auto [lo, hi] = cells[i].axis_span2(a);
                mid[static_cast<std::size_t>(a)] = 0.5 * (lo + hi);
            }
            bool inside_j = true;
            for (int a = 0; a < 2; ++a) {
                const auto [lo, hi] = cells[j].axis_span2(a);
                const double x = mid[static_cast<std::size_t>(a)];
                if (lo == hi ? x != lo : !(lo < x && x < hi)) inside_j = false;
            }
            CHECK_FALSE(inside_j);
        }
}

TEST_CASE("primal centers lie on the complementary dual skeleton") {
    const auto cub = make(3, 1.0, {-1, -1, 0}, {1, 1, 1});
    for (int ell : {1, 2, 3}) {
        const auto cells = enumerate_skeleton(cub, ell, SkeletonFamily::Plus);
        Cubication dual_window = cub;
        for (auto& v : dual_window.window.lo) v -= 2;
        for (auto& v : dual_window.window.hi) v += 2;
        const auto duals = enumerate_skeleton(dual_window, 3 - ell, SkeletonFamily::Dual);
        for (const auto& cell : cells) {
            const auto c = cell_center(cell);
            bool on_dual = false;
            for (const auto& d : duals) {
                bool contains = true;
                for (int a = 0; a < 3; ++a) {
                    const auto [lo, hi] = d.axis_span2(a);
                    const double x = 2.0 * c[static_cast<std::size_t>(a)];  // kappa/2 units
                    if (x < lo - 1e-9 || x > hi + 1e-9) contains = false;
                }
                if (contains) on_dual = true;
            }
            CHECK(on_dual);
        }
    }
}

TEST_CASE("serialization carries identity, kind and frame") {
    const auto cub = make(2, 0.5, {0, 0}, {0, 0}, {0.125, 0.0});
    const auto cells = enumerate_skeleton(cub, 1, SkeletonFamily::Zero);
    REQUIRE(!cells.empty());
    const auto j = cell_to_json(cells[0]);
    CHECK(j.at("dim") == 1);
    CHECK(j.at("kind") == "boundary_trace");
    CHECK(j.at("kappa") == 0.5);
    CHECK(j.at("shift")[0] == 0.125);
}

TEST_CASE("errors") {
    auto cub = make(2, 1.0, {0, 0}, {0, 0});
    CHECK_THROWS_AS(enumerate_skeleton(cub, 3, SkeletonFamily::Plus), DomainError);
    CHECK_THROWS_AS(enumerate_skeleton(cub, 2, SkeletonFamily::Zero), DomainError);
    auto bad = cub;
    bad.window.lo = {1, 1};
    bad.window.hi = {0, 0};
    CHECK_THROWS_AS(enumerate_skeleton(bad, 1, SkeletonFamily::Plus), DomainError);
    auto badshift = cub;
    badshift.shift = {0.0, 0.5};
    CHECK_THROWS_AS(enumerate_skeleton(badshift, 1, SkeletonFamily::Plus), DomainError);
}
