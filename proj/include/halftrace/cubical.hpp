#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace halftrace::cubical {

// Two fixed lattices, side kappa:
//   primal faces of [-k/2, k/2]^m + k*a  (cube centers on the integer lattice)
//   dual   faces of [0, k]^m + k*a      (cube corners on the integer lattice)
//
// A face is stored by its anchor a in Z^m, its set of free axes F and a kind;
// the canonical geometry (before the cubication shift) is
//   primal:  x_i in k*[a_i - 1/2, a_i + 1/2]  (i in F),   x_i = k*(a_i - 1/2)  (i not in F)
//   dual:    x_i in k*[a_i, a_i + 1]          (i in F),   x_i = k*a_i          (i not in F)
// Fixing every off-face coordinate at the lower side makes the anchor unique.
// The last axis (index m-1) is the height above the boundary hyperplane.

enum class CellKind { PrimalFull, PrimalClippedHalf, BoundaryTrace, Dual };

enum class SkeletonFamily { Plus, Zero, Dual };

const char* to_string(CellKind k);
const char* to_string(SkeletonFamily f);

struct Window {
    std::vector<int> lo;  // inclusive anchor ranges, one per axis
    std::vector<int> hi;

    bool empty() const;
    int dim() const { return static_cast<int>(lo.size()); }
};

struct Cubication {
    double kappa = 1.0;
    int ambient_dim = 2;
    Window window;
    std::vector<double> shift;  // in R^{m-1} x {0}

    void validate() const;
};

struct CubicalCell {
    int dim = 0;
    std::vector<int> anchor;
    std::vector<int> free_axes;  // sorted, |free_axes| == dim
    CellKind kind = CellKind::PrimalFull;
    double side = 1.0;
    std::vector<double> shift;

    int ambient_dim() const { return static_cast<int>(anchor.size()); }
    bool is_free(int axis) const;

    // Closed coordinate span along one axis in units of side/2, unshifted,
    // with the half-space clipping already applied. Degenerate spans are
    // single points (fixed axes, boundary-trace height).
    std::pair<int, int> axis_span2(int axis) const;

    bool operator==(const CubicalCell& other) const {
        return dim == other.dim && anchor == other.anchor &&
               free_axes == other.free_axes && kind == other.kind;
    }
};

// Every cell of the requested family meeting the interior of the window box
// of `cub` (window and cells both live in the frame translated by cub.shift,
// so the result is equivariant under changes of shift).
std::vector<CubicalCell> enumerate_skeleton(const Cubication& cub, int ell,
                                            SkeletonFamily family);

// Barycenter of the unclipped face (includes the shift). For half cells this
// point lies on the boundary hyperplane. Rejects boundary-trace and dual cells.
std::vector<double> cell_center(const CubicalCell& cell);

// ell-dimensional Hausdorff measure of the (clipped) cell.
double cell_measure(const CubicalCell& cell);

nlohmann::json cell_to_json(const CubicalCell& cell);

}  // namespace halftrace::cubical
