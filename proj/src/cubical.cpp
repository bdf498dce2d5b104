#include "halftrace/cubical.hpp"

#include <algorithm>
#include <functional>

#include <nlohmann/json.hpp>

#include "halftrace/errors.hpp"

namespace halftrace::cubical {

const char* to_string(CellKind k) {
    switch (k) {
        case CellKind::PrimalFull: return "primal_full";
        case CellKind::PrimalClippedHalf: return "primal_clipped_half";
        case CellKind::BoundaryTrace: return "boundary_trace";
        case CellKind::Dual: return "dual";
    }
    return "?";
}

const char* to_string(SkeletonFamily f) {
    switch (f) {
        case SkeletonFamily::Plus: return "plus";
        case SkeletonFamily::Zero: return "zero";
        case SkeletonFamily::Dual: return "dual";
    }
    return "?";
}

bool Window::empty() const {
    if (lo.size() != hi.size() || lo.empty()) return true;
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (lo[i] > hi[i]) return true;
    return false;
}

void Cubication::validate() const {
    if (kappa <= 0.0) throw DomainError("cubication: kappa must be positive");
    if (ambient_dim < 2) throw DomainError("cubication: ambient dimension must be >= 2");
    if (window.dim() != ambient_dim) throw DomainError("cubication: window/ambient dimension mismatch");
    if (window.empty()) throw DomainError("cubication: empty window");
    if (static_cast<int>(shift.size()) != ambient_dim)
        throw DomainError("cubication: shift/ambient dimension mismatch");
    if (shift.back() != 0.0) throw DomainError("cubication: shift must have vanishing last coordinate");
}

bool CubicalCell::is_free(int axis) const {
    return std::find(free_axes.begin(), free_axes.end(), axis) != free_axes.end();
}

std::pair<int, int> CubicalCell::axis_span2(int axis) const {
    const int a = anchor[static_cast<std::size_t>(axis)];
    const int height_axis = ambient_dim() - 1;
    switch (kind) {
        case CellKind::Dual:
            return is_free(axis) ? std::pair{2 * a, 2 * a + 2} : std::pair{2 * a, 2 * a};
        case CellKind::BoundaryTrace:
            if (axis == height_axis) return {0, 0};
            return is_free(axis) ? std::pair{2 * a - 1, 2 * a + 1} : std::pair{2 * a - 1, 2 * a - 1};
        case CellKind::PrimalFull:
            return is_free(axis) ? std::pair{2 * a - 1, 2 * a + 1} : std::pair{2 * a - 1, 2 * a - 1};
        case CellKind::PrimalClippedHalf:
            if (axis == height_axis) return {0, 1};  // anchor height is 0 for half cells
            return is_free(axis) ? std::pair{2 * a - 1, 2 * a + 1} : std::pair{2 * a - 1, 2 * a - 1};
    }
    return {0, 0};
}

namespace {

struct Span {
    int lo, hi;
};

// window membership is interior overlap: cells only touching the window edge
// do not count (windows always have nonempty interior, cells may be points)
bool spans_meet(Span cell, Span window) { return cell.lo < window.hi && window.lo < cell.hi; }

int floor_div(int a, int b) { return (a >= 0) ? a / b : -((-a + b - 1) / b); }
int ceil_div(int a, int b) { return (a >= 0) ? (a + b - 1) / b : -((-a) / b); }

// all size-ell subsets of {0, ..., n-1}, lexicographic
void for_each_subset(int n, int ell, const std::function<void(const std::vector<int>&)>& fn) {
    std::vector<int> idx(static_cast<std::size_t>(ell));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == ell) {
            fn(idx);
            return;
        }
        for (int i = start; i <= n - (ell - depth); ++i) {
            idx[static_cast<std::size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    if (ell == 0) {
        fn({});
        return;
    }
    rec(0, 0);
}

void enumerate_anchor_box(const std::vector<int>& lo, const std::vector<int>& hi,
                          const std::function<void(const std::vector<int>&)>& fn) {
    const int m = static_cast<int>(lo.size());
    std::vector<int> k(lo);
    while (true) {
        fn(k);
        int axis = m - 1;
        while (axis >= 0) {
            if (++k[static_cast<std::size_t>(axis)] <= hi[static_cast<std::size_t>(axis)]) break;
            k[static_cast<std::size_t>(axis)] = lo[static_cast<std::size_t>(axis)];
            --axis;
        }
        if (axis < 0) break;
    }
}

}  // namespace

std::vector<CubicalCell> enumerate_skeleton(const Cubication& cub, int ell,
                                            SkeletonFamily family) {
    cub.validate();
    const int m = cub.ambient_dim;
    const int height = m - 1;
    const int max_ell = (family == SkeletonFamily::Zero) ? m - 1 : m;
    if (ell < 0 || ell > max_ell)
        throw DomainError("enumerate_skeleton: dimension out of range for family " +
                          std::string(to_string(family)));

    // window spans in units of kappa/2
    std::vector<Span> win(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        win[static_cast<std::size_t>(i)] = {2 * cub.window.lo[static_cast<std::size_t>(i)] - 1,
                                            2 * cub.window.hi[static_cast<std::size_t>(i)] + 1};

    std::vector<CubicalCell> out;
    const int free_universe = (family == SkeletonFamily::Zero) ? m - 1 : m;

    for_each_subset(free_universe, ell, [&](const std::vector<int>& free) {
        std::vector<bool> is_free(static_cast<std::size_t>(m), false);
        for (int a : free) is_free[static_cast<std::size_t>(a)] = true;

        // candidate anchor ranges per axis so the cell can meet the window
        std::vector<int> alo(static_cast<std::size_t>(m)), ahi(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const Span w = win[static_cast<std::size_t>(i)];
            const std::size_t ui = static_cast<std::size_t>(i);
            if (family == SkeletonFamily::Dual) {
                // free: [2a, 2a+2], fixed: {2a}
                alo[ui] = is_free[ui] ? ceil_div(w.lo - 2, 2) : ceil_div(w.lo, 2);
                ahi[ui] = floor_div(w.hi, 2);
            } else {
                // primal free: [2a-1, 2a+1], fixed: {2a-1}
                if (is_free[ui]) {
                    alo[ui] = cub.window.lo[ui] - 1;
                    ahi[ui] = cub.window.hi[ui] + 1;
                } else {
                    alo[ui] = cub.window.lo[ui];
                    ahi[ui] = cub.window.hi[ui] + 1;
                }
            }
            if (family == SkeletonFamily::Zero && i == height) {
                // trace cells sit at height 0; parent face needs anchor 0 there
                alo[ui] = 0;
                ahi[ui] = 0;
                if (w.lo > 0 || w.hi < 0) ahi[ui] = -1;  // window misses the hyperplane
            }
            if (ahi[ui] < alo[ui]) return;  // no candidates on this axis
        }

        enumerate_anchor_box(alo, ahi, [&](const std::vector<int>& k) {
            CubicalCell cell;
            cell.dim = ell;
            cell.anchor = k;
            cell.free_axes = free;
            cell.side = cub.kappa;
            cell.shift = cub.shift;
            const std::size_t uh = static_cast<std::size_t>(height);

            switch (family) {
                case SkeletonFamily::Dual:
                    cell.kind = CellKind::Dual;
                    break;
                case SkeletonFamily::Zero:
                    cell.kind = CellKind::BoundaryTrace;
                    break;
                case SkeletonFamily::Plus: {
                    if (is_free[uh]) {
                        if (k[uh] >= 1)
                            cell.kind = CellKind::PrimalFull;
                        else if (k[uh] == 0)
                            cell.kind = CellKind::PrimalClippedHalf;
                        else
                            return;  // entirely below the boundary
                    } else {
                        if (k[uh] < 1) return;  // fixed height 2a-1 < 0
                        cell.kind = CellKind::PrimalFull;
                    }
                    break;
                }
            }

            for (int i = 0; i < m; ++i) {
                const auto [clo, chi] = cell.axis_span2(i);
                if (!spans_meet({clo, chi}, win[static_cast<std::size_t>(i)])) return;
            }
            out.push_back(std::move(cell));
        });
    });
    return out;
}

std::vector<double> cell_center(const CubicalCell& cell) {
    if (cell.kind == CellKind::BoundaryTrace || cell.kind == CellKind::Dual)
        throw DomainError("cell_center: defined for primal cells only");
    const int m = cell.ambient_dim();
    std::vector<double> c(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const double a = static_cast<double>(cell.anchor[ui]);
        c[ui] = cell.is_free(i) ? cell.side * a : cell.side * (a - 0.5);
        if (!cell.shift.empty()) c[ui] += cell.shift[ui];
    }
    return c;
}

double cell_measure(const CubicalCell& cell) {
    double v = 1.0;
    for (int i = 0; i < cell.dim; ++i) v *= cell.side;
    if (cell.kind == CellKind::PrimalClippedHalf) v *= 0.5;
    return v;
}

nlohmann::json cell_to_json(const CubicalCell& cell) {
    return nlohmann::json{{"dim", cell.dim},
                          {"anchor", cell.anchor},
                          {"free_axes", cell.free_axes},
                          {"kind", to_string(cell.kind)},
                          {"kappa", cell.side},
                          {"shift", cell.shift}};
}

}  // namespace halftrace::cubical
