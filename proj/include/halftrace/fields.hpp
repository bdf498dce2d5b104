#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "halftrace/cubical.hpp"
#include "halftrace/simplicial.hpp"

namespace halftrace::fields {

// Embedded round sphere S^{n-1} in R^n with nearest-point projection x/|x|.
struct Target {
    int ambient_dim = 2;
    double tube_radius = 0.5;
};

std::vector<double> project_to_target(std::span<const double> x, const Target& target);

// ---------------------------------------------------------------------------
// Domains

// Regular sample grid spanning a subset of the ambient axes; the remaining
// coordinates are pinned (e.g. x_m = 0 for boundary grids). node_weight, when
// present, carries mask fractions for non-rectangular regions.
struct GridDomain {
    int ambient_dim = 2;
    std::vector<int> axes;          // spanned ambient axes, increasing
    std::vector<double> fixed;      // ambient coords for pinned axes (size ambient_dim)
    std::vector<double> origin;     // coordinate of node 0 along each spanned axis
    std::vector<int> shape;         // nodes per spanned axis
    double step = 0.0;
    std::vector<double> node_weight;

    int grid_dim() const { return static_cast<int>(axes.size()); }
    std::size_t size() const;
    std::size_t flat_index(std::span<const int> idx) const;
    std::vector<int> multi_index(std::size_t flat) const;
    std::vector<double> position(std::size_t flat) const;
    double weight(std::size_t flat) const {
        return node_weight.empty() ? 1.0 : node_weight[flat];
    }

    static GridDomain boundary_window(int ambient_dim, const std::vector<double>& lo,
                                      const std::vector<double>& hi, double step);
    static GridDomain full_window(int ambient_dim, const std::vector<double>& lo,
                                  const std::vector<double>& hi, double step);
};

// Shared sample lattice over a collection of cubical cells. Nodes on common
// faces are identified, so a map on the skeleton is single-valued.
struct SkeletonDomain {
    std::vector<cubical::CubicalCell> cells;
    int intervals = 4;  // sample intervals per full cell axis (even)
    double step = 0.0;
    int ambient_dim = 0;

    std::vector<std::vector<int>> cell_nodes;   // per cell, row-major lattice -> node id
    std::vector<std::vector<int>> cell_shape;   // per cell, node counts per free axis
    std::vector<double> node_pos;               // flat ambient coords (shift included)
    std::vector<char> node_on_boundary;         // node lies on {x_m = 0}

    std::size_t size() const { return node_pos.size() / static_cast<std::size_t>(ambient_dim); }
    std::span<const double> position(std::size_t node) const {
        return {node_pos.data() + node * static_cast<std::size_t>(ambient_dim),
                static_cast<std::size_t>(ambient_dim)};
    }

    static SkeletonDomain build(std::vector<cubical::CubicalCell> cells, int intervals);
};

// Values at the nodes of a simplicial refinement.
struct ComplexDomain {
    std::shared_ptr<const simplicial::Refinement> refinement;
};

// ---------------------------------------------------------------------------

// Pointwise-defined sampled map with values on (or near) the target; samples
// are projected onto the target on ingest.
struct DiscreteMap {
    std::shared_ptr<const GridDomain> grid;
    std::shared_ptr<const SkeletonDomain> skeleton;
    std::shared_ptr<const ComplexDomain> complex;

    Target target;
    int value_dim = 2;
    std::vector<double> values;  // node-major, value_dim per node

    std::size_t node_count() const;
    std::span<const double> value(std::size_t node) const {
        return {values.data() + node * static_cast<std::size_t>(value_dim),
                static_cast<std::size_t>(value_dim)};
    }
    std::span<double> value(std::size_t node) {
        return {values.data() + node * static_cast<std::size_t>(value_dim),
                static_cast<std::size_t>(value_dim)};
    }
    std::vector<double> node_position(std::size_t node) const;
    void project_all();

    static DiscreteMap on_grid(std::shared_ptr<const GridDomain> domain, Target target,
                               const std::function<std::vector<double>(std::span<const double>)>& f);
    static DiscreteMap on_skeleton(std::shared_ptr<const SkeletonDomain> domain, Target target,
                                   const std::function<std::vector<double>(std::span<const double>)>& f);
    static DiscreteMap on_complex(std::shared_ptr<const ComplexDomain> domain, Target target,
                                  const std::function<std::vector<double>(const simplicial::PointOnComplex&)>& f);
};

// Scalar/vector grid samples with multilinear interpolation (plumbing for the
// density machinery; no target constraint).
struct GridField {
    enum class Edge { Zero, Clamp, Periodic };

    GridDomain domain;
    int value_dim = 1;
    std::vector<double> values;
    Edge edge = Edge::Zero;

    std::vector<double> eval(std::span<const double> point) const;
    double eval_scalar(std::span<const double> point) const { return eval(point)[0]; }

    static GridField sample(GridDomain domain, int value_dim,
                            const std::function<std::vector<double>(std::span<const double>)>& f);
};

struct EnergyReport {
    double p = 2.0;
    double value = 0.0;
    double step = 0.0;
    std::size_t cell_count = 0;
    std::string domain_family;
};

// Discrete W^{1,p} energy: per-cell tangential gradients by central
// differences (one-sided at cell edges), trapezoid quadrature, pairwise
// summation over cells.
EnergyReport energy_p(const DiscreteMap& u, double p);

struct GagliardoReport {
    double value = 0.0;
    double value_refined = 0.0;  // 0 unless a refinement comparison ran
    double relative_drift = 0.0;
    bool warn_nonintegrable = false;  // s*p >= boundary dimension
};

// Double-sum midpoint quadrature of |u(x)-u(y)|^p / |x-y|^{g+sp} over a
// boundary grid of dimension g, excluding the diagonal band |x-y| < band
// (band = 0 uses the grid step).
GagliardoReport gagliardo_seminorm(const DiscreteMap& u, double s, double p, double band = 0.0);

// Same seminorm evaluated at the map's step and at step/2 via a resampler.
GagliardoReport gagliardo_with_refinement(
    const GridDomain& base, Target target,
    const std::function<std::vector<double>(std::span<const double>)>& f, double s, double p);

struct BmoReport {
    double value = 0.0;
    double small_rho_tail = 0.0;  // max oscillation at the smallest rho
};

// Mean oscillation over intrinsic balls of a map sampled on a refinement.
BmoReport bmo_seminorm(const DiscreteMap& u, const std::vector<double>& rho_grid);

// Degree of an S^1-valued loop from principal-branch angle increments.
int winding_number(const std::vector<std::vector<double>>& loop_samples);

// |grad u| per node of a grid map (same stencils as energy_p).
GridField gradient_magnitude_field(const DiscreteMap& u);

// CSV of samples (coordinates then value columns) plus a JSON sidecar with the
// domain descriptor. Grid and skeleton domains round-trip.
void save_map(const DiscreteMap& u, const std::string& sidecar_path);
DiscreteMap load_map(const std::string& sidecar_path);

}  // namespace halftrace::fields
