#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <tuple>
#include <vector>

#include "halftrace/cubical.hpp"
#include "halftrace/fields.hpp"

namespace halftrace::extension {

struct RetractionConfig {
    double kappa = 1.0;
    int ell_target = 1;
    std::vector<double> shift;  // R^{m-1} x {0}
    double singular_tolerance = 0.0;  // defaults to kappa * 1e-9

    double eps() const { return singular_tolerance > 0.0 ? singular_tolerance : kappa * 1e-9; }
};

struct MinimizerConfig {
    double p = 1.5;
    int max_iterations = 2000;
    double shrink = 0.5;
    double sufficient_decrease = 1e-4;
    double tolerance = 1e-8;  // relative energy decrease
    enum class Init { BoundaryAverage, Random } init = Init::BoundaryAverage;
    std::uint64_t seed = 0;
};

// One stage of the homogeneous retraction: maps a point of an ell-cell Q onto
// the relative boundary of Q along the ray from the cell center, in sup norm.
// Points already on lower-dimensional faces are fixed.
std::vector<double> retract_once(std::span<const double> x, double kappa, int ell,
                                 double eps_sing);

// Composite retraction onto the ell_target-skeleton, conjugated by the shift.
std::vector<double> retract_to_skeleton(std::span<const double> x, double kappa, int ell_target,
                                        std::span<const double> shift, double eps_sing);

// Interpolate a map given on a skeleton lattice at a point of the skeleton.
class SkeletonLocator {
  public:
    explicit SkeletonLocator(const fields::DiscreteMap& map);
    std::vector<double> eval(std::span<const double> point) const;

  private:
    std::vector<double> interpolate(std::size_t cell_index, std::span<const double> y) const;

    const fields::DiscreteMap* map_;
    struct Key {
        std::vector<int> anchor;
        std::vector<int> free_axes;
        bool operator<(const Key& o) const {
            return std::tie(anchor, free_axes) < std::tie(o.anchor, o.free_axes);
        }
    };
    std::map<Key, std::size_t> index_;
};

struct PyramidResult {
    fields::DiscreteMap extended;
    fields::EnergyReport energy;
    double bound = 0.0;  // (ell^{p/2} kappa / (ell - p)) * energy_p(f)
};

// Degree-zero homogeneous extension of f from the base [-kappa, kappa]^{ell-1}
// to the solid pyramid {|x'|_inf <= x_ell <= kappa}, with the energy bound
// checked at 5% slack.
PyramidResult pyramid_extend(const fields::DiscreteMap& f, double kappa, double p);

struct ChainResult {
    fields::DiscreteMap extended;
    fields::EnergyReport energy;
    double bound = 0.0;  // (2 ell^{p/2} / (ell - p)) * kappa * energy_p(V)
};

// Extend a map from the (ell-1)-skeleton to the ell-skeleton of the same
// cubication by precomposition with retract_once. When out_cells is given it
// replaces the enumerated ell-skeleton (e.g. a single cube).
ChainResult extend_one_dimension(const fields::DiscreteMap& v, const cubical::Cubication& cub,
                                 double p,
                                 const std::vector<cubical::CubicalCell>* out_cells = nullptr);

// Product of the per-stage chain constants for ell = floor(p)+1 .. m.
double chain_constant(int m, double p);

struct HomogeneousResult {
    fields::DiscreteMap extended;  // on a full-dimensional grid window
    fields::EnergyReport energy;
    double bound = 0.0;  // chain_constant * kappa^{m - floor(p)} * energy_p(V) * slack
    std::size_t singular_retries = 0;
};

// U(x) = V(retract_to_skeleton(x)), sampled on a grid window of the upper
// half-space. If too many samples hit the dual skeleton the lattice is shifted
// by step/3 and the construction retried once.
HomogeneousResult homogeneous_extension(const fields::DiscreteMap& v,
                                        const cubical::Cubication& cub, double p,
                                        const std::vector<double>& window_lo,
                                        const std::vector<double>& window_hi, double step);

// Discrete p-energy of a lattice map and, when grad is non-null, its exact
// derivative with respect to every sample value (the minimizer's objective).
double p_energy_with_gradient(const fields::DiscreteMap& u, double p, std::vector<double>* grad);

struct MinimizeResult {
    fields::DiscreteMap v;
    fields::EnergyReport energy;
    int iterations = 0;
    bool converged = false;
    double projected_grad_norm = 0.0;
};

// Projected gradient descent for the discrete p-energy with a pinned-sample
// mask; values stay on the target (reprojected each accepted step), pinned
// samples never move, and the energy decreases monotonically.
MinimizeResult minimize_p_energy(fields::DiscreteMap u, const std::vector<char>& pinned,
                                 const MinimizerConfig& cfg);

// Build the floor(p)-skeleton of the cubication, pin the samples on the
// boundary hyperplane to the given boundary data, and minimize.
MinimizeResult minimize_extension(const fields::DiscreteMap& boundary,
                                  const cubical::Cubication& cub, const MinimizerConfig& cfg,
                                  int intervals);

}  // namespace halftrace::extension
