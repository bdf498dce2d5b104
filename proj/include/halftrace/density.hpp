#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "halftrace/fields.hpp"
#include "halftrace/simplicial.hpp"

namespace halftrace::density {

// Sampler of the solid spherical cap C^eta_rho = {|x| < rho, x_m > eta*rho};
// draws are counter-indexed so parallel evaluation reproduces the stream.
struct CapSampler {
    double eta = 0.75;
    double rho = 1.0;
    int sample_count = 2000;
    std::uint64_t seed = 0;

    std::vector<double> draw(int i, int ambient_dim) const;
    double volume(int ambient_dim) const;

    // eta = (lambda+1)/(2*lambda), rho = 2*lipschitz/(eta*lambda - 1)
    static CapSampler for_map(double lipschitz, double lambda, int samples, std::uint64_t seed);
};

enum class KernelTag { Trace, Qualitative };

// Trace:        K(x, y) = x_m / |x - y|^m
// Qualitative:  K(x, y) = x_m^gamma / |x - y|^{m-1+gamma}
double kernel_value(KernelTag tag, double gamma_exp, std::span<const double> x,
                    std::span<const double> y);

// Boundary mass sup_x int K(x, y) dy; independent of x by scaling, computed by
// radial quadrature after the substitution y = x' + x_m z.
double kernel_mass_constant(KernelTag tag, double gamma_exp, int ambient_dim);

// Direct graded quadrature of the boundary integral of the trace kernel at a
// given interior point (ambient dimension 2).
double trace_kernel_boundary_integral_2d(std::span<const double> x);

struct DensityField {
    fields::GridDomain domain;  // boundary window
    std::vector<double> values;
    KernelTag kernel = KernelTag::Trace;
    double gamma_exp = 0.0;
};

// Hardy-Littlewood style maximal field: at each node the max over the radius
// list of the average over in-ball nodes of the upper half-space window.
fields::GridField maximal_function(const fields::GridField& f, const std::vector<double>& radii);

// w(y) = int W(x) K(x, y) dx over the window, with the total-mass inequality
// checked against the computed kernel mass at 5% slack.
DensityField extension_density(const fields::GridField& W, const fields::GridDomain& boundary,
                               KernelTag tag, double gamma_exp, double p);

struct ShiftResult {
    std::vector<double> xi;      // minimizer over the drawn samples
    double value = 0.0;          // I(xi*)
    double mean = 0.0;           // Monte Carlo mean of I over the cap
    double stderr_mean = 0.0;    // standard error of the mean
    double cap_volume = 0.0;
};

// Averages I(xi) = int_Sigma W(sigma + d0 xi) over cap samples and returns the
// minimizing shift. Hypotheses lambda > 1/eta and |sigma|_Lip < (eta*lambda-1)*rho
// are enforced.
ShiftResult good_shift(const fields::GridField& W, const simplicial::PLMap& sigma,
                       const simplicial::Subcomplex& sub, const simplicial::Refinement& ref,
                       double lambda, const CapSampler& cap);

// Right-hand side of the cap-averaging inequality:
//   (eta*lambda-1)^m (rho+L)^{2m} / (eta^m ((eta*lambda-1)rho - L)^{m+1})
//     * gamma_value * int_{Sigma0} int W(x) x_m/|x - sigma(z)|^m dx dz
double integration_lemma_rhs(const fields::GridField& W, const simplicial::PLMap& sigma,
                             const simplicial::Subcomplex& sub, const simplicial::Refinement& ref,
                             double lambda, double eta, double rho, double gamma_value);

struct TranslationResult {
    std::vector<double> h;       // minimizer over the shift lattice
    double value = 0.0;          // J(h*)
    double mean_over_h = 0.0;
    double sup_bound = 0.0;      // sup_{|z| <= |Psi|_inf} int_A |f - f(.-z)|^p
    double psi_sup = 0.0;
};

// Scans h over a lattice in [0, kappa]^g, evaluates
// J(h) = int_A |f(x) - f(x - Psi(x-h))|^p dx and checks the averaged bound
// mean_h J <= sup_z int_A |f - f(.-z)|^p at 5% slack. Psi must be kappa-periodic.
TranslationResult good_translation(
    const fields::GridField& f,
    const std::function<std::vector<double>(std::span<const double>)>& psi, double kappa,
    double p, int h_lattice_per_axis, int sup_scan_per_axis);

}  // namespace halftrace::density
