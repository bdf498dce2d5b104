#include "halftrace/density.hpp"

#include <algorithm>
#include <cmath>

#include "halftrace/errors.hpp"
#include "halftrace/numerics.hpp"
#include "halftrace/rng.hpp"

namespace halftrace::density {

std::vector<double> CapSampler::draw(int i, int m) const {
    CounterRng rng(seed);
    for (int attempt = 0; attempt < 256; ++attempt) {
        std::vector<double> x(static_cast<std::size_t>(m));
        double r2 = 0.0;
        for (int d = 0; d < m; ++d) {
            const std::uint64_t ctr =
                (static_cast<std::uint64_t>(i) * 256 + static_cast<std::uint64_t>(attempt)) *
                    static_cast<std::uint64_t>(m) +
                static_cast<std::uint64_t>(d);
            const double u = rng.uniform(ctr);
            x[static_cast<std::size_t>(d)] =
                (d == m - 1) ? rho * (eta + (1.0 - eta) * u) : rho * (2.0 * u - 1.0);
            r2 += x[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
        }
        if (r2 < rho * rho) return x;
    }
    throw DomainError("cap sampler: rejection failed (eta too close to 1?)");
}

double CapSampler::volume(int m) const { return std::pow(rho, m) * unit_cap_volume(m, eta); }

CapSampler CapSampler::for_map(double lipschitz, double lambda, int samples, std::uint64_t seed) {
    CapSampler cap;
    cap.eta = (lambda + 1.0) / (2.0 * lambda);
    cap.rho = 2.0 * lipschitz / (cap.eta * lambda - 1.0);
    cap.sample_count = samples;
    cap.seed = seed;
    return cap;
}

double kernel_value(KernelTag tag, double gamma_exp, std::span<const double> x,
                    std::span<const double> y) {
    const double r = std::sqrt(dist2(x, y));
    const double xm = x[x.size() - 1];
    const int m = static_cast<int>(x.size());
    if (tag == KernelTag::Trace) return xm / std::pow(r, m);
    return std::pow(xm, gamma_exp) / std::pow(r, m - 1 + gamma_exp);
}

double kernel_mass_constant(KernelTag tag, double gamma_exp, int m) {
    // int_{R^{m-1}} dz / (1+|z|^2)^e with e = m/2 (trace) or (m-1+gamma)/2 + gamma adjustment
    const double e = (tag == KernelTag::Trace) ? 0.5 * m : 0.5 * (m - 1 + gamma_exp);
    if (m == 2) {
        // 2 * int_0^inf dr / (1+r^2)^e, substitute r = tan(t)
        const int n = 8192;
        std::vector<double> terms(static_cast<std::size_t>(n));
        const double h = (M_PI / 2.0) / n;
        for (int i = 0; i < n; ++i) {
            const double t = (i + 0.5) * h;
            const double c = std::cos(t);
            terms[static_cast<std::size_t>(i)] = std::pow(c * c, e - 1.0) * h;
        }
        return 2.0 * pairwise_sum(terms);
    }
    // radial: S_{m-2} * int_0^inf r^{m-2} (1+r^2)^{-e} dr, r = tan(t)
    const double sphere_area = (m - 1) * unit_ball_volume(m - 1);  // |S^{m-2}|
    const int n = 8192;
    std::vector<double> terms(static_cast<std::size_t>(n));
    const double h = (M_PI / 2.0) / n;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) * h;
        const double s = std::sin(t), c = std::cos(t);
        // r^{m-2} dr / (1+r^2)^e = sin^{m-2} cos^{2e-m} dt
        terms[static_cast<std::size_t>(i)] = std::pow(s, m - 2) * std::pow(c, 2.0 * e - m) * h;
    }
    return sphere_area * pairwise_sum(terms);
}

double trace_kernel_boundary_integral_2d(std::span<const double> x) {
    const double xm = x[1];
    if (xm <= 0.0) throw DomainError("trace kernel integral: point must be interior");
    // symmetric around x', fine band then geometric tail bands
    std::vector<double> terms;
    const double fine_halfwidth = 10.0 * xm;
    const int fine_n = 20000;
    const double fine_h = fine_halfwidth / fine_n;
    for (int i = 0; i < fine_n; ++i) {
        const double t = (i + 0.5) * fine_h;
        terms.push_back(2.0 * fine_h * xm / (t * t + xm * xm));
    }
    double lo = fine_halfwidth;
    while (lo < 2e6 * xm) {
        const double hi = 2.0 * lo;
        const int n = 256;
        const double h = (hi - lo) / n;
        for (int i = 0; i < n; ++i) {
            const double t = lo + (i + 0.5) * h;
            terms.push_back(2.0 * h * xm / (t * t + xm * xm));
        }
        lo = hi;
    }
    return pairwise_sum(terms);
}

fields::GridField maximal_function(const fields::GridField& f, const std::vector<double>& radii) {
    if (radii.empty()) throw DomainError("maximal_function: empty radius list");
    const auto& dom = f.domain;
    const std::size_t n = dom.size();
    std::vector<std::vector<double>> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = dom.position(i);

    fields::GridField out;
    out.domain = dom;
    out.value_dim = 1;
    out.values.assign(n, 0.0);

    std::vector<double> sorted_radii(radii);
    std::sort(sorted_radii.begin(), sorted_radii.end());

    parallel_for(n, [&](std::size_t i) {
        std::vector<std::pair<double, double>> by_dist;  // (dist2, value)
        by_dist.reserve(n);
        for (std::size_t j = 0; j < n; ++j)
            by_dist.emplace_back(dist2(pos[i], pos[j]), f.values[j]);
        std::sort(by_dist.begin(), by_dist.end());
        double best = 0.0;
        std::size_t k = 0;
        double running = 0.0;
        for (double r : sorted_radii) {
            const double r2 = r * r;
            while (k < n && by_dist[k].first <= r2) running += by_dist[k++].second;
            if (k > 0) best = std::max(best, running / static_cast<double>(k));
        }
        out.values[i] = best;
    });
    return out;
}

DensityField extension_density(const fields::GridField& W, const fields::GridDomain& boundary,
                               KernelTag tag, double gamma_exp, double p) {
    if (tag == KernelTag::Qualitative && (gamma_exp <= 0.0 || gamma_exp >= p - 1.0))
        throw DomainError("extension_density: gamma must lie in (0, p-1)");
    const auto& wdom = W.domain;
    const int m = wdom.ambient_dim;
    const std::size_t nw = wdom.size();
    const std::size_t nb = boundary.size();

    std::vector<std::vector<double>> wpos(nw), bpos(nb);
    for (std::size_t i = 0; i < nw; ++i) wpos[i] = wdom.position(i);
    for (std::size_t j = 0; j < nb; ++j) bpos[j] = boundary.position(j);
    const double node_vol = std::pow(wdom.step, wdom.grid_dim());

    DensityField field;
    field.domain = boundary;
    field.kernel = tag;
    field.gamma_exp = gamma_exp;
    field.values.assign(nb, 0.0);

    parallel_for(nb, [&](std::size_t j) {
        std::vector<double> terms;
        terms.reserve(nw);
        for (std::size_t i = 0; i < nw; ++i) {
            // sources live in the open half-space; the boundary slice carries
            // no volume
            if (W.values[i] == 0.0 || wpos[i][static_cast<std::size_t>(m - 1)] <= 0.0) continue;
            terms.push_back(W.values[i] * kernel_value(tag, gamma_exp, wpos[i], bpos[j]) * node_vol);
        }
        field.values[j] = pairwise_sum(terms);
    });

    // total-mass sanity bound
    const double node_area = std::pow(boundary.step, boundary.grid_dim());
    std::vector<double> wmass_terms(nw), bmass_terms(nb);
    for (std::size_t i = 0; i < nw; ++i) wmass_terms[i] = W.values[i] * node_vol;
    for (std::size_t j = 0; j < nb; ++j) bmass_terms[j] = field.values[j] * node_area;
    const double total_w = pairwise_sum(wmass_terms);
    const double total_density = pairwise_sum(bmass_terms);
    const double c_kernel = kernel_mass_constant(tag, gamma_exp, m);
    if (total_density > c_kernel * total_w * 1.05)
        throw DomainError("extension_density: kernel mass bound violated");
    return field;
}

namespace {

struct ComplexQuadrature {
    // per ambient-measure cell: measure, sigma at barycenter, d0 at barycenter
    std::vector<double> measures;
    std::vector<std::vector<double>> sigma_bary;
    std::vector<double> d0_bary;
};

ComplexQuadrature build_quadrature(const simplicial::PLMap& sigma,
                                   const simplicial::Subcomplex& sub,
                                   const simplicial::Refinement& ref) {
    const auto d0_field = ref.distances_from_set(ref.subcomplex_nodes(sub));
    const std::size_t nn = static_cast<std::size_t>(ref.node_count());
    std::vector<std::vector<double>> sigma_at_node(nn);
    for (std::size_t i = 0; i < nn; ++i)
        sigma_at_node[i] = sigma.eval(ref.node_point(static_cast<int>(i)));

    ComplexQuadrature q;
    for (const auto& cell : ref.cells()) {
        q.measures.push_back(cell.measure);
        std::vector<double> s(sigma_at_node.front().size(), 0.0);
        double d0v = 0.0;
        for (int v : cell.nodes) {
            const auto& sv = sigma_at_node[static_cast<std::size_t>(v)];
            for (std::size_t k = 0; k < s.size(); ++k) s[k] += sv[k] / static_cast<double>(cell.nodes.size());
            d0v += d0_field[static_cast<std::size_t>(v)] / static_cast<double>(cell.nodes.size());
        }
        q.sigma_bary.push_back(std::move(s));
        q.d0_bary.push_back(d0v);
    }
    return q;
}

}  // namespace

ShiftResult good_shift(const fields::GridField& W, const simplicial::PLMap& sigma,
                       const simplicial::Subcomplex& sub, const simplicial::Refinement& ref,
                       double lambda, const CapSampler& cap) {
    const double lip = simplicial::lipschitz_constant(sigma);
    if (lambda <= 1.0 / cap.eta)
        throw HypothesisViolated("good_shift: requires lambda > 1/eta");
    if (!(lip < (cap.eta * lambda - 1.0) * cap.rho))
        throw HypothesisViolated("good_shift: requires |sigma|_Lip < (eta*lambda - 1)*rho");

    const int m = W.domain.ambient_dim;
    const auto quad = build_quadrature(sigma, sub, ref);
    const std::size_t ncells = quad.measures.size();

    std::vector<double> samples(static_cast<std::size_t>(cap.sample_count));
    std::vector<std::vector<double>> xis(static_cast<std::size_t>(cap.sample_count));
    parallel_for(static_cast<std::size_t>(cap.sample_count), [&](std::size_t s) {
        const auto xi = cap.draw(static_cast<int>(s), m);
        std::vector<double> terms;
        terms.reserve(ncells);
        std::vector<double> x(static_cast<std::size_t>(m));
        for (std::size_t c = 0; c < ncells; ++c) {
            for (int d = 0; d < m; ++d)
                x[static_cast<std::size_t>(d)] =
                    quad.sigma_bary[c][static_cast<std::size_t>(d)] +
                    quad.d0_bary[c] * xi[static_cast<std::size_t>(d)];
            terms.push_back(quad.measures[c] * W.eval_scalar(x));
        }
        samples[s] = pairwise_sum(terms);
        xis[s] = xi;
    });

    ShiftResult result;
    result.cap_volume = cap.volume(m);
    std::size_t best = 0;
    for (std::size_t s = 1; s < samples.size(); ++s)
        if (samples[s] < samples[best]) best = s;
    result.xi = xis[best];
    result.value = samples[best];
    result.mean = pairwise_sum(samples) / static_cast<double>(samples.size());
    double var = 0.0;
    for (double v : samples) var += (v - result.mean) * (v - result.mean);
    var /= std::max<std::size_t>(samples.size() - 1, 1);
    result.stderr_mean = std::sqrt(var / static_cast<double>(samples.size()));
    return result;
}

double integration_lemma_rhs(const fields::GridField& W, const simplicial::PLMap& sigma,
                             const simplicial::Subcomplex& sub, const simplicial::Refinement& ref,
                             double lambda, double eta, double rho, double gamma_value) {
    const double lip = simplicial::lipschitz_constant(sigma);
    const int m = W.domain.ambient_dim;
    const double el1 = eta * lambda - 1.0;
    const double denom = el1 * rho - lip;
    const double constant = std::pow(el1, m) * std::pow(rho + lip, 2 * m) /
                            (std::pow(eta, m) * std::pow(denom, m + 1));

    // double quadrature over Sigma0 cells and the W window
    const auto sub_cells = ref.subcomplex_cells(sub);
    const std::size_t nn = static_cast<std::size_t>(ref.node_count());
    std::vector<std::vector<double>> sigma_at_node(nn);
    for (std::size_t i = 0; i < nn; ++i)
        sigma_at_node[i] = sigma.eval(ref.node_point(static_cast<int>(i)));

    const auto& wdom = W.domain;
    const std::size_t nw = wdom.size();
    std::vector<std::vector<double>> wpos(nw);
    for (std::size_t i = 0; i < nw; ++i) wpos[i] = wdom.position(i);
    const double node_vol = std::pow(wdom.step, wdom.grid_dim());

    std::vector<double> outer;
    for (const auto& cell : sub_cells) {
        std::vector<double> sz(static_cast<std::size_t>(m), 0.0);
        for (int v : cell.nodes)
            for (int d = 0; d < m; ++d)
                sz[static_cast<std::size_t>(d)] +=
                    sigma_at_node[static_cast<std::size_t>(v)][static_cast<std::size_t>(d)] /
                    static_cast<double>(cell.nodes.size());
        std::vector<double> inner;
        inner.reserve(nw);
        for (std::size_t i = 0; i < nw; ++i) {
            const double xm = wpos[i][static_cast<std::size_t>(m - 1)];
            if (W.values[i] == 0.0 || xm <= 0.0) continue;
            const double r = std::sqrt(dist2(wpos[i], sz));
            inner.push_back(W.values[i] * xm / std::pow(r, m) * node_vol);
        }
        outer.push_back(cell.measure * pairwise_sum(inner));
    }
    return constant * gamma_value * pairwise_sum(outer);
}

TranslationResult good_translation(
    const fields::GridField& f,
    const std::function<std::vector<double>(std::span<const double>)>& psi, double kappa,
    double p, int h_lattice_per_axis, int sup_scan_per_axis) {
    const auto& dom = f.domain;
    const int g = dom.grid_dim();
    const std::size_t n = dom.size();
    std::vector<std::vector<double>> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = dom.position(i);
    const double node_vol = std::pow(dom.step, g);

    // periodicity check on a sample of nodes
    double psi_sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = psi(pos[i]);
        psi_sup = std::max(psi_sup, euclid_norm(v));
        std::vector<double> shifted(pos[i]);
        for (int a = 0; a < g; ++a) shifted[static_cast<std::size_t>(dom.axes[static_cast<std::size_t>(a)])] += kappa;
        const auto vs = psi(shifted);
        double diff = 0.0;
        for (std::size_t d = 0; d < v.size(); ++d) diff = std::max(diff, std::abs(v[d] - vs[d]));
        if (diff > 1e-9) throw DomainError("good_translation: displacement field is not periodic");
    }

    auto lp_diff = [&](const std::function<std::vector<double>(std::size_t)>& translated) {
        std::vector<double> terms;
        terms.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto fx = f.eval(pos[i]);
            const auto fy = translated(i);
            double d2 = 0.0;
            for (std::size_t d = 0; d < fx.size(); ++d) {
                const double dd = fx[d] - fy[d];
                d2 += dd * dd;
            }
            terms.push_back(std::pow(d2, 0.5 * p) * node_vol);
        }
        return pairwise_sum(terms);
    };

    // scan h over the lattice in [0, kappa]^g
    TranslationResult result;
    std::vector<double> values;
    std::vector<std::vector<double>> hs;
    std::vector<int> it(static_cast<std::size_t>(g), 0);
    while (true) {
        std::vector<double> h(static_cast<std::size_t>(g));
        for (int a = 0; a < g; ++a)
            h[static_cast<std::size_t>(a)] =
                (it[static_cast<std::size_t>(a)] + 0.5) * kappa / h_lattice_per_axis;
        const double J = lp_diff([&](std::size_t i) {
            std::vector<double> arg(pos[i]);
            for (int a = 0; a < g; ++a)
                arg[static_cast<std::size_t>(dom.axes[static_cast<std::size_t>(a)])] -=
                    h[static_cast<std::size_t>(a)];
            const auto disp = psi(arg);
            std::vector<double> y(pos[i]);
            for (int a = 0; a < g; ++a)
                y[static_cast<std::size_t>(dom.axes[static_cast<std::size_t>(a)])] -=
                    disp[static_cast<std::size_t>(a)];
            return f.eval(y);
        });
        values.push_back(J);
        hs.push_back(h);
        int axis = g - 1;
        while (axis >= 0) {
            if (++it[static_cast<std::size_t>(axis)] < h_lattice_per_axis) break;
            it[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    result.h = hs[best];
    result.value = values[best];
    result.mean_over_h = pairwise_sum(values) / static_cast<double>(values.size());
    result.psi_sup = psi_sup;

    // sup over |z| <= |Psi|_inf, scanned on a lattice
    double sup = 0.0;
    std::fill(it.begin(), it.end(), 0);
    while (true) {
        std::vector<double> z(static_cast<std::size_t>(g));
        double z2 = 0.0;
        for (int a = 0; a < g; ++a) {
            z[static_cast<std::size_t>(a)] =
                -psi_sup + 2.0 * psi_sup * it[static_cast<std::size_t>(a)] /
                               std::max(sup_scan_per_axis - 1, 1);
            z2 += z[static_cast<std::size_t>(a)] * z[static_cast<std::size_t>(a)];
        }
        if (z2 <= psi_sup * psi_sup * (1.0 + 1e-12)) {
            const double J = lp_diff([&](std::size_t i) {
                std::vector<double> y(pos[i]);
                for (int a = 0; a < g; ++a)
                    y[static_cast<std::size_t>(dom.axes[static_cast<std::size_t>(a)])] -=
                        z[static_cast<std::size_t>(a)];
                return f.eval(y);
            });
            sup = std::max(sup, J);
        }
        int axis = g - 1;
        while (axis >= 0) {
            if (++it[static_cast<std::size_t>(axis)] < sup_scan_per_axis) break;
            it[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    result.sup_bound = sup;
    return result;
}

}  // namespace halftrace::density
