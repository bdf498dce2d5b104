#include "halftrace/extension.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "halftrace/errors.hpp"
#include "halftrace/numerics.hpp"
#include "halftrace/rng.hpp"

namespace halftrace::extension {

namespace {

constexpr double kLatticeTol = 1e-9;

// axes whose coordinate sits on the face grid (half-integer multiples of kappa)
std::vector<int> free_axes_of(std::span<const double> x, double kappa) {
    std::vector<int> free;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = x[i] / kappa + 0.5;
        if (std::abs(t - std::round(t)) > kLatticeTol) free.push_back(static_cast<int>(i));
    }
    return free;
}

}  // namespace

std::vector<double> retract_once(std::span<const double> x, double kappa, int ell,
                                 double eps_sing) {
    const int m = static_cast<int>(x.size());
    if (ell < 1 || ell > m) throw DomainError("retract_once: stage out of range");
    const auto free = free_axes_of(x, kappa);
    if (static_cast<int>(free.size()) > ell)
        throw DomainError("retract_once: point does not lie on the requested skeleton");
    std::vector<double> out(x.begin(), x.end());
    if (static_cast<int>(free.size()) < ell) return out;  // on a face of Q, fixed

    double rinf = 0.0;
    std::vector<double> center(out);
    for (int a : free) {
        const std::size_t ua = static_cast<std::size_t>(a);
        center[ua] = kappa * std::round(x[ua] / kappa);
        rinf = std::max(rinf, std::abs(x[ua] - center[ua]));
    }
    if (rinf <= eps_sing)
        throw SingularPoint(ell, "retract_once: point on the dual skeleton");
    const double scale = (kappa / 2.0) / rinf;
    for (int a : free) {
        const std::size_t ua = static_cast<std::size_t>(a);
        out[ua] = center[ua] + scale * (x[ua] - center[ua]);
    }
    return out;
}

std::vector<double> retract_to_skeleton(std::span<const double> x, double kappa, int ell_target,
                                        std::span<const double> shift, double eps_sing) {
    const int m = static_cast<int>(x.size());
    if (ell_target < 0 || ell_target >= m)
        throw DomainError("retract_to_skeleton: target dimension out of range");
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t i = 0; i < y.size() && i < shift.size(); ++i) y[i] -= shift[i];
    for (int ell = m; ell > ell_target; --ell) {
        y = retract_once(y, kappa, ell, eps_sing);
    }
    for (std::size_t i = 0; i < y.size() && i < shift.size(); ++i) y[i] += shift[i];
    return y;
}

// ---------------------------------------------------------------------------
// SkeletonLocator

SkeletonLocator::SkeletonLocator(const fields::DiscreteMap& map) : map_(&map) {
    if (!map.skeleton) throw DomainError("skeleton locator: map is not on a skeleton domain");
    const auto& dom = *map.skeleton;
    for (std::size_t c = 0; c < dom.cells.size(); ++c)
        index_.emplace(Key{dom.cells[c].anchor, dom.cells[c].free_axes}, c);
}

std::vector<double> SkeletonLocator::eval(std::span<const double> point) const {
    const auto& dom = *map_->skeleton;
    const double kappa = dom.cells.front().side;
    const auto& shift = dom.cells.front().shift;
    const int m = dom.ambient_dim;

    std::vector<double> y(point.begin(), point.end());
    for (int i = 0; i < m; ++i)
        if (!shift.empty()) y[static_cast<std::size_t>(i)] -= shift[static_cast<std::size_t>(i)];

    const auto free = free_axes_of(y, kappa);
    const int ell = dom.cells.front().dim;
    if (static_cast<int>(free.size()) > ell)
        throw DomainError("skeleton locator: point off the skeleton");

    // candidate free-axis sets: the detected free axes plus any padding choice
    std::vector<int> fixed;
    for (int a = 0; a < m; ++a)
        if (std::find(free.begin(), free.end(), a) == free.end()) fixed.push_back(a);

    const int pad = ell - static_cast<int>(free.size());
    std::vector<int> chosen(static_cast<std::size_t>(pad));
    std::vector<double> result;
    bool found = false;

    // anchors consistent with one coordinate of a free axis: a point at a
    // lattice endpoint belongs to the cells on both sides
    auto free_anchor_candidates = [&](double coord) {
        std::vector<int> out;
        const double t = coord / kappa + 0.5;
        if (std::abs(t - std::round(t)) <= 1e-9) {
            const int k = static_cast<int>(std::round(t));
            out = {k - 1, k};
        } else {
            out = {static_cast<int>(std::round(coord / kappa))};
        }
        return out;
    };

    std::function<void(int, int)> try_pad = [&](int start, int depth) {
        if (found) return;
        if (depth == pad) {
            std::vector<int> axes(free);
            axes.insert(axes.end(), chosen.begin(), chosen.end());
            std::sort(axes.begin(), axes.end());
            std::vector<std::vector<int>> candidates(static_cast<std::size_t>(m));
            for (int a = 0; a < m; ++a) {
                const std::size_t ua = static_cast<std::size_t>(a);
                if (std::find(axes.begin(), axes.end(), a) != axes.end())
                    candidates[ua] = free_anchor_candidates(y[ua]);
                else
                    candidates[ua] = {static_cast<int>(std::round(y[ua] / kappa + 0.5))};
            }
            std::vector<int> anchor(static_cast<std::size_t>(m));
            std::function<void(int)> pick = [&](int axis) {
                if (found) return;
                if (axis == m) {
                    auto it = index_.find(Key{anchor, axes});
                    if (it != index_.end()) {
                        result = interpolate(it->second, y);
                        found = true;
                    }
                    return;
                }
                for (int k : candidates[static_cast<std::size_t>(axis)]) {
                    anchor[static_cast<std::size_t>(axis)] = k;
                    pick(axis + 1);
                }
            };
            pick(0);
            return;
        }
        for (int i = start; i < static_cast<int>(fixed.size()); ++i) {
            chosen[static_cast<std::size_t>(depth)] = fixed[static_cast<std::size_t>(i)];
            try_pad(i + 1, depth + 1);
            if (found) return;
        }
    };
    try_pad(0, 0);
    if (!found) throw DomainError("skeleton locator: no cell of the domain contains the point");
    return result;
}

std::vector<double> SkeletonLocator::interpolate(std::size_t cell_index,
                                                 std::span<const double> y) const {
    const auto& dom = *map_->skeleton;
    const auto& cell = dom.cells[cell_index];
    const auto& shape = dom.cell_shape[cell_index];
    const auto& nodes = dom.cell_nodes[cell_index];
    const double kappa = cell.side;

    const std::size_t naxes = shape.size();
    std::vector<int> base(naxes);
    std::vector<double> frac(naxes);
    for (std::size_t fa = 0; fa < naxes; ++fa) {
        const int axis = cell.free_axes[fa];
        const auto [lo2, hi2] = cell.axis_span2(axis);
        const double lo = lo2 * kappa / 2.0;
        double t = (y[static_cast<std::size_t>(axis)] - lo) / dom.step;
        t = std::clamp(t, 0.0, static_cast<double>(shape[fa] - 1));
        base[fa] = std::min(static_cast<int>(std::floor(t)), shape[fa] - 2);
        base[fa] = std::max(base[fa], 0);
        frac[fa] = t - base[fa];
    }

    std::vector<std::size_t> stride(naxes, 1);
    for (std::size_t a = naxes; a-- > 1;)
        stride[a - 1] = stride[a] * static_cast<std::size_t>(shape[a]);

    std::vector<double> out(static_cast<std::size_t>(map_->value_dim), 0.0);
    const int corners = 1 << naxes;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::size_t flat = 0;
        for (std::size_t a = 0; a < naxes; ++a) {
            const int bit = (c >> a) & 1;
            w *= bit ? frac[a] : (1.0 - frac[a]);
            flat += stride[a] * static_cast<std::size_t>(base[a] + bit);
        }
        if (w == 0.0) continue;
        const auto v = map_->value(static_cast<std::size_t>(nodes[flat]));
        for (int d = 0; d < map_->value_dim; ++d) out[static_cast<std::size_t>(d)] += w * v[static_cast<std::size_t>(d)];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pyramid extension

PyramidResult pyramid_extend(const fields::DiscreteMap& f, double kappa, double p) {
    if (!f.grid) throw DomainError("pyramid_extend: base map must live on a grid");
    const int ell = f.grid->grid_dim() + 1;
    if (p >= ell)
        throw NonIntegrableHomogeneous("pyramid_extend: homogeneous extension not W^{1,p} for p >= ell");

    fields::GridField base;
    base.domain = *f.grid;
    base.value_dim = f.value_dim;
    base.values = f.values;
    base.edge = fields::GridField::Edge::Clamp;

    const double eta = f.grid->step;
    std::vector<double> lo(static_cast<std::size_t>(ell), -kappa), hi(static_cast<std::size_t>(ell), kappa);
    lo.back() = 0.0;
    auto grid = fields::GridDomain::full_window(ell, lo, hi, eta);

    // mask: fraction of each node cell inside {|x'|_inf <= x_ell}
    const std::size_t n = grid.size();
    grid.node_weight.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = grid.position(i);
        const double half = eta / 2.0;
        bool all_in = true, all_out = true;
        for (int corner = 0; corner < (1 << ell); ++corner) {
            double sup = 0.0;
            for (int a = 0; a + 1 < ell; ++a)
                sup = std::max(sup, std::abs(x[static_cast<std::size_t>(a)] +
                                             ((corner >> a) & 1 ? half : -half)));
            const double xe = x[static_cast<std::size_t>(ell - 1)] +
                              ((corner >> (ell - 1)) & 1 ? half : -half);
            const bool inside = sup <= xe && xe <= kappa + 1e-12;
            all_in = all_in && inside;
            all_out = all_out && !inside;
        }
        if (all_in) {
            grid.node_weight[i] = 1.0;
        } else if (!all_out) {
            const int s = 6;
            int total = 1;
            for (int a = 0; a < ell; ++a) total *= s;
            int hits = 0;
            std::vector<int> it(static_cast<std::size_t>(ell), 0);
            for (int count = 0; count < total; ++count) {
                double sup = 0.0;
                double xe = 0.0;
                for (int a = 0; a < ell; ++a) {
                    const double c = x[static_cast<std::size_t>(a)] - half +
                                     (it[static_cast<std::size_t>(a)] + 0.5) * eta / s;
                    if (a + 1 < ell)
                        sup = std::max(sup, std::abs(c));
                    else
                        xe = c;
                }
                if (sup <= xe && xe <= kappa) ++hits;
                for (int a = ell - 1; a >= 0; --a) {
                    if (++it[static_cast<std::size_t>(a)] < s) break;
                    it[static_cast<std::size_t>(a)] = 0;
                }
            }
            grid.node_weight[i] = static_cast<double>(hits) / total;
        }
    }

    auto domain = std::make_shared<fields::GridDomain>(std::move(grid));
    auto g = fields::DiscreteMap::on_grid(domain, f.target, [&](std::span<const double> x) {
        const double xe = x[static_cast<std::size_t>(ell - 1)];
        std::vector<double> y(x.begin(), x.end() - 1);
        if (xe <= 1e-12) {
            std::fill(y.begin(), y.end(), 0.0);
        } else {
            for (double& c : y) c *= kappa / xe;
        }
        std::vector<double> padded(static_cast<std::size_t>(f.grid->ambient_dim), 0.0);
        for (std::size_t a = 0; a < y.size(); ++a)
            padded[static_cast<std::size_t>(f.grid->axes[a])] = std::clamp(y[a], -kappa, kappa);
        return base.eval(padded);
    });

    PyramidResult result{std::move(g), {}, 0.0};
    result.energy = fields::energy_p(result.extended, p);
    const double base_energy = fields::energy_p(f, p).value;
    result.bound = std::pow(static_cast<double>(ell), 0.5 * p) * kappa / (ell - p) * base_energy;
    if (result.energy.value > result.bound * 1.05)
        throw DomainError("pyramid_extend: homogeneous extension energy bound violated");
    return result;
}

// ---------------------------------------------------------------------------
// Chain extension

ChainResult extend_one_dimension(const fields::DiscreteMap& v, const cubical::Cubication& cub,
                                 double p, const std::vector<cubical::CubicalCell>* out_cells) {
    if (!v.skeleton) throw DomainError("extend_one_dimension: input must live on a skeleton");
    const int ell = v.skeleton->cells.front().dim + 1;
    if (p >= ell)
        throw NonIntegrableHomogeneous("extend_one_dimension: requires p < ell");

    std::vector<cubical::CubicalCell> cells;
    if (out_cells) {
        cells = *out_cells;
    } else {
        // shrink the window one cube inward so every face of an output cell
        // belongs to the input skeleton
        cubical::Cubication inner = cub;
        for (int a = 0; a < cub.ambient_dim; ++a) {
            const std::size_t ua = static_cast<std::size_t>(a);
            if (a + 1 < cub.ambient_dim) inner.window.lo[ua] += 1;
            inner.window.hi[ua] -= 1;
            if (inner.window.hi[ua] < inner.window.lo[ua])
                throw DomainError("extend_one_dimension: window too small to shrink");
        }
        cells = cubical::enumerate_skeleton(inner, ell, cubical::SkeletonFamily::Plus);
    }
    auto domain = std::make_shared<fields::SkeletonDomain>(
        fields::SkeletonDomain::build(std::move(cells), v.skeleton->intervals));

    SkeletonLocator locator(v);
    const double kappa = cub.kappa;
    const auto& shift = cub.shift;
    const double eps = kappa * 1e-9;

    auto out = fields::DiscreteMap::on_skeleton(domain, v.target, [&](std::span<const double> x) {
        std::vector<double> y(x.begin(), x.end());
        for (std::size_t i = 0; i < shift.size(); ++i) y[i] -= shift[i];
        std::vector<double> r;
        try {
            r = retract_once(y, kappa, ell, eps);
        } catch (const SingularPoint&) {
            for (double& c : y) c += 4.0 * eps;  // one deterministic nudge of the sample
            r = retract_once(y, kappa, ell, eps);
        }
        for (std::size_t i = 0; i < shift.size(); ++i) r[i] += shift[i];
        return locator.eval(r);
    });

    ChainResult result{std::move(out), {}, 0.0};
    result.energy = fields::energy_p(result.extended, p);
    const double base_energy = fields::energy_p(v, p).value;
    result.bound =
        2.0 * std::pow(static_cast<double>(ell), 0.5 * p) / (ell - p) * kappa * base_energy;
    if (result.energy.value > result.bound * 1.05)
        throw DomainError("extend_one_dimension: chain energy bound violated");
    return result;
}

double chain_constant(int m, double p) {
    const int lp = static_cast<int>(std::floor(p));
    double c = 1.0;
    for (int ell = lp + 1; ell <= m; ++ell)
        c *= 2.0 * std::pow(static_cast<double>(ell), 0.5 * p) / (ell - p);
    return c;
}

// ---------------------------------------------------------------------------
// Homogeneous extension

HomogeneousResult homogeneous_extension(const fields::DiscreteMap& v,
                                        const cubical::Cubication& cub, double p,
                                        const std::vector<double>& window_lo,
                                        const std::vector<double>& window_hi, double step) {
    if (!v.skeleton) throw DomainError("homogeneous_extension: input must live on a skeleton");
    const int m = cub.ambient_dim;
    if (p <= 1.0 || p >= m) throw DomainError("homogeneous_extension: requires 1 < p < m");
    const int lp = v.skeleton->cells.front().dim;
    const double eps = cub.kappa * 1e-9;

    SkeletonLocator locator(v);

    for (int attempt = 0; attempt < 2; ++attempt) {
        std::vector<double> lo(window_lo);
        if (attempt == 1)
            for (double& c : lo) c += step / 3.0;
        auto grid = std::make_shared<fields::GridDomain>(
            fields::GridDomain::full_window(m, lo, window_hi, step));

        std::size_t singular = 0;
        fields::DiscreteMap u;
        try {
            u = fields::DiscreteMap::on_grid(grid, v.target, [&](std::span<const double> x) {
                std::vector<double> y;
                try {
                    y = retract_to_skeleton(x, cub.kappa, lp, cub.shift, eps);
                } catch (const SingularPoint&) {
                    ++singular;
                    std::vector<double> xj(x.begin(), x.end());
                    for (double& c : xj) c += 4.0 * eps;
                    y = retract_to_skeleton(xj, cub.kappa, lp, cub.shift, eps);
                }
                return locator.eval(y);
            });
        } catch (const SingularPoint&) {
            singular = grid->size();  // jitter failed too, force the lattice shift
        }
        if (static_cast<double>(singular) > 1e-6 * static_cast<double>(grid->size())) {
            if (attempt == 1)
                throw GridAlignment("homogeneous_extension: sample lattice keeps hitting the dual skeleton");
            continue;
        }

        HomogeneousResult result{std::move(u), {}, 0.0, singular};
        result.energy = fields::energy_p(result.extended, p);
        const double ev = fields::energy_p(v, p).value;
        result.bound = chain_constant(m, p) * std::pow(cub.kappa, m - lp) * ev * 1.05;
        return result;
    }
    throw GridAlignment("homogeneous_extension: unreachable");
}

// ---------------------------------------------------------------------------
// Minimizer

// energy and (optionally) its gradient w.r.t. sample values
double p_energy_with_gradient(const fields::DiscreteMap& u, double p, std::vector<double>* grad) {
    std::vector<double> terms;
    if (grad) std::fill(grad->begin(), grad->end(), 0.0);

    auto process = [&](const std::vector<int>& shape, double h,
                       const std::vector<int>* nodes, const fields::GridDomain* gdom) {
        const std::size_t naxes = shape.size();
        std::size_t count = 1;
        for (int s : shape) count *= static_cast<std::size_t>(s);
        std::vector<std::size_t> stride(naxes, 1);
        for (std::size_t a = naxes; a-- > 1;)
            stride[a - 1] = stride[a] * static_cast<std::size_t>(shape[a]);
        const int nu = u.value_dim;

        std::vector<int> idx(naxes, 0);
        for (std::size_t flat = 0; flat < count; ++flat) {
            double w = gdom ? gdom->weight(flat) : 1.0;
            if (w != 0.0) {
                for (std::size_t a = 0; a < naxes; ++a) {
                    const bool edge = idx[a] == 0 || idx[a] == shape[a] - 1;
                    w *= edge ? 0.5 * h : h;
                }
                double g2 = 0.0;
                // first pass: gradient magnitude
                std::vector<std::size_t> ups(naxes), dns(naxes);
                std::vector<double> denoms(naxes);
                for (std::size_t a = 0; a < naxes; ++a) {
                    std::size_t up = flat, dn = flat;
                    double denom;
                    if (idx[a] == 0) {
                        up = flat + stride[a];
                        denom = h;
                    } else if (idx[a] == shape[a] - 1) {
                        dn = flat - stride[a];
                        denom = h;
                    } else {
                        up = flat + stride[a];
                        dn = flat - stride[a];
                        denom = 2.0 * h;
                    }
                    ups[a] = up;
                    dns[a] = dn;
                    denoms[a] = denom;
                    const std::size_t gup = nodes ? static_cast<std::size_t>((*nodes)[up]) : up;
                    const std::size_t gdn = nodes ? static_cast<std::size_t>((*nodes)[dn]) : dn;
                    const auto vu = u.value(gup);
                    const auto vd = u.value(gdn);
                    for (int d = 0; d < nu; ++d) {
                        const double der =
                            (vu[static_cast<std::size_t>(d)] - vd[static_cast<std::size_t>(d)]) / denoms[a];
                        g2 += der * der;
                    }
                }
                terms.push_back(w * std::pow(g2, 0.5 * p));
                if (grad && g2 > 0.0) {
                    const double coeff = w * p * std::pow(g2, 0.5 * p - 1.0);
                    for (std::size_t a = 0; a < naxes; ++a) {
                        const std::size_t gup = nodes ? static_cast<std::size_t>((*nodes)[ups[a]]) : ups[a];
                        const std::size_t gdn = nodes ? static_cast<std::size_t>((*nodes)[dns[a]]) : dns[a];
                        const auto vu = u.value(gup);
                        const auto vd = u.value(gdn);
                        for (int d = 0; d < nu; ++d) {
                            const double der =
                                (vu[static_cast<std::size_t>(d)] - vd[static_cast<std::size_t>(d)]) / denoms[a];
                            const double c = coeff * der / denoms[a];
                            (*grad)[gup * static_cast<std::size_t>(nu) + static_cast<std::size_t>(d)] += c;
                            (*grad)[gdn * static_cast<std::size_t>(nu) + static_cast<std::size_t>(d)] -= c;
                        }
                    }
                }
            }
            for (std::size_t a = naxes; a-- > 0;) {
                if (++idx[a] < shape[a]) break;
                idx[a] = 0;
            }
        }
    };

    if (u.skeleton) {
        const auto& dom = *u.skeleton;
        for (std::size_t c = 0; c < dom.cells.size(); ++c) {
            if (dom.cells[c].dim == 0) continue;
            process(dom.cell_shape[c], dom.step, &dom.cell_nodes[c], nullptr);
        }
    } else if (u.grid) {
        process(u.grid->shape, u.grid->step, nullptr, u.grid.get());
    } else {
        throw DomainError("minimizer: unsupported domain");
    }
    return pairwise_sum(terms);
}

MinimizeResult minimize_p_energy(fields::DiscreteMap u, const std::vector<char>& pinned,
                                 const MinimizerConfig& cfg) {
    if (cfg.p <= 1.0) throw DomainError("minimizer: p must exceed 1");
    const std::size_t n = u.node_count();
    const int nu = u.value_dim;
    std::vector<double> grad(n * static_cast<std::size_t>(nu));

    double energy = p_energy_with_gradient(u, cfg.p, &grad);
    double alpha = 1.0;
    int it = 0;
    bool converged = false;
    double gnorm = 0.0;
    int jitters = 0;
    CounterRng jitter_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<double> prev_values, prev_grad;

    for (; it < cfg.max_iterations; ++it) {
        // Riemannian gradient (tangential part), pinned samples frozen
        gnorm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            auto gi = std::span<double>(grad.data() + i * static_cast<std::size_t>(nu),
                                        static_cast<std::size_t>(nu));
            if (pinned[i]) {
                for (double& c : gi) c = 0.0;
                continue;
            }
            const auto ui = u.value(i);
            double dot = 0.0;
            for (int d = 0; d < nu; ++d) dot += gi[static_cast<std::size_t>(d)] * ui[static_cast<std::size_t>(d)];
            for (int d = 0; d < nu; ++d) {
                gi[static_cast<std::size_t>(d)] -= dot * ui[static_cast<std::size_t>(d)];
                gnorm += gi[static_cast<std::size_t>(d)] * gi[static_cast<std::size_t>(d)];
            }
        }
        if (gnorm <= 1e-14 * std::max(1.0, energy)) {
            if (energy <= 1e-12 || jitters >= 3) {
                converged = true;
                break;
            }
            // stationary but not at zero energy: antipodal sample pairs make
            // exact saddles; break the symmetry with one seeded tangential nudge
            ++jitters;
            for (std::size_t i = 0; i < n; ++i) {
                if (pinned[i]) continue;
                auto ui = u.value(i);
                double norm2 = 0.0;
                for (int d = 0; d < nu; ++d) {
                    const std::size_t ud = static_cast<std::size_t>(d);
                    ui[ud] += 1e-3 * (jitter_rng.uniform(i * static_cast<std::size_t>(nu) + ud +
                                                         static_cast<std::size_t>(jitters) * n) -
                                      0.5);
                    norm2 += ui[ud] * ui[ud];
                }
                const double norm = std::max(std::sqrt(norm2), 1e-12);
                for (int d = 0; d < nu; ++d) ui[static_cast<std::size_t>(d)] /= norm;
            }
            energy = p_energy_with_gradient(u, cfg.p, &grad);
            prev_values.clear();
            prev_grad.clear();
            continue;
        }

        // Barzilai-Borwein seed for the step, safeguarded by the backtracking
        if (!prev_values.empty()) {
            double ss = 0.0, sg = 0.0;
            for (std::size_t k = 0; k < u.values.size(); ++k) {
                const double dv = u.values[k] - prev_values[k];
                ss += dv * dv;
                sg += dv * (grad[k] - prev_grad[k]);
            }
            if (sg > 0.0 && ss > 0.0) alpha = std::clamp(ss / sg, 1e-12, 1e12);
        }
        prev_values = u.values;
        prev_grad = grad;

        // backtracking along the projected negative gradient
        fields::DiscreteMap trial = u;
        double trial_energy = energy;
        bool accepted = false;
        alpha *= 2.0;
        for (int bt = 0; bt < 60; ++bt) {
            trial.values = u.values;
            for (std::size_t i = 0; i < n; ++i) {
                if (pinned[i]) continue;
                auto ti = trial.value(i);
                double norm2 = 0.0;
                for (int d = 0; d < nu; ++d) {
                    const std::size_t ud = static_cast<std::size_t>(d);
                    ti[ud] -= alpha * grad[i * static_cast<std::size_t>(nu) + ud];
                    norm2 += ti[ud] * ti[ud];
                }
                const double norm = std::sqrt(norm2);
                if (norm <= 1e-12) {  // collapsed through the origin, keep the old value
                    const auto ui = u.value(i);
                    std::copy(ui.begin(), ui.end(), ti.begin());
                } else {
                    for (int d = 0; d < nu; ++d) ti[static_cast<std::size_t>(d)] /= norm;
                }
            }
            trial_energy = p_energy_with_gradient(trial, cfg.p, nullptr);
            if (trial_energy <= energy - cfg.sufficient_decrease * alpha * gnorm) {
                accepted = true;
                break;
            }
            alpha *= cfg.shrink;
        }
        if (!accepted) {
            // no step of any admissible size decreases the energy: stationary
            // at working precision
            converged = (energy - trial_energy) <= cfg.tolerance * std::max(energy, 1e-300);
            break;
        }

        const double decrease = (energy - trial_energy) / std::max(energy, 1e-300);
        u.values = std::move(trial.values);
        energy = trial_energy;
        p_energy_with_gradient(u, cfg.p, &grad);
        if (decrease < cfg.tolerance) {
            converged = true;
            ++it;
            break;
        }
    }

    MinimizeResult result{std::move(u), {}, it, converged, std::sqrt(gnorm)};
    result.energy = fields::energy_p(result.v, cfg.p);
    return result;
}

MinimizeResult minimize_extension(const fields::DiscreteMap& boundary,
                                  const cubical::Cubication& cub, const MinimizerConfig& cfg,
                                  int intervals) {
    const int m = cub.ambient_dim;
    if (cfg.p <= 1.0 || cfg.p >= m) throw DomainError("minimize_extension: requires 1 < p < m");
    if (!boundary.skeleton) throw DomainError("minimize_extension: boundary data must live on a skeleton");
    const int lp = static_cast<int>(std::floor(cfg.p));

    auto cells = cubical::enumerate_skeleton(cub, lp, cubical::SkeletonFamily::Plus);
    auto domain = std::make_shared<fields::SkeletonDomain>(
        fields::SkeletonDomain::build(std::move(cells), intervals));

    // key boundary nodes by exact lattice coordinates
    const auto& bdom = *boundary.skeleton;
    const double unit = cub.kappa / (2.0 * intervals);
    auto key_of = [&](std::span<const double> pos, const std::vector<double>& shift) {
        std::vector<long long> key(pos.size());
        for (std::size_t i = 0; i < pos.size(); ++i) {
            const double raw = (pos[i] - (shift.empty() ? 0.0 : shift[i])) / unit;
            key[i] = std::llround(raw);
            if (std::abs(raw - static_cast<double>(key[i])) > 1e-6)
                throw DomainError("minimize_extension: boundary lattice does not match the skeleton");
        }
        return key;
    };
    if (bdom.intervals != intervals)
        throw DomainError("minimize_extension: boundary sampled at a different lattice resolution");
    std::map<std::vector<long long>, std::size_t> boundary_nodes;
    for (std::size_t i = 0; i < bdom.size(); ++i)
        boundary_nodes.emplace(key_of(bdom.position(i), cub.shift), i);

    // initial value: average of the boundary samples (projected), or seeded noise
    std::vector<double> init(static_cast<std::size_t>(boundary.value_dim), 0.0);
    for (std::size_t i = 0; i < bdom.size(); ++i) {
        const auto v = boundary.value(i);
        for (int d = 0; d < boundary.value_dim; ++d)
            init[static_cast<std::size_t>(d)] += v[static_cast<std::size_t>(d)] / static_cast<double>(bdom.size());
    }
    if (euclid_norm(init) <= 1e-9) {
        const auto v = boundary.value(0);  // degenerate average, fall back to a data point
        init.assign(v.begin(), v.end());
    }
    const double inorm = euclid_norm(init);
    for (double& c : init) c /= inorm;

    // constant data keep the exact constant init; anything else gets a small
    // seeded nudge so antipodal sample pairs cannot pin the start on a saddle
    bool constant_boundary = true;
    for (std::size_t i = 1; i < bdom.size() && constant_boundary; ++i)
        for (int d = 0; d < boundary.value_dim; ++d)
            if (std::abs(boundary.value(i)[static_cast<std::size_t>(d)] -
                         boundary.value(0)[static_cast<std::size_t>(d)]) > 1e-12)
                constant_boundary = false;

    CounterRng rng(cfg.seed);
    std::size_t counter = 0;
    fields::DiscreteMap u;
    u.skeleton = domain;
    u.target = boundary.target;
    u.value_dim = boundary.value_dim;
    u.values.resize(domain->size() * static_cast<std::size_t>(u.value_dim));
    std::vector<char> pinned(domain->size(), 0);
    for (std::size_t i = 0; i < domain->size(); ++i) {
        auto vi = u.value(i);
        if (domain->node_on_boundary[i]) {
            auto it = boundary_nodes.find(key_of(domain->position(i), cub.shift));
            if (it == boundary_nodes.end())
                throw DomainError("minimize_extension: boundary value missing for a pinned sample");
            const auto bv = boundary.value(it->second);
            std::copy(bv.begin(), bv.end(), vi.begin());
            pinned[i] = 1;
        } else if (cfg.init == MinimizerConfig::Init::Random) {
            double norm2 = 0.0;
            for (int d = 0; d < u.value_dim; ++d) {
                const double c = rng.uniform(counter++) * 2.0 - 1.0;
                vi[static_cast<std::size_t>(d)] = c;
                norm2 += c * c;
            }
            const double norm = std::max(std::sqrt(norm2), 1e-9);
            for (double& c : vi) c /= norm;
        } else {
            double norm2 = 0.0;
            for (int d = 0; d < u.value_dim; ++d) {
                const std::size_t ud = static_cast<std::size_t>(d);
                vi[ud] = init[ud];
                if (!constant_boundary) vi[ud] += 0.01 * (rng.uniform(counter++) - 0.5);
                norm2 += vi[ud] * vi[ud];
            }
            const double norm = std::max(std::sqrt(norm2), 1e-9);
            for (double& c : vi) c /= norm;
        }
    }
    return minimize_p_energy(std::move(u), pinned, cfg);
}

}  // namespace halftrace::extension
