#include "halftrace/fields.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "halftrace/errors.hpp"
#include "halftrace/numerics.hpp"

namespace halftrace::fields {

std::vector<double> project_to_target(std::span<const double> x, const Target& target) {
    if (static_cast<int>(x.size()) != target.ambient_dim)
        throw DomainError("project_to_target: dimension mismatch");
    const double r = euclid_norm(x);
    if (r <= 1e-9) throw SingularProjection("projection undefined near the origin");
    std::vector<double> out(x.begin(), x.end());
    for (double& v : out) v /= r;
    return out;
}

// ---------------------------------------------------------------------------
// GridDomain

std::size_t GridDomain::size() const {
    std::size_t n = 1;
    for (int s : shape) n *= static_cast<std::size_t>(s);
    return n;
}

std::size_t GridDomain::flat_index(std::span<const int> idx) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < idx.size(); ++i)
        flat = flat * static_cast<std::size_t>(shape[i]) + static_cast<std::size_t>(idx[i]);
    return flat;
}

std::vector<int> GridDomain::multi_index(std::size_t flat) const {
    std::vector<int> idx(shape.size());
    for (std::size_t i = shape.size(); i-- > 0;) {
        idx[i] = static_cast<int>(flat % static_cast<std::size_t>(shape[i]));
        flat /= static_cast<std::size_t>(shape[i]);
    }
    return idx;
}

std::vector<double> GridDomain::position(std::size_t flat) const {
    const auto idx = multi_index(flat);
    std::vector<double> x(fixed);
    x.resize(static_cast<std::size_t>(ambient_dim), 0.0);
    for (std::size_t i = 0; i < axes.size(); ++i)
        x[static_cast<std::size_t>(axes[i])] = origin[i] + step * idx[i];
    return x;
}

namespace {
GridDomain make_window(int ambient_dim, int grid_dim, const std::vector<double>& lo,
                       const std::vector<double>& hi, double step) {
    if (step <= 0.0) throw DomainError("grid window: step must be positive");
    GridDomain g;
    g.ambient_dim = ambient_dim;
    g.step = step;
    g.fixed.assign(static_cast<std::size_t>(ambient_dim), 0.0);
    for (int a = 0; a < grid_dim; ++a) {
        g.axes.push_back(a);
        g.origin.push_back(lo[static_cast<std::size_t>(a)]);
        const double len = hi[static_cast<std::size_t>(a)] - lo[static_cast<std::size_t>(a)];
        g.shape.push_back(static_cast<int>(std::lround(len / step)) + 1);
        if (g.shape.back() < 2) throw DomainError("grid window: fewer than 2 nodes per axis");
    }
    return g;
}
}  // namespace

GridDomain GridDomain::boundary_window(int ambient_dim, const std::vector<double>& lo,
                                       const std::vector<double>& hi, double step) {
    return make_window(ambient_dim, ambient_dim - 1, lo, hi, step);
}

GridDomain GridDomain::full_window(int ambient_dim, const std::vector<double>& lo,
                                   const std::vector<double>& hi, double step) {
    return make_window(ambient_dim, ambient_dim, lo, hi, step);
}

// ---------------------------------------------------------------------------
// SkeletonDomain

SkeletonDomain SkeletonDomain::build(std::vector<cubical::CubicalCell> cells, int intervals) {
    if (cells.empty()) throw DomainError("skeleton domain: no cells");
    if (intervals < 2 || intervals % 2 != 0)
        throw DomainError("skeleton domain: sample intervals must be even and >= 2");

    SkeletonDomain dom;
    dom.cells = std::move(cells);
    dom.intervals = intervals;
    dom.ambient_dim = dom.cells.front().ambient_dim();
    const double side = dom.cells.front().side;
    dom.step = side / intervals;
    const auto& shift = dom.cells.front().shift;
    const int m = dom.ambient_dim;
    const int q = intervals;

    std::map<std::vector<int>, int> ids;  // coords in units side/(2q)
    for (const auto& cell : dom.cells) {
        if (cell.side != side || cell.shift != shift || cell.ambient_dim() != m)
            throw DomainError("skeleton domain: cells from different cubications");

        std::vector<int> base(static_cast<std::size_t>(m));
        std::vector<int> node_intervals;  // per free axis
        for (int a = 0; a < m; ++a) {
            const auto [lo2, hi2] = cell.axis_span2(a);
            base[static_cast<std::size_t>(a)] = lo2 * q;
            if (cell.is_free(a)) node_intervals.push_back((hi2 - lo2) * q / 2);
        }
        std::vector<int> shape;
        for (int ni : node_intervals) shape.push_back(ni + 1);
        dom.cell_shape.push_back(shape);

        std::size_t local_count = 1;
        for (int s : shape) local_count *= static_cast<std::size_t>(s);
        std::vector<int> node_ids(local_count);

        std::vector<int> idx(shape.size(), 0);
        for (std::size_t flat = 0; flat < local_count; ++flat) {
            std::vector<int> key(base);
            for (std::size_t fa = 0; fa < cell.free_axes.size(); ++fa)
                key[static_cast<std::size_t>(cell.free_axes[fa])] += 2 * idx[fa];
            auto it = ids.find(key);
            int id;
            if (it == ids.end()) {
                id = static_cast<int>(ids.size());
                ids.emplace(key, id);
                for (int a = 0; a < m; ++a) {
                    double x = key[static_cast<std::size_t>(a)] * side / (2.0 * q);
                    if (!shift.empty()) x += shift[static_cast<std::size_t>(a)];
                    dom.node_pos.push_back(x);
                }
                dom.node_on_boundary.push_back(key[static_cast<std::size_t>(m - 1)] == 0 ? 1 : 0);
            } else {
                id = it->second;
            }
            node_ids[flat] = id;

            for (std::size_t a = shape.size(); a-- > 0;) {
                if (++idx[a] < shape[a]) break;
                idx[a] = 0;
            }
        }
        dom.cell_nodes.push_back(std::move(node_ids));
    }
    return dom;
}

// ---------------------------------------------------------------------------
// DiscreteMap

std::size_t DiscreteMap::node_count() const {
    if (grid) return grid->size();
    if (skeleton) return skeleton->size();
    if (complex) return static_cast<std::size_t>(complex->refinement->node_count());
    return 0;
}

std::vector<double> DiscreteMap::node_position(std::size_t node) const {
    if (grid) return grid->position(node);
    if (skeleton) {
        auto s = skeleton->position(node);
        return {s.begin(), s.end()};
    }
    throw DomainError("node_position: domain has no ambient realization");
}

void DiscreteMap::project_all() {
    const std::size_t n = node_count();
    for (std::size_t i = 0; i < n; ++i) {
        if (grid && grid->weight(i) == 0.0) continue;  // masked-out nodes carry no data
        auto v = value(i);
        const double r = euclid_norm(v);
        if (r <= 1e-9) throw SingularProjection("sample too close to the projection singular set");
        for (double& c : v) c /= r;
    }
}

DiscreteMap DiscreteMap::on_grid(std::shared_ptr<const GridDomain> domain, Target target,
                                 const std::function<std::vector<double>(std::span<const double>)>& f) {
    DiscreteMap u;
    u.grid = std::move(domain);
    u.target = target;
    u.value_dim = target.ambient_dim;
    const std::size_t n = u.grid->size();
    u.values.resize(n * static_cast<std::size_t>(u.value_dim));
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = u.grid->position(i);
        const auto v = f(x);
        std::copy(v.begin(), v.end(), u.value(i).begin());
    }
    u.project_all();
    return u;
}

DiscreteMap DiscreteMap::on_skeleton(std::shared_ptr<const SkeletonDomain> domain, Target target,
                                     const std::function<std::vector<double>(std::span<const double>)>& f) {
    DiscreteMap u;
    u.skeleton = std::move(domain);
    u.target = target;
    u.value_dim = target.ambient_dim;
    const std::size_t n = u.skeleton->size();
    u.values.resize(n * static_cast<std::size_t>(u.value_dim));
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = f(u.skeleton->position(i));
        std::copy(v.begin(), v.end(), u.value(i).begin());
    }
    u.project_all();
    return u;
}

DiscreteMap DiscreteMap::on_complex(std::shared_ptr<const ComplexDomain> domain, Target target,
                                    const std::function<std::vector<double>(const simplicial::PointOnComplex&)>& f) {
    DiscreteMap u;
    u.complex = std::move(domain);
    u.target = target;
    u.value_dim = target.ambient_dim;
    const std::size_t n = u.node_count();
    u.values.resize(n * static_cast<std::size_t>(u.value_dim));
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = f(u.complex->refinement->node_point(static_cast<int>(i)));
        std::copy(v.begin(), v.end(), u.value(i).begin());
    }
    u.project_all();
    return u;
}

// ---------------------------------------------------------------------------
// GridField

GridField GridField::sample(GridDomain domain, int value_dim,
                            const std::function<std::vector<double>(std::span<const double>)>& f) {
    GridField g;
    g.domain = std::move(domain);
    g.value_dim = value_dim;
    const std::size_t n = g.domain.size();
    g.values.resize(n * static_cast<std::size_t>(value_dim));
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = f(g.domain.position(i));
        std::copy(v.begin(), v.end(), g.values.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(value_dim)));
    }
    return g;
}

std::vector<double> GridField::eval(std::span<const double> point) const {
    const int g = domain.grid_dim();
    std::vector<double> t(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i)
        t[static_cast<std::size_t>(i)] =
            (point[static_cast<std::size_t>(domain.axes[static_cast<std::size_t>(i)])] -
             domain.origin[static_cast<std::size_t>(i)]) /
            domain.step;

    std::vector<int> cell(static_cast<std::size_t>(g));
    std::vector<double> frac(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        double ti = t[ui];
        cell[ui] = static_cast<int>(std::floor(ti));
        frac[ui] = ti - cell[ui];
    }

    std::vector<double> out(static_cast<std::size_t>(value_dim), 0.0);
    const int corners = 1 << g;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        std::vector<int> idx(static_cast<std::size_t>(g));
        bool outside = false;
        for (int i = 0; i < g; ++i) {
            const std::size_t ui = static_cast<std::size_t>(i);
            const int bit = (c >> i) & 1;
            w *= bit ? frac[ui] : (1.0 - frac[ui]);
            int k = cell[ui] + bit;
            const int n = domain.shape[ui];
            if (k < 0 || k >= n) {
                switch (edge) {
                    case Edge::Zero: outside = true; break;
                    case Edge::Clamp: k = std::clamp(k, 0, n - 1); break;
                    case Edge::Periodic: {
                        const int period = n - 1;  // last node duplicates the first
                        k = ((k % period) + period) % period;
                        break;
                    }
                }
            }
            if (outside) break;
            idx[ui] = k;
        }
        if (outside || w == 0.0) continue;
        const std::size_t flat = domain.flat_index(idx);
        for (int d = 0; d < value_dim; ++d)
            out[static_cast<std::size_t>(d)] +=
                w * values[flat * static_cast<std::size_t>(value_dim) + static_cast<std::size_t>(d)];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Energies

namespace {

// integrand |grad|^p at every lattice node of one cell, trapezoid-weighted
void accumulate_lattice_energy(const std::vector<int>& shape, double h, double p,
                               const std::function<std::span<const double>(std::size_t)>& value_at,
                               const std::function<double(std::size_t)>& extra_weight,
                               int value_dim, std::vector<double>& terms) {
    const std::size_t naxes = shape.size();
    std::size_t count = 1;
    for (int s : shape) count *= static_cast<std::size_t>(s);
    std::vector<std::size_t> stride(naxes, 1);
    for (std::size_t a = naxes; a-- > 1;)
        stride[a - 1] = stride[a] * static_cast<std::size_t>(shape[a]);

    std::vector<int> idx(naxes, 0);
    for (std::size_t flat = 0; flat < count; ++flat) {
        double g2 = 0.0;
        for (std::size_t a = 0; a < naxes; ++a) {
            const int n = shape[a];
            std::size_t up = flat, dn = flat;
            double denom;
            if (idx[a] == 0) {
                up = flat + stride[a];
                denom = h;
            } else if (idx[a] == n - 1) {
                dn = flat - stride[a];
                denom = h;
            } else {
                up = flat + stride[a];
                dn = flat - stride[a];
                denom = 2.0 * h;
            }
            const auto vu = value_at(up);
            const auto vd = value_at(dn);
            for (int d = 0; d < value_dim; ++d) {
                const double der = (vu[static_cast<std::size_t>(d)] - vd[static_cast<std::size_t>(d)]) / denom;
                g2 += der * der;
            }
        }
        double w = extra_weight(flat);
        if (w != 0.0) {
            for (std::size_t a = 0; a < naxes; ++a) {
                const bool edge = idx[a] == 0 || idx[a] == shape[a] - 1;
                w *= edge ? 0.5 * h : h;
            }
            terms.push_back(w * std::pow(g2, 0.5 * p));
        }

        for (std::size_t a = naxes; a-- > 0;) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
}

}  // namespace

EnergyReport energy_p(const DiscreteMap& u, double p) {
    if (p <= 1.0) throw DomainError("energy_p: p must exceed 1");
    EnergyReport report;
    report.p = p;

    std::vector<double> terms;
    if (u.skeleton) {
        const auto& dom = *u.skeleton;
        report.step = dom.step;
        report.domain_family = "skeleton";
        report.cell_count = dom.cells.size();
        for (std::size_t c = 0; c < dom.cells.size(); ++c) {
            if (dom.cells[c].dim == 0) continue;
            for (int s : dom.cell_shape[c])
                if (s < 2) throw DomainError("energy_p: fewer than 2 samples per cell axis");
            const auto& nodes = dom.cell_nodes[c];
            accumulate_lattice_energy(
                dom.cell_shape[c], dom.step, p,
                [&](std::size_t local) { return u.value(static_cast<std::size_t>(nodes[local])); },
                [](std::size_t) { return 1.0; }, u.value_dim, terms);
        }
    } else if (u.grid) {
        const auto& dom = *u.grid;
        report.step = dom.step;
        report.domain_family = "grid";
        report.cell_count = 1;
        for (int s : dom.shape)
            if (s < 2) throw DomainError("energy_p: fewer than 2 samples per cell axis");
        accumulate_lattice_energy(
            dom.shape, dom.step, p, [&](std::size_t flat) { return u.value(flat); },
            [&](std::size_t flat) { return dom.weight(flat); }, u.value_dim, terms);
    } else if (u.complex) {
        const auto& ref = *u.complex->refinement;
        report.step = 1.0 / ref.subdivisions();
        report.domain_family = "complex";
        report.cell_count = ref.cells().size();
        const int d = ref.complex().dim;
        for (const auto& cell : ref.cells()) {
            double g2 = 0.0;
            if (d == 1) {
                const auto a = u.value(static_cast<std::size_t>(cell.nodes[0]));
                const auto b = u.value(static_cast<std::size_t>(cell.nodes[1]));
                const double len = cell.measure;
                for (int k = 0; k < u.value_dim; ++k) {
                    const double der = (b[static_cast<std::size_t>(k)] - a[static_cast<std::size_t>(k)]) / len;
                    g2 += der * der;
                }
            } else {
                // affine differential of the cell: D = U * P^{-1}
                const double p00 = cell.node_pos[2] - cell.node_pos[0];
                const double p10 = cell.node_pos[3] - cell.node_pos[1];
                const double p01 = cell.node_pos[4] - cell.node_pos[0];
                const double p11 = cell.node_pos[5] - cell.node_pos[1];
                const double det = p00 * p11 - p01 * p10;
                const auto v0 = u.value(static_cast<std::size_t>(cell.nodes[0]));
                const auto v1 = u.value(static_cast<std::size_t>(cell.nodes[1]));
                const auto v2 = u.value(static_cast<std::size_t>(cell.nodes[2]));
                for (int k = 0; k < u.value_dim; ++k) {
                    const std::size_t uk = static_cast<std::size_t>(k);
                    const double a = v1[uk] - v0[uk];
                    const double b = v2[uk] - v0[uk];
                    const double dx = (a * p11 - b * p10) / det;
                    const double dy = (b * p00 - a * p01) / det;
                    g2 += dx * dx + dy * dy;
                }
            }
            terms.push_back(cell.measure * std::pow(g2, 0.5 * p));
        }
    } else {
        throw DomainError("energy_p: map has no domain");
    }
    report.value = pairwise_sum(terms);
    return report;
}

GagliardoReport gagliardo_seminorm(const DiscreteMap& u, double s, double p, double band) {
    if (!u.grid) throw DomainError("gagliardo_seminorm: expects a boundary grid domain");
    if (s <= 0.0 || s >= 1.0) throw DomainError("gagliardo_seminorm: s must lie in (0,1)");
    const auto& dom = *u.grid;
    const int g = dom.grid_dim();
    const double cutoff = band > 0.0 ? band : dom.step;
    const double expo = g + s * p;
    const std::size_t n = dom.size();

    std::vector<std::vector<double>> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = dom.position(i);
    const double node_vol = std::pow(dom.step, g);

    std::vector<double> row_sums(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        if (dom.weight(i) == 0.0) return;
        std::vector<double> terms;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dom.weight(j) == 0.0) continue;
            const double r2 = dist2(pos[i], pos[j]);
            if (r2 < cutoff * cutoff) continue;
            double dv = 0.0;
            const auto vi = u.value(i);
            const auto vj = u.value(j);
            for (int d = 0; d < u.value_dim; ++d) {
                const double dd = vi[static_cast<std::size_t>(d)] - vj[static_cast<std::size_t>(d)];
                dv += dd * dd;
            }
            terms.push_back(std::pow(dv, 0.5 * p) / std::pow(r2, 0.5 * expo) * dom.weight(i) *
                            dom.weight(j));
        }
        row_sums[i] = pairwise_sum(terms);
    });

    GagliardoReport report;
    report.value = 2.0 * node_vol * node_vol * pairwise_sum(row_sums);
    report.warn_nonintegrable = (s * p >= static_cast<double>(g));
    return report;
}

GagliardoReport gagliardo_with_refinement(
    const GridDomain& base, Target target,
    const std::function<std::vector<double>(std::span<const double>)>& f, double s, double p) {
    auto coarse = DiscreteMap::on_grid(std::make_shared<GridDomain>(base), target, f);
    GridDomain fine = base;
    fine.step = base.step / 2.0;
    fine.node_weight.clear();
    for (auto& sh : fine.shape) sh = 2 * (sh - 1) + 1;
    if (!base.node_weight.empty())
        throw DomainError("gagliardo_with_refinement: masked windows are not supported");
    auto refined = DiscreteMap::on_grid(std::make_shared<GridDomain>(fine), target, f);

    // the diagonal band stays at the coarse step so refinement probes the
    // quadrature, not the regularization
    GagliardoReport report = gagliardo_seminorm(coarse, s, p, base.step);
    const GagliardoReport fine_report = gagliardo_seminorm(refined, s, p, base.step);
    report.value_refined = fine_report.value;
    report.relative_drift =
        std::abs(report.value_refined - report.value) / std::max(std::abs(report.value_refined), 1e-300);
    return report;
}

BmoReport bmo_seminorm(const DiscreteMap& u, const std::vector<double>& rho_grid) {
    if (!u.complex) throw DomainError("bmo_seminorm: expects a simplicial refinement domain");
    if (rho_grid.empty()) throw DomainError("bmo_seminorm: empty rho grid");
    const auto& ref = *u.complex->refinement;
    const std::size_t n = static_cast<std::size_t>(ref.node_count());

    // node measures: each cell spreads its measure uniformly over its vertices
    std::vector<double> node_measure(n, 0.0);
    for (const auto& cell : ref.cells())
        for (int v : cell.nodes)
            node_measure[static_cast<std::size_t>(v)] += cell.measure / static_cast<double>(cell.nodes.size());

    const double rho_min = *std::min_element(rho_grid.begin(), rho_grid.end());
    BmoReport report;
    for (std::size_t a = 0; a < n; ++a) {
        const auto dist = ref.distances_from(static_cast<int>(a));
        for (double rho : rho_grid) {
            std::vector<int> ball;
            double mass = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (dist[i] <= rho && node_measure[i] > 0.0) {
                    ball.push_back(static_cast<int>(i));
                    mass += node_measure[i];
                }
            if (ball.size() < 2 || mass <= 0.0) continue;
            std::vector<double> terms;
            for (std::size_t ii = 0; ii < ball.size(); ++ii)
                for (std::size_t jj = ii + 1; jj < ball.size(); ++jj) {
                    const auto vi = u.value(static_cast<std::size_t>(ball[ii]));
                    const auto vj = u.value(static_cast<std::size_t>(ball[jj]));
                    double dv = 0.0;
                    for (int d = 0; d < u.value_dim; ++d) {
                        const double dd = vi[static_cast<std::size_t>(d)] - vj[static_cast<std::size_t>(d)];
                        dv += dd * dd;
                    }
                    terms.push_back(2.0 * std::sqrt(dv) * node_measure[static_cast<std::size_t>(ball[ii])] *
                                    node_measure[static_cast<std::size_t>(ball[jj])]);
                }
            const double osc = pairwise_sum(terms) / (mass * mass);
            report.value = std::max(report.value, osc);
            if (rho == rho_min) report.small_rho_tail = std::max(report.small_rho_tail, osc);
        }
    }
    return report;
}

int winding_number(const std::vector<std::vector<double>>& loop_samples) {
    if (loop_samples.size() < 3) throw DomainError("winding_number: need at least 3 samples");
    double total = 0.0;
    const std::size_t n = loop_samples.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = loop_samples[i];
        const auto& b = loop_samples[(i + 1) % n];
        const double cross = a[0] * b[1] - a[1] * b[0];
        const double dot = a[0] * b[0] + a[1] * b[1];
        const double inc = std::atan2(cross, dot);
        if (std::abs(inc) >= M_PI - 0.1)
            throw UndersampledLoop("winding_number: angle increment too large between samples");
        total += inc;
    }
    return static_cast<int>(std::lround(total / (2.0 * M_PI)));
}

}  // namespace halftrace::fields
