#include "halftrace/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "halftrace/density.hpp"
#include "halftrace/errors.hpp"
#include "halftrace/numerics.hpp"
#include "halftrace/rng.hpp"

namespace halftrace::experiments {

void ExperimentConfig::validate() const {
    if (m < 2) throw ConfigError("config: ambient dimension must be >= 2");
    if (p <= 1.0 || p >= m) throw ConfigError("config: requires 1 < p < m");
    if (lambda <= 1.0) throw ConfigError("config: lambda must exceed 1");
    if (kappas.empty()) throw ConfigError("config: empty kappa list");
    for (std::size_t i = 1; i < kappas.size(); ++i)
        if (kappas[i] >= kappas[i - 1]) throw ConfigError("config: kappa list must decrease strictly");
    if (static_cast<int>(window_lo.size()) != m || static_cast<int>(window_hi.size()) != m)
        throw ConfigError("config: window dimension mismatch");
    for (int i = 0; i < m; ++i)
        if (window_lo[static_cast<std::size_t>(i)] >= window_hi[static_cast<std::size_t>(i)])
            throw ConfigError("config: empty window");
    if (h_per_axis < 1) throw ConfigError("config: h lattice needs at least 1 point per axis");
    if (skeleton_intervals < 2 || skeleton_intervals % 2 != 0)
        throw ConfigError("config: skeleton_intervals must be even and >= 2");
    if (boundary_kind != "constant" && boundary_kind != "linear" && boundary_kind != "vortex" &&
        boundary_kind != "from-file")
        throw ConfigError("config: unknown boundary kind " + boundary_kind);
    if (boundary_kind == "vortex" && m < 3) throw ConfigError("config: vortex datum needs m >= 3");
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("scenario", cfg.scenario);
    get("m", cfg.m);
    get("p", cfg.p);
    get("lambda", cfg.lambda);
    get("theta", cfg.theta);
    get("kappas", cfg.kappas);
    get("window_lo", cfg.window_lo);
    get("window_hi", cfg.window_hi);
    get("skeleton_intervals", cfg.skeleton_intervals);
    get("grid_step", cfg.grid_step);
    get("h_per_axis", cfg.h_per_axis);
    get("seed", cfg.seed);
    get("out_dir", cfg.out_dir);
    get("boundary_kind", cfg.boundary_kind);
    get("vortex_degree", cfg.vortex_degree);
    get("linear_frequency", cfg.linear_frequency);
    get("boundary_file", cfg.boundary_file);
    cfg.validate();
    return cfg;
}

nlohmann::json ExperimentConfig::to_json() const {
    return nlohmann::json{{"scenario", scenario},
                          {"m", m},
                          {"p", p},
                          {"lambda", lambda},
                          {"theta", theta},
                          {"kappas", kappas},
                          {"window_lo", window_lo},
                          {"window_hi", window_hi},
                          {"skeleton_intervals", skeleton_intervals},
                          {"grid_step", grid_step},
                          {"h_per_axis", h_per_axis},
                          {"seed", seed},
                          {"out_dir", out_dir},
                          {"boundary_kind", boundary_kind},
                          {"vortex_degree", vortex_degree},
                          {"linear_frequency", linear_frequency},
                          {"boundary_file", boundary_file}};
}

std::function<std::vector<double>(std::span<const double>)> boundary_datum(
    const ExperimentConfig& cfg) {
    if (cfg.boundary_kind == "constant") {
        return [](std::span<const double>) { return std::vector<double>{1.0, 0.0}; };
    }
    if (cfg.boundary_kind == "linear") {
        const double freq = cfg.linear_frequency;
        return [freq](std::span<const double> x) {
            const double phase = 2.0 * M_PI * freq * x[0];
            return std::vector<double>{std::cos(phase), std::sin(phase)};
        };
    }
    if (cfg.boundary_kind == "vortex") {
        const int degree = cfg.vortex_degree;
        return [degree](std::span<const double> x) {
            const double r = std::hypot(x[0], x[1]);
            if (r < 1e-12) return std::vector<double>{1.0, 0.0};  // defined everywhere
            const double phase = degree * std::atan2(x[1], x[0]);
            return std::vector<double>{std::cos(phase), std::sin(phase)};
        };
    }
    if (cfg.boundary_kind == "from-file") {
        auto map = std::make_shared<fields::DiscreteMap>(fields::load_map(cfg.boundary_file));
        if (!map->grid) throw ConfigError("boundary file must hold a grid map");
        auto field = std::make_shared<fields::GridField>();
        field->domain = *map->grid;
        field->value_dim = map->value_dim;
        field->values = map->values;
        field->edge = fields::GridField::Edge::Clamp;
        return [field](std::span<const double> x) {
            auto v = field->eval(x);
            const double n = euclid_norm(v);
            if (n <= 1e-9) return std::vector<double>{1.0, 0.0};
            for (double& c : v) c /= n;
            return v;
        };
    }
    throw ConfigError("unknown boundary kind");
}

cubical::Cubication make_cubication(const ExperimentConfig& cfg, double kappa,
                                    const std::vector<double>& h) {
    cubical::Cubication cub;
    cub.kappa = kappa;
    cub.ambient_dim = cfg.m;
    cub.shift = h;
    cub.shift.resize(static_cast<std::size_t>(cfg.m), 0.0);
    cub.window.lo.resize(static_cast<std::size_t>(cfg.m));
    cub.window.hi.resize(static_cast<std::size_t>(cfg.m));
    for (int i = 0; i < cfg.m; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        // anchors of cubes overlapping the physical box, one extra ring for
        // retraction coverage
        int lo = static_cast<int>(std::ceil(cfg.window_lo[ui] / kappa - 0.5 - 1e-9)) - 1;
        int hi = static_cast<int>(std::floor(cfg.window_hi[ui] / kappa + 0.5 + 1e-9)) + 1;
        if (i == cfg.m - 1) lo = 0;
        cub.window.lo[ui] = lo;
        cub.window.hi[ui] = std::max(hi, lo);
    }
    return cub;
}

namespace {

std::vector<std::vector<double>> shift_lattice(const ExperimentConfig& cfg, double kappa) {
    const int g = cfg.m - 1;
    const int n = cfg.h_per_axis;
    std::vector<std::vector<double>> out;
    std::vector<int> it(static_cast<std::size_t>(g), 0);
    while (true) {
        std::vector<double> h(static_cast<std::size_t>(cfg.m), 0.0);
        for (int a = 0; a < g; ++a)
            h[static_cast<std::size_t>(a)] = (it[static_cast<std::size_t>(a)] + 0.5) * kappa / n;
        out.push_back(h);
        int axis = g - 1;
        while (axis >= 0) {
            if (++it[static_cast<std::size_t>(axis)] < n) break;
            it[static_cast<std::size_t>(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return out;
}

extension::MinimizeResult minimize_at(const ExperimentConfig& cfg, double kappa,
                                      const std::vector<double>& h, std::uint64_t run_seed) {
    const auto u = boundary_datum(cfg);
    const auto cub = make_cubication(cfg, kappa, h);
    const int lp1 = static_cast<int>(std::floor(cfg.p - 1.0));
    auto bcells = cubical::enumerate_skeleton(cub, lp1, cubical::SkeletonFamily::Zero);
    auto bdom = std::make_shared<fields::SkeletonDomain>(
        fields::SkeletonDomain::build(std::move(bcells), cfg.skeleton_intervals));
    auto bdata = fields::DiscreteMap::on_skeleton(bdom, fields::Target{2, 0.5}, u);

    extension::MinimizerConfig mc;
    mc.p = cfg.p;
    mc.seed = run_seed;
    mc.max_iterations = 4000;
    mc.tolerance = 1e-8;
    return extension::minimize_extension(bdata, cub, mc, cfg.skeleton_intervals);
}

}  // namespace

ScanResult condition_iii_scan(const ExperimentConfig& cfg) {
    cfg.validate();
    ScanResult result;
    result.config = cfg;
    result.kappas = cfg.kappas;
    const int lp = static_cast<int>(std::floor(cfg.p));
    CounterRng rng(cfg.seed);

    for (std::size_t ki = 0; ki < cfg.kappas.size(); ++ki) {
        const double kappa = cfg.kappas[ki];
        const auto shifts = shift_lattice(cfg, kappa);
        std::size_t admissible = 0;
        for (std::size_t hj = 0; hj < shifts.size(); ++hj) {
            ScanEntry entry;
            entry.kappa = kappa;
            entry.h.assign(shifts[hj].begin(), shifts[hj].end() - 1);
            try {
                const auto res = minimize_at(cfg, kappa, shifts[hj], rng.word(ki * 4096 + hj));
                entry.raw_energy = res.energy.value;
                entry.normalized_energy = std::pow(kappa, cfg.m - lp) * res.energy.value;
                entry.iterations = res.iterations;
                entry.converged = res.converged;
            } catch (const std::exception&) {
                entry.raw_energy = std::numeric_limits<double>::infinity();
                entry.normalized_energy = entry.raw_energy;
                entry.converged = false;
            }
            if (entry.normalized_energy <= cfg.theta) ++admissible;
            result.entries.push_back(std::move(entry));
        }
        result.admissible_fraction.push_back(static_cast<double>(admissible) /
                                             static_cast<double>(shifts.size()));
    }

    const std::size_t tail = std::min<std::size_t>(3, result.admissible_fraction.size());
    double liminf = 1.0;
    for (std::size_t i = result.admissible_fraction.size() - tail;
         i < result.admissible_fraction.size(); ++i)
        liminf = std::min(liminf, result.admissible_fraction[i]);
    result.liminf_estimate = liminf;
    return result;
}

double trace_mismatch(const std::function<std::vector<double>(std::span<const double>)>& u,
                      const ExperimentConfig& cfg, double kappa, const std::vector<double>& h,
                      double step) {
    const int lp = static_cast<int>(std::floor(cfg.p));
    const double eps = kappa * 1e-9;
    std::vector<double> lo(cfg.window_lo.begin(), cfg.window_lo.end() - 1);
    std::vector<double> hi(cfg.window_hi.begin(), cfg.window_hi.end() - 1);
    for (std::size_t i = 0; i < lo.size(); ++i) {
        lo[i] += kappa;  // inset so retracted points stay in the covered region
        hi[i] -= kappa;
    }
    auto grid = fields::GridDomain::boundary_window(cfg.m, lo, hi, step);
    const std::size_t n = grid.size();
    std::vector<double> terms;
    terms.reserve(n);
    std::vector<double> shift(h);
    shift.resize(static_cast<std::size_t>(cfg.m), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = grid.position(i);
        std::vector<double> y;
        try {
            y = extension::retract_to_skeleton(x, kappa, lp, shift, eps);
        } catch (const SingularPoint&) {
            std::vector<double> xj(x);
            for (double& c : xj) c += eps;
            y = extension::retract_to_skeleton(xj, kappa, lp, shift, eps);
        }
        const auto ux = u(x);
        const auto uy = u(y);
        double d2 = 0.0;
        for (std::size_t d = 0; d < ux.size(); ++d) {
            const double dd = ux[d] - uy[d];
            d2 += dd * dd;
        }
        terms.push_back(std::pow(d2, 0.5 * cfg.p) * std::pow(step, cfg.m - 1));
    }
    return pairwise_sum(terms);
}

ReconstructResult reconstruct_from_scan(const ScanResult& scan, const ExperimentConfig& cfg) {
    const double kappa = cfg.kappas.back();
    const std::size_t ki = cfg.kappas.size() - 1;
    const auto shifts = shift_lattice(cfg, kappa);

    // admissible shifts at the smallest kappa
    std::vector<std::size_t> admissible;
    std::size_t base = 0;
    for (std::size_t i = 0; i + 1 < cfg.kappas.size(); ++i) base += shift_lattice(cfg, cfg.kappas[i]).size();
    for (std::size_t hj = 0; hj < shifts.size(); ++hj) {
        // a minimizer output is a valid certificate whether or not it
        // converged: its energy upper-bounds the infimum
        const auto& e = scan.entries[base + hj];
        if (std::isfinite(e.normalized_energy) && e.normalized_energy <= cfg.theta)
            admissible.push_back(hj);
    }
    if (admissible.empty())
        throw NoAdmissibleShift("reconstruct_from_scan: no admissible shift at the smallest kappa");

    // good-translation selection among the admissible shifts
    const auto u = boundary_datum(cfg);
    const double step = cfg.grid_step > 0.0 ? cfg.grid_step : kappa / 8.0;
    std::size_t best = admissible.front();
    double best_mismatch = std::numeric_limits<double>::infinity();
    for (std::size_t hj : admissible) {
        const double J = trace_mismatch(u, cfg, kappa, shifts[hj], step);
        if (J < best_mismatch) {
            best_mismatch = J;
            best = hj;
        }
    }

    CounterRng rng(cfg.seed);
    const auto minres = minimize_at(cfg, kappa, shifts[best], rng.word(ki * 4096 + best));
    const auto cub = make_cubication(cfg, kappa, shifts[best]);

    ReconstructResult out;
    out.chosen_kappa = kappa;
    out.chosen_h.assign(shifts[best].begin(), shifts[best].end() - 1);

    std::vector<double> lo(cfg.window_lo), hi(cfg.window_hi);
    for (std::size_t i = 0; i + 1 < lo.size(); ++i) {
        lo[i] += kappa;
        hi[i] -= kappa;
    }
    hi.back() = std::min(hi.back(), cfg.window_hi.back() - kappa);
    auto hom = extension::homogeneous_extension(minres.v, cub, cfg.p, lo, hi, step);
    out.extension = std::move(hom.extended);
    out.energy = hom.energy;
    out.energy_bound = extension::chain_constant(cfg.m, cfg.p) * cfg.theta * 1.05;
    out.energy_within_bound = out.energy.value <= out.energy_bound;

    // near-boundary L^p mismatch against the datum at depths kappa/4 and kappa/8
    fields::GridField ufield;
    ufield.domain = *out.extension.grid;
    ufield.value_dim = out.extension.value_dim;
    ufield.values = out.extension.values;
    ufield.edge = fields::GridField::Edge::Clamp;

    std::vector<double> blo(lo.begin(), lo.end() - 1), bhi(hi.begin(), hi.end() - 1);
    for (std::size_t i = 0; i < blo.size(); ++i) {
        blo[i] += kappa;
        bhi[i] -= kappa;
    }
    auto bgrid = fields::GridDomain::boundary_window(cfg.m, blo, bhi, step);
    for (double depth : {kappa / 4.0, kappa / 8.0}) {
        std::vector<double> terms;
        for (std::size_t i = 0; i < bgrid.size(); ++i) {
            auto x = bgrid.position(i);
            const auto ux = u(x);
            x[static_cast<std::size_t>(cfg.m - 1)] = depth;
            const auto Ux = ufield.eval(x);
            double d2 = 0.0;
            for (std::size_t d = 0; d < ux.size(); ++d) {
                const double dd = ux[d] - Ux[d];
                d2 += dd * dd;
            }
            terms.push_back(std::pow(d2, 0.5 * cfg.p) * std::pow(step, cfg.m - 1));
        }
        out.trace_depths.push_back(depth);
        out.trace_errors.push_back(std::pow(pairwise_sum(terms), 1.0 / cfg.p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Verification suites

namespace {

// random low-order trigonometric angle field -> S^1 values
std::function<std::vector<double>(std::span<const double>)> random_circle_field(
    const CounterRng& rng, std::uint64_t stream, int dims, double amplitude) {
    struct Harmonic {
        std::vector<double> wave;
        double amp, phase;
    };
    auto harmonics = std::make_shared<std::vector<Harmonic>>();
    CounterRng local = rng.stream(stream);
    std::uint64_t ctr = 0;
    for (int k = 0; k < 3; ++k) {
        Harmonic h;
        for (int d = 0; d < dims; ++d)
            h.wave.push_back(std::floor(local.uniform(ctr++) * 3.0) - 1.0);
        h.amp = amplitude * (0.3 + 0.7 * local.uniform(ctr++));
        h.phase = 2.0 * M_PI * local.uniform(ctr++);
        harmonics->push_back(std::move(h));
    }
    return [harmonics, dims](std::span<const double> x) {
        double angle = 0.0;
        for (const auto& h : *harmonics) {
            double arg = h.phase;
            for (int d = 0; d < dims && d < static_cast<int>(x.size()); ++d)
                arg += M_PI * h.wave[static_cast<std::size_t>(d)] * x[static_cast<std::size_t>(d)];
            angle += h.amp * std::cos(arg);
        }
        return std::vector<double>{std::cos(angle), std::sin(angle)};
    };
}

VerifyReport verify_pyramid(std::uint64_t seed) {
    VerifyReport report{"pyramid", {}, true};
    CounterRng rng(seed);
    const std::vector<std::pair<int, double>> combos = {
        {2, 1.2}, {2, 1.5}, {3, 1.2}, {3, 1.5}, {3, 2.5}};
    int instance = 0;
    for (const auto& [ell, p] : combos) {
        for (int rep = 0; rep < 4; ++rep, ++instance) {
            const double kappa = 1.0;
            const int base_dim = ell - 1;
            std::vector<double> lo(static_cast<std::size_t>(base_dim), -kappa);
            std::vector<double> hi(static_cast<std::size_t>(base_dim), kappa);
            const double step = (ell == 2) ? kappa / 16.0 : kappa / 8.0;
            auto grid = std::make_shared<fields::GridDomain>(
                fields::GridDomain::full_window(base_dim, lo, hi, step));
            auto f = fields::DiscreteMap::on_grid(
                grid, fields::Target{2, 0.5},
                random_circle_field(rng, static_cast<std::uint64_t>(instance), base_dim, 1.0));
            const auto res = extension::pyramid_extend(f, kappa, p);
            VerifyInstance inst;
            inst.lhs = res.energy.value;
            inst.rhs = res.bound * 1.05;
            inst.margin = inst.rhs - inst.lhs;
            inst.note = "ell=" + std::to_string(ell) + " p=" + std::to_string(p);
            report.pass = report.pass && inst.margin >= 0.0;
            report.instances.push_back(std::move(inst));
        }
    }
    return report;
}

VerifyReport verify_chain(std::uint64_t seed) {
    VerifyReport report{"chain", {}, true};
    CounterRng rng(seed);
    const std::vector<std::pair<int, double>> combos = {
        {2, 1.2}, {2, 1.5}, {3, 1.2}, {3, 1.5}, {3, 2.5}};
    int instance = 0;
    for (const auto& [ell, p] : combos) {
        for (int rep = 0; rep < 4; ++rep, ++instance) {
            // one full cube away from the boundary hyperplane, enumerated with
            // a one-cube margin so all of its faces are in range
            cubical::Cubication cub;
            cub.kappa = 1.0;
            cub.ambient_dim = ell;
            cub.shift.assign(static_cast<std::size_t>(ell), 0.0);
            cub.window.lo.assign(static_cast<std::size_t>(ell), -1);
            cub.window.hi.assign(static_cast<std::size_t>(ell), 1);
            cub.window.lo.back() = 1;
            cub.window.hi.back() = 3;

            cubical::CubicalCell cube;
            for (const auto& c : cubical::enumerate_skeleton(cub, ell, cubical::SkeletonFamily::Plus)) {
                bool central = true;
                for (int a = 0; a + 1 < ell; ++a)
                    if (c.anchor[static_cast<std::size_t>(a)] != 0) central = false;
                if (central && c.anchor.back() == 2) cube = c;
            }
            std::vector<cubical::CubicalCell> kept;
            for (const auto& c :
                 cubical::enumerate_skeleton(cub, ell - 1, cubical::SkeletonFamily::Plus)) {
                bool inside = true;
                for (int a = 0; a < ell; ++a) {
                    const auto [clo, chi] = c.axis_span2(a);
                    const auto [qlo, qhi] = cube.axis_span2(a);
                    if (clo < qlo || chi > qhi) inside = false;
                }
                if (inside) kept.push_back(c);
            }
            std::vector<cubical::CubicalCell> target{cube};

            auto vdom = std::make_shared<fields::SkeletonDomain>(
                fields::SkeletonDomain::build(std::move(kept), 8));
            auto v = fields::DiscreteMap::on_skeleton(
                vdom, fields::Target{2, 0.5},
                random_circle_field(rng, static_cast<std::uint64_t>(instance) + 512, ell, 1.0));
            const auto res = extension::extend_one_dimension(v, cub, p, &target);
            VerifyInstance inst;
            inst.lhs = res.energy.value;
            inst.rhs = res.bound * 1.05;
            inst.margin = inst.rhs - inst.lhs;
            inst.note = "ell=" + std::to_string(ell) + " p=" + std::to_string(p);
            report.pass = report.pass && inst.margin >= 0.0;
            report.instances.push_back(std::move(inst));
        }
    }
    return report;
}

VerifyReport verify_integration_lemma(std::uint64_t seed) {
    VerifyReport report{"integration_lemma", {}, true};
    CounterRng rng(seed);
    const double lambda = 2.0;
    for (int instance = 0; instance < 10; ++instance) {
        CounterRng local = rng.stream(static_cast<std::uint64_t>(instance) + 1024);
        std::uint64_t ctr = 0;

        simplicial::SimplicialComplex complex;
        complex.dim = 2;
        complex.vertex_count = 3;
        complex.top = {{0, 1, 2}};
        simplicial::Subcomplex sub;
        sub.dim = 1;
        sub.marked = {{0, 1}};

        simplicial::PLMap sigma;
        sigma.domain = &complex;
        sigma.maps_sub_to_boundary = true;
        sigma.maps_into_upper = true;
        sigma.vertex_images = {
            {local.uniform(ctr++, -1.0, 1.0), 0.0},
            {local.uniform(ctr++, -1.0, 1.0), 0.0},
            {local.uniform(ctr++, -1.0, 1.0), local.uniform(ctr++, 0.3, 1.0)}};
        sigma.check_flags(sub);

        const double lip = simplicial::lipschitz_constant(sigma);
        auto cap = density::CapSampler::for_map(lip, lambda, 2000,
                                                local.word(777));
        simplicial::Refinement ref(complex, 12);

        // nonnegative random bump field on an upper half-plane window
        const double a0 = local.uniform(ctr++, 0.2, 0.8);
        const double a1 = local.uniform(ctr++, 0.0, 0.8);
        const double w1 = std::floor(local.uniform(ctr++) * 2.0) + 1.0;
        auto W = fields::GridField::sample(
            fields::GridDomain::full_window(2, {-4.0, 0.0}, {4.0, 4.0}, 0.125), 1,
            [&](std::span<const double> x) {
                const double v = a0 + a1 * std::sin(w1 * x[0]) * std::cos(w1 * x[1]);
                return std::vector<double>{v * v};
            });

        const auto shift = density::good_shift(W, sigma, sub, ref, lambda, cap);
        const double gamma_val =
            simplicial::gamma(ref, sub, lambda, simplicial::default_delta_grid(ref.diameter()));
        const double rhs = density::integration_lemma_rhs(W, sigma, sub, ref, lambda, cap.eta,
                                                          cap.rho, gamma_val);
        VerifyInstance inst;
        inst.lhs = shift.mean * shift.cap_volume;
        inst.rhs = rhs + 3.0 * shift.stderr_mean * shift.cap_volume;
        inst.margin = inst.rhs - inst.lhs;
        inst.note = "lip=" + std::to_string(lip);
        report.pass = report.pass && inst.margin >= 0.0;
        report.instances.push_back(std::move(inst));
    }
    return report;
}

VerifyReport verify_translation_lemma(std::uint64_t seed) {
    VerifyReport report{"translation_lemma", {}, true};
    CounterRng rng(seed);
    const std::vector<double> kappas = {0.25, 0.2, 0.5, 0.125, 0.25};
    for (int instance = 0; instance < 5; ++instance) {
        CounterRng local = rng.stream(static_cast<std::uint64_t>(instance) + 2048);
        std::uint64_t ctr = 0;
        const double kappa = kappas[static_cast<std::size_t>(instance)];
        const double amplitude = local.uniform(ctr++, 0.02, 0.1);
        const int wave = 1 + static_cast<int>(std::floor(local.uniform(ctr++) * 3.0));

        auto f = fields::GridField::sample(
            fields::GridDomain::boundary_window(2, {0.0}, {1.0}, 1.0 / 512.0), 2,
            [&](std::span<const double> x) {
                const double phase = 2.0 * M_PI * wave * x[0];
                return std::vector<double>{std::cos(phase), std::sin(phase)};
            });
        f.edge = fields::GridField::Edge::Periodic;

        auto psi = [amplitude, kappa](std::span<const double> x) {
            return std::vector<double>{amplitude * std::sin(2.0 * M_PI * x[0] / kappa)};
        };
        const auto res = density::good_translation(f, psi, kappa, 2.0, 64, 129);
        VerifyInstance inst;
        inst.lhs = res.mean_over_h;
        inst.rhs = res.sup_bound * 1.05;
        inst.margin = inst.rhs - inst.lhs;
        inst.note = "kappa=" + std::to_string(kappa);
        report.pass = report.pass && inst.margin >= 0.0;
        report.instances.push_back(std::move(inst));
    }
    return report;
}

VerifyReport verify_kernel_mass(std::uint64_t seed) {
    VerifyReport report{"kernel_mass", {}, true};
    CounterRng rng(seed);
    for (int instance = 0; instance < 5; ++instance) {
        const std::vector<double> x = {rng.uniform(static_cast<std::uint64_t>(2 * instance), -1.0, 1.0),
                                       rng.uniform(static_cast<std::uint64_t>(2 * instance + 1), 0.2, 1.0)};
        const double integral = density::trace_kernel_boundary_integral_2d(x);
        VerifyInstance inst;
        inst.lhs = std::abs(integral - M_PI);
        inst.rhs = 1e-3;
        inst.margin = inst.rhs - inst.lhs;
        inst.note = "x=(" + std::to_string(x[0]) + "," + std::to_string(x[1]) + ")";
        report.pass = report.pass && inst.margin >= 0.0;
        report.instances.push_back(std::move(inst));
    }
    return report;
}

VerifyReport verify_gamma_oracle(std::uint64_t) {
    VerifyReport report{"gamma_oracle", {}, true};
    for (double lambda : {1.5, 2.0, 4.0}) {
        {
            simplicial::SimplicialComplex segment;
            segment.dim = 1;
            segment.vertex_count = 2;
            segment.top = {{0, 1}};
            simplicial::Subcomplex sub;
            sub.dim = 0;
            sub.marked = {{0}};
            const double got = simplicial::gamma(segment, sub, {lambda, {}, 16});
            VerifyInstance inst;
            inst.lhs = got;
            inst.rhs = lambda;
            inst.margin = 1e-9 - std::abs(got - lambda);
            inst.note = "unit segment, lambda=" + std::to_string(lambda);
            report.pass = report.pass && inst.margin >= 0.0;
            report.instances.push_back(std::move(inst));
        }
        {
            simplicial::SimplicialComplex star;
            star.dim = 1;
            star.vertex_count = 3;
            star.top = {{0, 1}, {0, 2}};
            simplicial::Subcomplex sub;
            sub.dim = 0;
            sub.marked = {{0}};
            const double got = simplicial::gamma(star, sub, {lambda, {}, 16});
            VerifyInstance inst;
            inst.lhs = got;
            inst.rhs = 2.0 * lambda;
            inst.margin = 1e-9 - std::abs(got - 2.0 * lambda);
            inst.note = "two-segment star, lambda=" + std::to_string(lambda);
            report.pass = report.pass && inst.margin >= 0.0;
            report.instances.push_back(std::move(inst));
        }
    }
    return report;
}

}  // namespace

VerifyReport verify_suite(const std::string& name, std::uint64_t seed) {
    if (name == "pyramid") return verify_pyramid(seed);
    if (name == "chain") return verify_chain(seed);
    if (name == "integration_lemma") return verify_integration_lemma(seed);
    if (name == "translation_lemma") return verify_translation_lemma(seed);
    if (name == "kernel_mass") return verify_kernel_mass(seed);
    if (name == "gamma_oracle") return verify_gamma_oracle(seed);
    throw ConfigError("verify_suite: unknown suite " + name);
}

// ---------------------------------------------------------------------------
// Reports

namespace {
std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

nlohmann::json scan_to_json(const ScanResult& scan) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : scan.entries)
        entries.push_back({{"kappa", e.kappa},
                           {"h", e.h},
                           {"raw_energy", e.raw_energy},
                           {"normalized_energy", e.normalized_energy},
                           {"iterations", e.iterations},
                           {"converged", e.converged}});
    return nlohmann::json{{"config", scan.config.to_json()},
                          {"kappas", scan.kappas},
                          {"admissible_fraction", scan.admissible_fraction},
                          {"liminf_estimate", scan.liminf_estimate},
                          {"entries", std::move(entries)}};
}

std::string emit_scan_report(const ScanResult& scan, const std::string& format,
                             const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string stem =
        out_dir + "/" + scan.config.scenario + "_" + std::to_string(scan.config.seed);
    if (format == "json") {
        const std::string path = stem + ".json";
        std::ofstream out(path);
        if (!out) throw ConfigError("emit_scan_report: cannot write " + path);
        out << scan_to_json(scan).dump(2) << '\n';
        return path;
    }
    if (format != "csv") throw ConfigError("emit_scan_report: unknown format " + format);
    const std::string path = stem + ".csv";
    std::ofstream out(path);
    if (!out) throw ConfigError("emit_scan_report: cannot write " + path);
    const int g = scan.config.m - 1;
    out << "kappa";
    for (int a = 0; a < g; ++a) out << ",h" << a;
    out << ",raw_energy,normalized_energy,iterations,converged\n";
    for (const auto& e : scan.entries) {
        out << format_double(e.kappa);
        for (double h : e.h) out << ',' << format_double(h);
        out << ',' << format_double(e.raw_energy) << ',' << format_double(e.normalized_energy)
            << ',' << e.iterations << ',' << (e.converged ? 1 : 0) << '\n';
    }
    return path;
}

std::string emit_verify_report(const VerifyReport& report, std::uint64_t seed,
                               const std::string& format, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string stem = out_dir + "/verify_" + report.name + "_" + std::to_string(seed);
    if (format == "json") {
        nlohmann::json insts = nlohmann::json::array();
        for (const auto& i : report.instances)
            insts.push_back({{"lhs", i.lhs}, {"rhs", i.rhs}, {"margin", i.margin}, {"note", i.note}});
        const std::string path = stem + ".json";
        std::ofstream out(path);
        if (!out) throw ConfigError("emit_verify_report: cannot write " + path);
        out << nlohmann::json{{"name", report.name}, {"pass", report.pass}, {"instances", insts}}
                   .dump(2)
            << '\n';
        return path;
    }
    if (format != "csv") throw ConfigError("emit_verify_report: unknown format " + format);
    const std::string path = stem + ".csv";
    std::ofstream out(path);
    if (!out) throw ConfigError("emit_verify_report: cannot write " + path);
    out << "lhs,rhs,margin,note\n";
    for (const auto& i : report.instances)
        out << format_double(i.lhs) << ',' << format_double(i.rhs) << ',' << format_double(i.margin)
            << ',' << i.note << '\n';
    return path;
}

}  // namespace halftrace::experiments
